#pragma once

#include <cstdint>
#include <string>

namespace tutorqa {

inline constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr uint64_t kFnvPrime = 0x100000001b3ULL;

inline uint64_t fnv1a(const void* data, size_t len, uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

inline uint64_t fnv1a(const std::string& s, uint64_t h = kFnvOffset) {
  return fnv1a(s.data(), s.size(), h);
}

// Feeds a field separator so that ("ab","c") and ("a","bc") hash differently.
inline uint64_t fnv1a_field(const std::string& s, uint64_t h) {
  h = fnv1a(s.data(), s.size(), h);
  unsigned char sep = 0x1f;
  return fnv1a(&sep, 1, h);
}

inline uint64_t fnv1a_field(uint64_t v, uint64_t h) {
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  return fnv1a(bytes, 8, h);
}

inline std::string hash_hex(uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace tutorqa
