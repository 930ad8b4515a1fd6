#include "tutorqa/manifest.hpp"

#include <fstream>
#include <sstream>

#include "tutorqa/error.hpp"
#include "tutorqa/hash.hpp"

namespace tutorqa {

std::string file_hash_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("cannot open file for hashing: " + path);
  uint64_t h = kFnvOffset;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a(buf, static_cast<size_t>(in.gcount()), h);
  }
  return hash_hex(h);
}

nlohmann::json make_manifest(const std::string& command, const nlohmann::json& config,
                             const std::map<std::string, std::string>& input_hashes,
                             const nlohmann::json& extra) {
  nlohmann::json m;
  m["command"] = command;
  m["config"] = config;
  m["inputs"] = nlohmann::json::object();
  for (const auto& [name, hash] : input_hashes) m["inputs"][name] = hash;
  if (!extra.empty()) m["results"] = extra;
  return m;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw runtime_error("cannot write file: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace tutorqa
