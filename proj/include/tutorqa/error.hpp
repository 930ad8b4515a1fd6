#pragma once

#include <stdexcept>
#include <string>

namespace tutorqa {

// Error taxonomy drives CLI exit codes: validation failures exit 1,
// runtime failures exit 2.
enum class ErrorKind { validation, runtime };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error validation_error(const std::string& msg) { return Error(ErrorKind::validation, msg); }
inline Error runtime_error(const std::string& msg) { return Error(ErrorKind::runtime, msg); }

}  // namespace tutorqa
