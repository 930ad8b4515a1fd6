#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tutorqa/error.hpp"

namespace tutorqa {

inline std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open file: " + path);
  std::vector<nlohmann::json> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw validation_error(path + ":" + std::to_string(lineno) + ": parse error: " + e.what());
    }
  }
  return out;
}

inline void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& rows) {
  std::ofstream out(path);
  if (!out) throw runtime_error("cannot write file: " + path);
  for (const auto& row : rows) out << row.dump() << "\n";
}

}  // namespace tutorqa
