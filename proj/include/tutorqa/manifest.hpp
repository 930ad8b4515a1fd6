#pragma once

#include <map>
#include <string>

#include "json.hpp"

namespace tutorqa {

// Hash of a file's raw bytes, for run manifests.
std::string file_hash_hex(const std::string& path);

// Every CLI command writes one of these beside its artifact: command name,
// effective config, input hashes, output listing. Deliberately excludes
// wall-clock data so identical runs produce identical manifests.
nlohmann::json make_manifest(const std::string& command, const nlohmann::json& config,
                             const std::map<std::string, std::string>& input_hashes,
                             const nlohmann::json& extra = nlohmann::json::object());

void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace tutorqa
