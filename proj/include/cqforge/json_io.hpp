#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

namespace cqforge {

/// Parse a JSON file that must hold a top-level object. Duplicate top-level
/// keys are rejected (nlohmann would silently keep the last one). Member
/// order is preserved.
nlohmann::ordered_json load_json_object(const std::filesystem::path& path);

/// Same contract for a document already in memory; `source_name` is used in
/// error messages.
nlohmann::ordered_json parse_json_object(const std::string& text,
                                         const std::string& source_name);

/// Write pretty-printed JSON with a trailing newline, creating parent
/// directories as needed.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc);
void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& doc);

}  // namespace cqforge
