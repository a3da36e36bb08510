#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

namespace cqforge {

/// Parse the TOML subset used by config files into a JSON document:
/// `[section]` and `[a.b]` headers, `key = value` pairs with string, integer,
/// float, boolean, and single-line array values, `#` comments. No multiline
/// strings, no nested arrays, no inline tables.
nlohmann::json parse_toml_subset(const std::string& text, const std::string& source_name);

nlohmann::json load_toml_file(const std::filesystem::path& path);

}  // namespace cqforge
