#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cqforge {

/// Strip leading and trailing ASCII whitespace.
std::string trim(std::string_view s);

/// Trim and collapse every internal run of whitespace to a single space.
/// This is the canonical text normalization applied to interventions,
/// reference questions, and generated questions on load.
std::string normalize_ws(std::string_view s);

/// ASCII-only lowercasing; bytes outside [A-Z] pass through untouched.
std::string ascii_lower(std::string_view s);

/// Lowercased alphanumeric token runs, in order of appearance.
std::vector<std::string> alnum_tokens(std::string_view s);

/// Jaccard coefficient of the two token SETS (duplicates ignored).
/// Both empty => 0.
double token_jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// 64-bit FNV-1a over the raw bytes.
std::uint64_t fnv1a64(std::string_view s);

/// fnv1a64 continuation, for hashing several fields into one digest.
std::uint64_t fnv1a64(std::string_view s, std::uint64_t state);

std::string to_hex(std::uint64_t v);

/// Levenshtein edit distance (bytes).
std::size_t levenshtein(std::string_view a, std::string_view b);

/// Remove one leading list marker: "1." / "23)" / "-" / "*" / "•" / "Q7:".
/// Surrounding whitespace around the marker is consumed as well.
std::string strip_list_marker(std::string_view line);

}  // namespace cqforge
