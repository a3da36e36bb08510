#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace cqforge {

/// One argumentation scheme: canonical name, prose definition, and the
/// template critical questions that probe arguments of this shape.
struct SchemeEntry {
    std::string name;
    std::string definition;
    std::vector<std::string> template_questions;
};

/// A named collection of scheme entries. The set bundled with the binary is
/// "walton-table6" (18 schemes); alternate sets load from JSON files with the
/// same schema and are usable everywhere the bundled one is.
class TemplateSet {
public:
    /// The compiled-in "walton-table6" set.
    static const TemplateSet& bundled();

    static TemplateSet from_file(const std::filesystem::path& path);
    static TemplateSet from_json(const nlohmann::json& doc, const std::string& source_name);

    const std::string& set_id() const { return set_id_; }
    std::size_t size() const { return entries_.size(); }
    const std::vector<SchemeEntry>& entries() const { return entries_; }

    /// Resolve a scheme by name. Matching is case-insensitive and tolerant of
    /// internal whitespace variants ("cause  to effect" == "Cause to effect").
    /// Throws UnknownSchemeError carrying the nearest canonical names.
    const SchemeEntry& lookup(std::string_view scheme_name) const;

    bool contains(std::string_view scheme_name) const;

    /// Canonical spelling for a (possibly case/whitespace-variant) name.
    /// Throws UnknownSchemeError when the name does not resolve.
    const std::string& canonical_name(std::string_view scheme_name) const;

private:
    TemplateSet() = default;

    std::string set_id_;
    std::vector<SchemeEntry> entries_;               // file order
    std::map<std::string, std::size_t> by_key_;      // normalized key -> index
};

}  // namespace cqforge
