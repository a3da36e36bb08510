#include "cqforge/scheme_kb.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cqforge/error.hpp"
#include "cqforge/text.hpp"

// Defined in the generated kb_data.cpp.
extern "C" const char* cqforge_bundled_kb_json();

namespace cqforge {

namespace {

using nlohmann::json;

// Lookup key: lowercased, whitespace runs collapsed.
std::string scheme_key(std::string_view name) { return ascii_lower(normalize_ws(name)); }

}  // namespace

const TemplateSet& TemplateSet::bundled() {
    static const TemplateSet set = [] {
        return TemplateSet::from_json(json::parse(cqforge_bundled_kb_json()), "<bundled>");
    }();
    return set;
}

TemplateSet TemplateSet::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open template set file: " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("template set " + path.string() + ": " + e.what());
    }
    return from_json(doc, path.string());
}

TemplateSet TemplateSet::from_json(const json& doc, const std::string& source_name) {
    auto fail = [&](const std::string& msg) -> ParseError {
        return ParseError("template set " + source_name + ": " + msg);
    };

    if (!doc.is_object() || !doc.contains("set_id") || !doc.contains("schemes"))
        throw fail("expected object with \"set_id\" and \"schemes\"");
    if (!doc["set_id"].is_string()) throw fail("\"set_id\" must be a string");
    if (!doc["schemes"].is_array()) throw fail("\"schemes\" must be an array");

    TemplateSet set;
    set.set_id_ = doc["set_id"].get<std::string>();

    for (const auto& item : doc["schemes"]) {
        if (!item.is_object() || !item.contains("name") || !item.contains("definition") ||
            !item.contains("templates"))
            throw fail("each scheme needs \"name\", \"definition\", \"templates\"");

        SchemeEntry entry;
        entry.name = normalize_ws(item["name"].get<std::string>());
        entry.definition = normalize_ws(item["definition"].get<std::string>());
        if (entry.name.empty()) throw fail("scheme with empty name");
        if (entry.definition.empty()) throw fail("scheme \"" + entry.name + "\": empty definition");

        if (!item["templates"].is_array() || item["templates"].empty())
            throw fail("scheme \"" + entry.name + "\": needs at least one template question");
        for (const auto& q : item["templates"]) {
            std::string text = normalize_ws(q.get<std::string>());
            if (text.empty() || text.back() != '?')
                throw fail("scheme \"" + entry.name + "\": template question must end with '?': \"" +
                           text + "\"");
            entry.template_questions.push_back(std::move(text));
        }

        const std::string key = scheme_key(entry.name);
        if (set.by_key_.count(key))
            throw ValidationError("template set " + source_name + ": duplicate scheme name \"" +
                                  entry.name + "\"");
        set.by_key_.emplace(key, set.entries_.size());
        set.entries_.push_back(std::move(entry));
    }
    return set;
}

const SchemeEntry& TemplateSet::lookup(std::string_view scheme_name) const {
    const std::string key = scheme_key(scheme_name);
    auto it = by_key_.find(key);
    if (it != by_key_.end()) return entries_[it->second];

    // Rank canonical names by edit distance to the query.
    std::vector<std::pair<std::size_t, std::string>> ranked;
    ranked.reserve(entries_.size());
    for (const auto& e : entries_) ranked.emplace_back(levenshtein(key, scheme_key(e.name)), e.name);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<std::string> suggestions;
    std::ostringstream msg;
    msg << "unknown scheme \"" << scheme_name << "\" in set \"" << set_id_ << "\"";
    if (!ranked.empty()) {
        msg << "; nearest:";
        for (std::size_t i = 0; i < ranked.size() && i < 3; ++i) {
            suggestions.push_back(ranked[i].second);
            msg << (i ? ", " : " ") << "\"" << ranked[i].second << "\"";
        }
    }
    throw UnknownSchemeError(msg.str(), std::string(scheme_name), std::move(suggestions));
}

bool TemplateSet::contains(std::string_view scheme_name) const {
    return by_key_.count(scheme_key(scheme_name)) > 0;
}

const std::string& TemplateSet::canonical_name(std::string_view scheme_name) const {
    return lookup(scheme_name).name;
}

}  // namespace cqforge
