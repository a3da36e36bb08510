#include "cqforge/corpus.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cqforge/error.hpp"
#include "cqforge/json_io.hpp"
#include "cqforge/rng.hpp"
#include "cqforge/text.hpp"

namespace cqforge {

AnnotationLabel annotation_label_from_string(std::string_view s) {
    if (s == "Useful") return AnnotationLabel::Useful;
    if (s == "Unhelpful") return AnnotationLabel::Unhelpful;
    if (s == "Invalid") return AnnotationLabel::Invalid;
    throw ValidationError("unknown annotation label \"" + std::string(s) +
                          "\" (expected Useful, Unhelpful, or Invalid)");
}

std::string_view to_string(AnnotationLabel label) {
    switch (label) {
        case AnnotationLabel::Useful: return "Useful";
        case AnnotationLabel::Unhelpful: return "Unhelpful";
        case AnnotationLabel::Invalid: return "Invalid";
    }
    return "Useful";
}

const Intervention* Corpus::find(std::string_view intervention_id) const {
    for (const auto& iv : interventions)
        if (iv.intervention_id == intervention_id) return &iv;
    return nullptr;
}

namespace {

using ojson = nlohmann::ordered_json;

// Accumulates one line per offending intervention so a broken file is
// reported in a single pass.
struct ProblemLog {
    std::vector<std::string> lines;

    void add(const std::string& id, const std::string& what) {
        lines.push_back("\"" + id + "\": " + what);
    }
    void raise_if_any(const std::string& source) const {
        if (lines.empty()) return;
        std::ostringstream msg;
        msg << source << ": " << lines.size() << " validation problem"
            << (lines.size() == 1 ? "" : "s") << ":";
        for (const auto& line : lines) msg << "\n  " << line;
        throw ValidationError(msg.str());
    }
};

// Field-name adapter: returns the value under the first present alias.
const ojson* pick_field(const ojson& obj, std::initializer_list<const char*> names) {
    for (const char* n : names) {
        auto it = obj.find(n);
        if (it != obj.end()) return &*it;
    }
    return nullptr;
}

bool known_intervention_key(const std::string& key) {
    static const std::set<std::string> known = {
        "intervention", "text", "speaker", "schemes", "scheme",
        "cqs", "reference_questions", "references"};
    return known.count(key) > 0;
}

std::optional<ReferenceQuestion> parse_reference(const ojson& node, std::size_t index,
                                                 const std::string& iv_id,
                                                 ProblemLog& problems) {
    if (!node.is_object()) {
        problems.add(iv_id, "reference " + std::to_string(index) + " is not an object");
        return std::nullopt;
    }
    ReferenceQuestion ref;
    if (auto it = node.find("id"); it != node.end()) {
        if (it->is_string())
            ref.ref_id = it->get<std::string>();
        else if (it->is_number_integer())
            ref.ref_id = std::to_string(it->get<long long>());
        else {
            problems.add(iv_id, "reference " + std::to_string(index) + " has a non-string id");
            return std::nullopt;
        }
    } else {
        ref.ref_id = "r" + std::to_string(index);
    }

    const ojson* text = pick_field(node, {"cq", "question", "text"});
    if (!text || !text->is_string()) {
        problems.add(iv_id, "reference " + std::to_string(index) + " lacks question text");
        return std::nullopt;
    }
    ref.text = normalize_ws(text->get<std::string>());
    if (ref.text.empty()) {
        problems.add(iv_id, "reference " + std::to_string(index) + " has empty question text");
        return std::nullopt;
    }

    auto label_it = node.find("label");
    if (label_it == node.end() || !label_it->is_string()) {
        problems.add(iv_id, "reference \"" + ref.ref_id + "\" lacks a label");
        return std::nullopt;
    }
    try {
        ref.label = annotation_label_from_string(label_it->get<std::string>());
    } catch (const ValidationError& e) {
        problems.add(iv_id, std::string(e.what()) + " on reference \"" + ref.ref_id + "\"");
        return std::nullopt;
    }
    return ref;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path, const TemplateSet& kb) {
    const ojson doc = load_json_object(path);
    const std::string source = path.string();

    Corpus corpus;
    corpus.name = path.stem().string();
    ProblemLog problems;

    for (const auto& [iv_id, node] : doc.items()) {
        if (!iv_id.empty() && iv_id[0] == '_') continue;  // reserved metadata keys
        if (!node.is_object()) {
            problems.add(iv_id, "entry is not an object");
            continue;
        }

        Intervention iv;
        iv.intervention_id = iv_id;

        for (const auto& [key, value] : node.items()) {
            (void)value;
            if (!known_intervention_key(key))
                problems.add(iv_id, "unknown field \"" + key + "\"");
        }

        const ojson* text = pick_field(node, {"intervention", "text"});
        if (!text || !text->is_string()) {
            problems.add(iv_id, "missing intervention text");
            continue;
        }
        iv.text = normalize_ws(text->get<std::string>());
        if (iv.text.empty()) {
            problems.add(iv_id, "intervention text is empty");
            continue;
        }

        if (auto it = node.find("speaker"); it != node.end()) {
            if (!it->is_string()) {
                problems.add(iv_id, "speaker is not a string");
                continue;
            }
            iv.speaker = it->get<std::string>();
        }

        std::vector<std::string> raw_schemes;
        if (const ojson* schemes = pick_field(node, {"schemes", "scheme"})) {
            if (schemes->is_string()) {
                raw_schemes.push_back(schemes->get<std::string>());
            } else if (schemes->is_array()) {
                bool ok = true;
                for (const auto& s : *schemes) {
                    if (!s.is_string()) {
                        problems.add(iv_id, "schemes must be strings");
                        ok = false;
                        break;
                    }
                    raw_schemes.push_back(s.get<std::string>());
                }
                if (!ok) continue;
            } else {
                problems.add(iv_id, "schemes must be a string or array of strings");
                continue;
            }
        }
        if (raw_schemes.size() > 6) {
            problems.add(iv_id, "carries " + std::to_string(raw_schemes.size()) +
                                    " schemes (at most 6 allowed)");
            continue;
        }
        bool scheme_ok = true;
        for (const auto& name : raw_schemes) {
            if (!kb.contains(name)) {
                problems.add(iv_id, "unknown scheme \"" + name + "\"");
                scheme_ok = false;
                continue;
            }
            iv.schemes.push_back(kb.canonical_name(name));
        }
        if (!scheme_ok) continue;

        if (const ojson* refs = pick_field(node, {"cqs", "reference_questions", "references"})) {
            if (!refs->is_array()) {
                problems.add(iv_id, "reference questions must be an array");
                continue;
            }
            bool refs_ok = true;
            std::set<std::string> seen_ids;
            for (std::size_t i = 0; i < refs->size(); ++i) {
                auto ref = parse_reference((*refs)[i], i, iv_id, problems);
                if (!ref) {
                    refs_ok = false;
                    continue;
                }
                if (!seen_ids.insert(ref->ref_id).second) {
                    problems.add(iv_id, "duplicate reference id \"" + ref->ref_id + "\"");
                    refs_ok = false;
                    continue;
                }
                iv.references.push_back(std::move(*ref));
            }
            if (!refs_ok) continue;
        }

        corpus.interventions.push_back(std::move(iv));
    }

    problems.raise_if_any(source);
    return corpus;
}

CorpusSplit split_corpus(const Corpus& corpus, const SplitSpec& spec) {
    const std::size_t total = spec.train + spec.val + spec.test;
    if (total != corpus.size())
        throw ValidationError("split sizes sum to " + std::to_string(total) +
                              " but corpus \"" + corpus.name + "\" has " +
                              std::to_string(corpus.size()) + " interventions");

    std::mt19937_64 rng(spec.seed);
    const auto order = shuffled_prefix(rng, corpus.size(), corpus.size());

    enum Part { kTrain = 0, kVal = 1, kTest = 2 };
    std::vector<Part> membership(corpus.size(), kTest);
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i < spec.train)
            membership[order[i]] = kTrain;
        else if (i < spec.train + spec.val)
            membership[order[i]] = kVal;
        else
            membership[order[i]] = kTest;
    }

    CorpusSplit split;
    split.train.name = corpus.name + ".train";
    split.val.name = corpus.name + ".val";
    split.test.name = corpus.name + ".test";
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        switch (membership[i]) {
            case kTrain: split.train.interventions.push_back(corpus.interventions[i]); break;
            case kVal: split.val.interventions.push_back(corpus.interventions[i]); break;
            case kTest: split.test.interventions.push_back(corpus.interventions[i]); break;
        }
    }
    return split;
}

void save_generated(const std::filesystem::path& path,
                    const std::vector<SubmissionEntry>& entries, int k) {
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& entry : entries) {
        if (static_cast<int>(entry.questions.size()) != k)
            throw ValidationError("entry \"" + entry.intervention_id + "\" has " +
                                  std::to_string(entry.questions.size()) +
                                  " questions, expected " + std::to_string(k));
        if (doc.contains(entry.intervention_id))
            throw ValidationError("duplicate intervention id \"" +
                                  entry.intervention_id + "\" in submission entries");
        nlohmann::json cqs = nlohmann::json::array();
        for (std::size_t i = 0; i < entry.questions.size(); ++i)
            cqs.push_back({{"id", static_cast<int>(i)}, {"cq", entry.questions[i]}});
        doc[entry.intervention_id] = {{"intervention", entry.intervention_text},
                                      {"cqs", std::move(cqs)}};
    }
    write_json_file(path, doc);
}

std::vector<SubmissionEntry> load_generated(const std::filesystem::path& path) {
    const ojson doc = load_json_object(path);
    const std::string source = path.string();

    std::vector<SubmissionEntry> entries;
    for (const auto& [iv_id, node] : doc.items()) {
        if (!iv_id.empty() && iv_id[0] == '_') continue;
        if (!node.is_object())
            throw ValidationError(source + ": entry \"" + iv_id + "\" is not an object");

        SubmissionEntry entry;
        entry.intervention_id = iv_id;

        const ojson* text = pick_field(node, {"intervention", "text"});
        if (!text || !text->is_string())
            throw ValidationError(source + ": entry \"" + iv_id + "\" lacks intervention text");
        entry.intervention_text = normalize_ws(text->get<std::string>());

        auto cqs_it = node.find("cqs");
        if (cqs_it == node.end() || !cqs_it->is_array())
            throw ValidationError(source + ": entry \"" + iv_id + "\" lacks a \"cqs\" array");

        int expected_id = 0;
        for (const auto& q : *cqs_it) {
            if (!q.is_object())
                throw ValidationError(source + ": entry \"" + iv_id +
                                      "\" has a non-object question record");
            auto id_it = q.find("id");
            if (id_it == q.end() || !id_it->is_number_integer() ||
                id_it->get<int>() != expected_id)
                throw ValidationError(source + ": entry \"" + iv_id +
                                      "\" question ids must be 0-based positions");
            ++expected_id;
            const ojson* qtext = pick_field(q, {"cq", "question", "text"});
            if (!qtext || !qtext->is_string())
                throw ValidationError(source + ": entry \"" + iv_id +
                                      "\" has a question record without text");
            entry.questions.push_back(normalize_ws(qtext->get<std::string>()));
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

}  // namespace cqforge
