#include "cqforge/selection.hpp"

#include <algorithm>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "cqforge/error.hpp"
#include "cqforge/json_io.hpp"
#include "cqforge/rng.hpp"
#include "cqforge/text.hpp"

namespace cqforge {

namespace {

constexpr const char* kUnmatched = "Unmatched";

// -1 when no candidate matches: exact normalized casefolded equality first,
// then best token-Jaccard >= threshold with ties to the lower index.
int match_candidate(const std::string& line, const CandidatePool& pool,
                    double jaccard_threshold) {
    const std::string folded = ascii_lower(line);
    for (std::size_t i = 0; i < pool.candidates.size(); ++i)
        if (ascii_lower(pool.candidates[i].text) == folded)
            return static_cast<int>(i);

    const auto line_tokens = alnum_tokens(line);
    int best = -1;
    double best_score = 0.0;
    for (std::size_t i = 0; i < pool.candidates.size(); ++i) {
        const double score = token_jaccard(line_tokens, alnum_tokens(pool.candidates[i].text));
        if (score >= jaccard_threshold && score > best_score) {
            best = static_cast<int>(i);
            best_score = score;
        }
    }
    return best;
}

void fill_from_pool(SelectionResult& result, const CandidatePool& pool, int k,
                    std::set<std::string>& chosen) {
    for (const auto& cand : pool.candidates) {
        if (static_cast<int>(result.selected.size()) >= k) break;
        if (!chosen.insert(ascii_lower(cand.text)).second) continue;
        result.selected.push_back(cand.text);
        result.provenance.push_back(to_string(cand.origin));
    }
}

}  // namespace

SelectionResult select_judge(Backend& backend, const GenParams& params,
                             const Intervention& intervention, const CandidatePool& pool,
                             int k, const TemplateSet& kb, bool include_schemes,
                             double jaccard_threshold) {
    if (pool.candidates.empty())
        throw ValidationError("cannot select from an empty candidate pool");
    if (k < 1) throw ValidationError("selection size must be at least 1");

    std::vector<std::string> candidate_texts;
    candidate_texts.reserve(pool.candidates.size());
    for (const auto& cand : pool.candidates) candidate_texts.push_back(cand.text);

    const std::string prompt =
        build_judge_prompt(intervention, candidate_texts, k, include_schemes, kb);
    const std::string raw = backend.generate(params, prompt);

    SelectionResult result;
    result.intervention_id = intervention.intervention_id;
    result.strategy = "judge(" + params.model + ")";
    result.judge_raw = raw;

    std::vector<std::string> lines;
    try {
        auto parsed = parse_questions(raw, k);
        lines = std::move(parsed.questions);
        for (auto& w : parsed.warnings) result.warnings.push_back(std::move(w));
    } catch (const ParseError&) {
        result.warnings.push_back(
            "judge output had no parseable questions; keeping the first " +
            std::to_string(k) + " candidates");
    }
    if (static_cast<int>(lines.size()) > k) lines.resize(k);

    std::set<std::string> chosen;
    for (const auto& line : lines) {
        const int idx = match_candidate(line, pool, jaccard_threshold);
        const std::string& text = idx >= 0 ? pool.candidates[idx].text : line;
        if (!chosen.insert(ascii_lower(text)).second) {
            result.warnings.push_back("judge repeated a question; duplicate dropped");
            continue;
        }
        result.selected.push_back(text);
        result.provenance.push_back(idx >= 0 ? to_string(pool.candidates[idx].origin)
                                             : kUnmatched);
        if (idx < 0)
            result.warnings.push_back("judge line kept verbatim (no candidate match): \"" +
                                      line + "\"");
    }

    if (static_cast<int>(result.selected.size()) < k) {
        const std::size_t before = result.selected.size();
        fill_from_pool(result, pool, k, chosen);
        if (result.selected.size() > before)
            result.warnings.push_back("judge returned " + std::to_string(before) +
                                      " usable questions; filled " +
                                      std::to_string(result.selected.size() - before) +
                                      " slot(s) from the pool in order");
    }
    return result;
}

SelectionResult select_random(const CandidatePool& pool, int k, std::uint64_t seed) {
    if (pool.candidates.empty())
        throw ValidationError("cannot select from an empty candidate pool");
    if (k < 1) throw ValidationError("selection size must be at least 1");

    std::mt19937_64 rng(seed);
    const auto take = std::min<std::size_t>(k, pool.candidates.size());
    const auto picks = shuffled_prefix(rng, pool.candidates.size(), take);

    SelectionResult result;
    result.intervention_id = pool.intervention_id;
    result.strategy = "random(" + std::to_string(seed) + ")";
    for (std::size_t idx : picks) {
        result.selected.push_back(pool.candidates[idx].text);
        result.provenance.push_back(to_string(pool.candidates[idx].origin));
    }
    return result;
}

SelectionResult select_oracle(const CandidatePool& pool,
                              const std::vector<EvalLabel>& labels, int k) {
    if (pool.candidates.empty())
        throw ValidationError("cannot select from an empty candidate pool");
    if (labels.size() != pool.candidates.size())
        throw ValidationError("oracle labels must be parallel to the candidate pool");
    if (k < 1) throw ValidationError("selection size must be at least 1");

    SelectionResult result;
    result.intervention_id = pool.intervention_id;
    result.strategy = "oracle";

    const EvalLabel priority[] = {EvalLabel::Useful, EvalLabel::Unhelpful,
                                  EvalLabel::Invalid, EvalLabel::NotAbleToEvaluate};
    for (EvalLabel want : priority) {
        for (std::size_t i = 0; i < pool.candidates.size(); ++i) {
            if (static_cast<int>(result.selected.size()) >= k) return result;
            if (labels[i] != want) continue;
            result.selected.push_back(pool.candidates[i].text);
            result.provenance.push_back(to_string(pool.candidates[i].origin));
        }
    }
    return result;
}

void save_selections(const std::filesystem::path& path, const Corpus& corpus,
                     const std::vector<SelectionResult>& selections,
                     const std::string& config_digest,
                     const std::vector<std::string>& failures) {
    nlohmann::json doc = nlohmann::json::object();
    if (!config_digest.empty()) doc["_config_digest"] = config_digest;
    if (!failures.empty()) doc["_failures"] = failures;

    for (const auto& sel : selections) {
        const Intervention* iv = corpus.find(sel.intervention_id);
        if (!iv)
            throw ValidationError("selection for unknown intervention \"" +
                                  sel.intervention_id + "\"");
        if (doc.contains(sel.intervention_id))
            throw ValidationError("duplicate selection for intervention \"" +
                                  sel.intervention_id + "\"");
        nlohmann::json cqs = nlohmann::json::array();
        for (std::size_t i = 0; i < sel.selected.size(); ++i)
            cqs.push_back({{"id", static_cast<int>(i)},
                           {"cq", sel.selected[i]},
                           {"provenance", sel.provenance[i]}});
        nlohmann::json entry = {{"intervention", iv->text},
                                {"strategy", sel.strategy},
                                {"cqs", std::move(cqs)}};
        if (!sel.warnings.empty()) entry["warnings"] = sel.warnings;
        if (sel.judge_raw) entry["judge_raw"] = *sel.judge_raw;
        doc[sel.intervention_id] = std::move(entry);
    }
    write_json_file(path, doc);
}

SelectionFile load_selections(const std::filesystem::path& path) {
    const auto doc = load_json_object(path);
    const std::string source = path.string();

    SelectionFile file;
    for (const auto& [key, node] : doc.items()) {
        if (!key.empty() && key[0] == '_') {
            if (key == "_config_digest" && node.is_string())
                file.config_digest = node.get<std::string>();
            else if (key == "_failures" && node.is_array())
                for (const auto& f : node) file.failures.push_back(f.get<std::string>());
            continue;
        }
        if (!node.is_object() || !node.contains("intervention") ||
            !node["intervention"].is_string() || !node.contains("cqs") ||
            !node["cqs"].is_array())
            throw ValidationError(source + ": entry \"" + key +
                                  "\" is not a selections record");

        LoadedSelection entry;
        entry.intervention_id = key;
        entry.intervention_text = normalize_ws(node["intervention"].get<std::string>());
        if (node.contains("strategy") && node["strategy"].is_string())
            entry.strategy = node["strategy"].get<std::string>();
        if (node.contains("warnings") && node["warnings"].is_array())
            for (const auto& w : node["warnings"])
                entry.warnings.push_back(w.get<std::string>());
        for (const auto& q : node["cqs"]) {
            if (!q.is_object() || !q.contains("cq") || !q["cq"].is_string())
                throw ValidationError(source + ": entry \"" + key +
                                      "\" has a malformed question record");
            entry.selected.push_back(normalize_ws(q["cq"].get<std::string>()));
            entry.provenance.push_back(
                q.contains("provenance") && q["provenance"].is_string()
                    ? q["provenance"].get<std::string>()
                    : std::string(kUnmatched));
        }
        file.entries.push_back(std::move(entry));
    }
    return file;
}

}  // namespace cqforge
