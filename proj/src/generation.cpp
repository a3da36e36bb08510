#include "cqforge/generation.hpp"

#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cqforge/error.hpp"
#include "cqforge/json_io.hpp"
#include "cqforge/text.hpp"

namespace cqforge {

namespace {

constexpr std::size_t kMaxQuestionLength = 500;

std::vector<std::string> split_lines(const std::string& raw) {
    std::vector<std::string> lines;
    std::string current;
    for (char c : raw) {
        if (c == '\n') {
            lines.push_back(current);
            current.clear();
        } else if (c != '\r') {
            current += c;
        }
    }
    lines.push_back(current);
    return lines;
}

std::string preview(const std::string& s) {
    return s.size() <= 60 ? s : s.substr(0, 57) + "...";
}

}  // namespace

ParsedQuestions parse_questions(const std::string& raw, int expected_n) {
    ParsedQuestions out;
    for (const auto& line : split_lines(raw)) {
        const std::string question = normalize_ws(strip_list_marker(line));
        if (question.empty()) continue;
        if (question.back() != '?') {
            out.warnings.push_back("dropped non-question line: \"" + preview(question) + "\"");
            continue;
        }
        out.questions.push_back(question);
    }
    if (out.questions.empty())
        throw ParseError("completion contains no parseable questions");
    if (static_cast<int>(out.questions.size()) != expected_n)
        out.warnings.push_back("expected " + std::to_string(expected_n) +
                               " questions, parsed " +
                               std::to_string(out.questions.size()));
    return out;
}

CandidatePool generate_candidates(Backend& backend, const GenParams& params,
                                  const Intervention& intervention, SchemeMode mode,
                                  int n, const TemplateSet& kb, int run_id) {
    if (n < 1) throw ValidationError("question count must be at least 1");

    auto built = build_questioner_prompts(intervention, mode, n, kb);

    CandidatePool pool;
    pool.intervention_id = intervention.intervention_id;
    pool.warnings = std::move(built.warnings);

    std::set<std::string> seen;  // normalized casefolded texts
    int succeeded = 0;
    std::vector<std::string> failures;

    for (std::size_t pi = 0; pi < built.prompts.size(); ++pi) {
        const auto& prompt = built.prompts[pi];
        std::string raw;
        try {
            raw = backend.generate(params, prompt.text);
        } catch (const Error& e) {
            failures.push_back("prompt " + std::to_string(pi) + " failed: " + e.what());
            continue;
        }

        ParsedQuestions parsed;
        try {
            parsed = parse_questions(raw, prompt.expected_questions);
        } catch (const ParseError& e) {
            failures.push_back("prompt " + std::to_string(pi) + " failed: " + e.what());
            continue;
        }
        ++succeeded;
        for (auto& w : parsed.warnings)
            pool.warnings.push_back("prompt " + std::to_string(pi) + ": " + w);

        if (static_cast<int>(parsed.questions.size()) > prompt.expected_questions) {
            pool.warnings.push_back("prompt " + std::to_string(pi) + ": truncated to the first " +
                                    std::to_string(prompt.expected_questions) + " questions");
            parsed.questions.resize(prompt.expected_questions);
        }

        const bool split_origin =
            mode == SchemeMode::BothSingle && prompt.origin.kind == QuestionOrigin::Kind::Scheme;
        for (std::size_t li = 0; li < parsed.questions.size(); ++li) {
            std::string& text = parsed.questions[li];
            if (text.size() > kMaxQuestionLength) {
                pool.warnings.push_back("prompt " + std::to_string(pi) + ": dropped question over " +
                                        std::to_string(kMaxQuestionLength) + " characters");
                continue;
            }
            if (!seen.insert(ascii_lower(text)).second) {
                pool.warnings.push_back("collapsed duplicate question: \"" + preview(text) + "\"");
                continue;
            }
            CandidateQuestion cand;
            cand.text = std::move(text);
            // A single BothSingle prompt yields n scheme-free then n
            // scheme-conditioned questions; split provenance positionally.
            cand.origin = (split_origin && static_cast<int>(li) < n)
                              ? QuestionOrigin::no_scheme()
                              : prompt.origin;
            cand.prompt_index = static_cast<int>(pi);
            cand.line_index = static_cast<int>(li);
            cand.run_id = run_id;
            pool.candidates.push_back(std::move(cand));
        }
    }

    if (succeeded == 0) {
        std::string msg = "all prompts failed for intervention \"" +
                          intervention.intervention_id + "\"";
        for (const auto& f : failures) msg += "\n  " + f;
        throw Error(msg);
    }
    for (const auto& f : failures) pool.warnings.push_back(f);
    return pool;
}

std::vector<std::string> flatten_pool_warnings(const std::vector<CandidatePool>& pools) {
    std::vector<std::string> lines;
    for (const auto& pool : pools)
        for (const auto& w : pool.warnings)
            lines.push_back(pool.intervention_id + ": " + w);
    return lines;
}

void save_candidates(const std::filesystem::path& path, const Corpus& corpus,
                     const std::vector<CandidatePool>& pools,
                     const std::string& config_digest,
                     const std::vector<std::string>& failures) {
    nlohmann::json doc = nlohmann::json::object();
    if (!config_digest.empty()) doc["_config_digest"] = config_digest;
    if (const auto warnings = flatten_pool_warnings(pools); !warnings.empty())
        doc["_warnings"] = warnings;
    if (!failures.empty()) doc["_failures"] = failures;

    for (const auto& pool : pools) {
        const Intervention* iv = corpus.find(pool.intervention_id);
        if (!iv)
            throw ValidationError("pool for unknown intervention \"" +
                                  pool.intervention_id + "\"");
        auto& entry = doc[pool.intervention_id];
        if (entry.is_null()) {
            entry["intervention"] = iv->text;
            entry["cqs"] = nlohmann::json::array();
        }
        auto& cqs = entry["cqs"];
        for (const auto& cand : pool.candidates) {
            cqs.push_back({{"id", static_cast<int>(cqs.size())},
                           {"cq", cand.text},
                           {"origin", to_string(cand.origin)},
                           {"run", cand.run_id}});
        }
    }
    write_json_file(path, doc);
}

CandidateFile load_candidates(const std::filesystem::path& path) {
    const auto doc = load_json_object(path);
    const std::string source = path.string();

    CandidateFile file;
    for (const auto& [key, node] : doc.items()) {
        if (!key.empty() && key[0] == '_') {
            if (key == "_config_digest" && node.is_string())
                file.config_digest = node.get<std::string>();
            else if (key == "_warnings" && node.is_array())
                for (const auto& w : node) file.warnings.push_back(w.get<std::string>());
            else if (key == "_failures" && node.is_array())
                for (const auto& f : node) file.failures.push_back(f.get<std::string>());
            continue;
        }
        if (!node.is_object() || !node.contains("intervention") ||
            !node["intervention"].is_string() || !node.contains("cqs") ||
            !node["cqs"].is_array())
            throw ValidationError(source + ": entry \"" + key +
                                  "\" is not a candidates record");

        CandidateFileEntry entry;
        entry.intervention_id = key;
        entry.intervention_text = normalize_ws(node["intervention"].get<std::string>());
        for (const auto& q : node["cqs"]) {
            if (!q.is_object() || !q.contains("cq") || !q["cq"].is_string())
                throw ValidationError(source + ": entry \"" + key +
                                      "\" has a malformed question record");
            CandidateQuestion cand;
            cand.text = normalize_ws(q["cq"].get<std::string>());
            if (q.contains("origin") && q["origin"].is_string())
                cand.origin = origin_from_string(q["origin"].get<std::string>());
            if (q.contains("run") && q["run"].is_number_integer())
                cand.run_id = q["run"].get<int>();
            cand.line_index = static_cast<int>(entry.candidates.size());
            entry.candidates.push_back(std::move(cand));
        }
        file.entries.push_back(std::move(entry));
    }
    return file;
}

}  // namespace cqforge
