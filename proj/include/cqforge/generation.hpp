#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cqforge/corpus.hpp"
#include "cqforge/llm_gateway.hpp"
#include "cqforge/prompting.hpp"
#include "cqforge/scheme_kb.hpp"

namespace cqforge {

struct CandidateQuestion {
    std::string text;  // normalized, nonempty, ends with "?"
    QuestionOrigin origin;
    int prompt_index = 0;  // which questioner prompt produced it
    int line_index = 0;    // position within that prompt's parsed output
    int run_id = 1;
};

struct CandidatePool {
    std::string intervention_id;
    std::vector<CandidateQuestion> candidates;
    std::vector<std::string> warnings;
};

struct ParsedQuestions {
    std::vector<std::string> questions;
    std::vector<std::string> warnings;
};

/// Split a completion into question lines: strip enumeration markers, drop
/// empty lines silently and non-question lines with a warning, warn when the
/// count differs from `expected_n`. Nothing parseable is an error.
ParsedQuestions parse_questions(const std::string& raw, int expected_n);

/// Run the Questioner stage for one intervention: one generate call per
/// prompt, sequential (order defines provenance). A prompt failure becomes a
/// warning as long as at least one prompt succeeds.
CandidatePool generate_candidates(Backend& backend, const GenParams& params,
                                  const Intervention& intervention, SchemeMode mode,
                                  int n, const TemplateSet& kb, int run_id = 1);

/// Candidates file: submission JSON extended with "origin" and "run" per
/// question. `corpus` supplies intervention texts. Pools may span several
/// runs of the same intervention. Pool warnings and the caller's failure
/// ledger are persisted under "_warnings"/"_failures" so a resumed run
/// reproduces the same report.
void save_candidates(const std::filesystem::path& path, const Corpus& corpus,
                     const std::vector<CandidatePool>& pools,
                     const std::string& config_digest = "",
                     const std::vector<std::string>& failures = {});

struct CandidateFileEntry {
    std::string intervention_id;
    std::string intervention_text;
    std::vector<CandidateQuestion> candidates;
};

struct CandidateFile {
    std::vector<CandidateFileEntry> entries;  // file order
    std::string config_digest;                // empty when absent
    std::vector<std::string> warnings;
    std::vector<std::string> failures;
};

CandidateFile load_candidates(const std::filesystem::path& path);

/// Pool warnings as "<intervention_id>: <warning>" lines, the form they take
/// in "_warnings" and in the experiment ledger.
std::vector<std::string> flatten_pool_warnings(const std::vector<CandidatePool>& pools);

}  // namespace cqforge
