#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cqforge/corpus.hpp"
#include "cqforge/eval_label.hpp"
#include "cqforge/generation.hpp"
#include "cqforge/llm_gateway.hpp"
#include "cqforge/prompting.hpp"

namespace cqforge {

/// The final k questions for one intervention, with per-question provenance
/// ("NoScheme", "Scheme(...)", or "Unmatched" when a judge line could not be
/// mapped back to a candidate).
struct SelectionResult {
    std::string intervention_id;
    std::vector<std::string> selected;
    std::vector<std::string> provenance;  // parallel to selected
    std::string strategy;                 // "judge(<model>)", "random(<seed>)", "oracle"
    std::optional<std::string> judge_raw;
    std::vector<std::string> warnings;
};

/// LLM judge: render the judge prompt, parse the completion, map each line
/// back to a candidate (normalized exact match, else token-Jaccard >= 0.5,
/// ties to the lower index), fill any shortfall from the pool in order.
SelectionResult select_judge(Backend& backend, const GenParams& params,
                             const Intervention& intervention, const CandidatePool& pool,
                             int k, const TemplateSet& kb, bool include_schemes = true,
                             double jaccard_threshold = 0.5);

/// Uniform sample without replacement; order = draw order.
SelectionResult select_random(const CandidatePool& pool, int k, std::uint64_t seed);

/// Label-aware upper bound: fill slots by priority Useful > Unhelpful >
/// Invalid > NotAbleToEvaluate, pool order within a class. `labels` is
/// parallel to pool.candidates.
SelectionResult select_oracle(const CandidatePool& pool,
                              const std::vector<EvalLabel>& labels, int k);

/// Selections file: submission JSON extended with per-question "provenance"
/// and per-entry "strategy" / "warnings" / "judge_raw". The caller's failure
/// ledger goes under "_failures" so a resumed run reproduces the same report.
void save_selections(const std::filesystem::path& path, const Corpus& corpus,
                     const std::vector<SelectionResult>& selections,
                     const std::string& config_digest = "",
                     const std::vector<std::string>& failures = {});

struct LoadedSelection {
    std::string intervention_id;
    std::string intervention_text;
    std::vector<std::string> selected;
    std::vector<std::string> provenance;
    std::string strategy;
    std::vector<std::string> warnings;
};

struct SelectionFile {
    std::vector<LoadedSelection> entries;  // file order
    std::string config_digest;             // empty when absent
    std::vector<std::string> failures;
};

SelectionFile load_selections(const std::filesystem::path& path);

}  // namespace cqforge
