#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cqforge/corpus.hpp"
#include "cqforge/evaluation.hpp"
#include "cqforge/llm_gateway.hpp"
#include "cqforge/prompting.hpp"

namespace cqforge {

/// Backend + generation parameters for one pipeline role.
struct RoleConfig {
    BackendDescriptor backend;
    GenParams params;
};

struct ExperimentConfig {
    std::filesystem::path corpus_path;
    std::optional<SplitSpec> split;
    std::string split_part = "test";  // which part to run on when split is set

    RoleConfig questioner;
    std::optional<RoleConfig> judge;

    SchemeMode mode = SchemeMode::Without;
    int n = 3;
    int k = 3;
    std::vector<std::string> strategies = {"judge"};
    int runs = 1;
    std::vector<std::uint64_t> seeds;  // resolved to 1..runs when empty

    EvalConfig eval;
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> kb_path;  // bundled KB when absent
    std::optional<std::filesystem::path> embedding_cache;

    bool judge_include_schemes = true;
    double failure_threshold = 0.5;  // a stage aborts past this failure fraction
    int workers = 2;
};

ExperimentConfig config_from_toml(const std::filesystem::path& path);

/// Bundled presets mirroring the three submitted pipeline shapes: "sub1"
/// (Llama 3.1 questioner + Gemma 2 judge, both-single 4+4), "sub2" (judge
/// swapped for gpt-4o), "sub3" (gpt-4o in both roles). Corpus, out_dir, and
/// embedding model still need to be supplied.
ExperimentConfig preset_config(const std::string& name);

/// Apply a preset onto an existing config: pipeline-shape fields only.
void apply_preset(ExperimentConfig& cfg, const std::string& name);

/// Fill derived defaults (seeds), check invariants. Called by run_experiment.
void resolve_config(ExperimentConfig& cfg);

/// Canonical JSON image of a resolved config. out_dir is excluded from the
/// digest so the same experiment written elsewhere stays the same experiment.
nlohmann::json config_to_json(const ExperimentConfig& cfg, bool include_out_dir);
std::string config_digest(const ExperimentConfig& cfg);

struct StrategyReport {
    std::string strategy;
    std::vector<ScoreReport> per_run;
    AggregateReport aggregate;
    ProvenanceStats provenance;
    bool has_provenance = false;  // provenance is meaningful for Both* modes
};

struct ExperimentReport {
    std::string digest;
    std::vector<StrategyReport> strategies;
    std::vector<std::string> warnings;
    std::vector<std::string> failures;  // per-intervention ledger
    std::filesystem::path report_path;
    nlohmann::json document;  // report.json as written
};

/// Run generate -> select -> evaluate -> score for every run and strategy,
/// persisting every intermediate artifact under out_dir/<digest>/run<i>/.
/// With `resume`, stages whose output files exist with a matching digest are
/// loaded instead of recomputed.
ExperimentReport run_experiment(const ExperimentConfig& cfg, bool resume = true);

enum class TableLayout { ModelGrid, SchemeAblation, CountSweep, StrategyCompare };

TableLayout table_layout_from_string(std::string_view s);

/// Render loaded report.json documents as an aligned text table (or CSV).
std::string render_table(const std::vector<nlohmann::json>& reports, TableLayout layout,
                         bool csv);

}  // namespace cqforge
