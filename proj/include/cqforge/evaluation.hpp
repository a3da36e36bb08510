#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cqforge/corpus.hpp"
#include "cqforge/eval_label.hpp"
#include "cqforge/llm_gateway.hpp"
#include "cqforge/selection.hpp"

namespace cqforge {

struct EvalConfig {
    double threshold = 0.6;
    bool strict_greater = false;  // > instead of the default >=
    std::string embedding_model;  // mandatory, no default
    BackendDescriptor embedding_backend;
};

struct EvaluationOutcome {
    std::string question_text;
    EvalLabel label = EvalLabel::NotAbleToEvaluate;
    double best_similarity = -1.0;  // -1 sentinel when there are no references
    std::optional<std::string> best_ref_id;
};

/// One evaluated question with its position, the unit McNemar pairing
/// aligns on.
struct OutcomeRecord {
    std::string intervention_id;
    int slot = 0;
    EvaluationOutcome outcome;
};

struct ScoreReport {
    int n_questions = 0;
    int n_interventions = 0;
    int useful = 0, unhelpful = 0, invalid = 0, not_able = 0;
    double useful_pct = 0, unhelpful_pct = 0, invalid_pct = 0, not_able_pct = 0;
    double punctuation = 0;  // = useful_pct, the task score
    std::string embedding_model;
    double threshold = 0.6;
};

/// (model, normalized text) -> vector, shared across evaluations so sweeps
/// do not re-embed identical references. Concurrent readers, serialized
/// writers; optionally persisted to disk as JSON.
class EmbeddingCache {
public:
    EmbeddingCache() = default;
    explicit EmbeddingCache(std::filesystem::path disk_path);  // loads when present

    std::optional<EmbeddingVector> get(const std::string& model,
                                       const std::string& text) const;
    void put(const std::string& model, const std::string& text, EmbeddingVector vec);
    void save() const;  // no-op without a disk path
    std::size_t size() const;

private:
    mutable std::shared_mutex mu_;
    std::map<std::string, std::map<std::string, EmbeddingVector>> by_model_;
    std::optional<std::filesystem::path> disk_;
};

double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

/// Applies the labeling protocol: embed, argmax cosine over references
/// (ties to the lowest index), take the most-similar reference's label when
/// the similarity clears the threshold, NotAbleToEvaluate otherwise.
class Evaluator {
public:
    Evaluator(Backend& backend, EvalConfig cfg, EmbeddingCache* cache = nullptr);

    EvaluationOutcome label_question(const std::string& question,
                                     const std::vector<ReferenceQuestion>& references);

    /// Labels several questions against one reference set with a single
    /// embedding round trip (modulo cache hits).
    std::vector<EvaluationOutcome> label_batch(
        const std::vector<std::string>& questions,
        const std::vector<ReferenceQuestion>& references);

    const EvalConfig& config() const { return cfg_; }

private:
    std::vector<EmbeddingVector> embeddings_for(const std::vector<std::string>& texts);

    Backend& backend_;
    EvalConfig cfg_;
    EmbeddingCache* cache_;
};

ScoreReport score(const std::vector<EvaluationOutcome>& outcomes, int n_interventions,
                  const EvalConfig& cfg);

struct AggregateStat {
    double mean = 0.0;
    double stddev = 0.0;  // sample std (n-1 denominator), 0 when n = 1
};

struct AggregateReport {
    AggregateStat useful_pct, unhelpful_pct, invalid_pct, not_able_pct, punctuation;
    int runs = 0;
};

AggregateReport aggregate_runs(const std::vector<ScoreReport>& reports);

struct McNemarInput {
    long long b = 0;  // A useful, B not
    long long c = 0;  // B useful, A not
};

/// Exact two-sided binomial test: min(1, 2 * sum_{k=max(b,c)}^{b+c} C(b+c,k) / 2^(b+c)).
double mcnemar_exact(const McNemarInput& input);

/// Continuity-corrected chi-square variant, for cross-checking only.
double mcnemar_chi2(const McNemarInput& input);

/// Pair two outcome lists by (intervention_id, slot); everything that is not
/// Useful counts as "not Useful".
McNemarInput pair_outcomes(const std::vector<OutcomeRecord>& a,
                           const std::vector<OutcomeRecord>& b);

struct ProvenanceStats {
    int scheme = 0;
    int no_scheme = 0;
    int unmatched = 0;           // excluded from the fraction's denominator
    double fraction = 0.0;       // scheme / (scheme + no_scheme), 0 when no matches
};

ProvenanceStats provenance_fraction(const std::vector<SelectionResult>& selections);
ProvenanceStats provenance_fraction(const std::vector<std::string>& provenance_tags);

/// Summary block shared by outcome files and experiment reports.
nlohmann::json summary_to_json(const ScoreReport& summary);

/// Report file: {"per_question": [...], "summary": {...}} plus optional
/// "_config_digest" and "_failures".
void save_report(const std::filesystem::path& path,
                 const std::vector<OutcomeRecord>& per_question,
                 const ScoreReport& summary, const std::string& config_digest = "",
                 const std::vector<std::string>& failures = {});

struct LoadedReport {
    std::vector<OutcomeRecord> per_question;
    ScoreReport summary;
    std::string config_digest;  // empty when absent
    std::vector<std::string> failures;
};

LoadedReport load_report(const std::filesystem::path& path);

}  // namespace cqforge
