#include "cqforge/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "cqforge/error.hpp"
#include "cqforge/json_io.hpp"
#include "cqforge/text.hpp"

namespace cqforge {

std::string_view to_string(EvalLabel label) {
    switch (label) {
        case EvalLabel::Useful: return "Useful";
        case EvalLabel::Unhelpful: return "Unhelpful";
        case EvalLabel::Invalid: return "Invalid";
        case EvalLabel::NotAbleToEvaluate: return "NotAbleToEvaluate";
    }
    return "NotAbleToEvaluate";
}

EvalLabel eval_label_from_string(std::string_view s) {
    if (s == "Useful") return EvalLabel::Useful;
    if (s == "Unhelpful") return EvalLabel::Unhelpful;
    if (s == "Invalid") return EvalLabel::Invalid;
    if (s == "NotAbleToEvaluate") return EvalLabel::NotAbleToEvaluate;
    throw ValidationError("unknown evaluation label \"" + std::string(s) + "\"");
}

EmbeddingCache::EmbeddingCache(std::filesystem::path disk_path) : disk_(std::move(disk_path)) {
    if (!std::filesystem::exists(*disk_)) return;
    const auto doc = load_json_object(*disk_);
    for (const auto& [model, texts] : doc.items()) {
        if (!texts.is_object())
            throw ParseError(disk_->string() + ": cache entries must be objects");
        for (const auto& [text, values] : texts.items()) {
            EmbeddingVector v;
            for (const auto& x : values) v.values.push_back(x.get<double>());
            by_model_[model][text] = std::move(v);
        }
    }
}

std::optional<EmbeddingVector> EmbeddingCache::get(const std::string& model,
                                                   const std::string& text) const {
    std::shared_lock lock(mu_);
    auto mit = by_model_.find(model);
    if (mit == by_model_.end()) return std::nullopt;
    auto tit = mit->second.find(text);
    if (tit == mit->second.end()) return std::nullopt;
    return tit->second;
}

void EmbeddingCache::put(const std::string& model, const std::string& text,
                         EmbeddingVector vec) {
    std::unique_lock lock(mu_);
    by_model_[model][text] = std::move(vec);
}

void EmbeddingCache::save() const {
    if (!disk_) return;
    nlohmann::json doc = nlohmann::json::object();
    {
        std::shared_lock lock(mu_);
        for (const auto& [model, texts] : by_model_)
            for (const auto& [text, vec] : texts) doc[model][text] = vec.values;
    }
    write_json_file(*disk_, doc);
}

std::size_t EmbeddingCache::size() const {
    std::shared_lock lock(mu_);
    std::size_t n = 0;
    for (const auto& [model, texts] : by_model_) n += texts.size();
    return n;
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.dim() != v.dim())
        throw ValidationError("cosine over mismatched dimensions (" +
                              std::to_string(u.dim()) + " vs " + std::to_string(v.dim()) + ")");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        dot += u.values[i] * v.values[i];
        nu += u.values[i] * u.values[i];
        nv += v.values[i] * v.values[i];
    }
    if (nu == 0.0 || nv == 0.0)
        throw ValidationError("cosine undefined for a zero vector");
    return std::clamp(dot / std::sqrt(nu * nv), -1.0, 1.0);
}

Evaluator::Evaluator(Backend& backend, EvalConfig cfg, EmbeddingCache* cache)
    : backend_(backend), cfg_(std::move(cfg)), cache_(cache) {
    if (cfg_.embedding_model.empty())
        throw ValidationError("an embedding model must be configured; there is no default");
    if (!(cfg_.threshold > 0.0 && cfg_.threshold <= 1.0))
        throw ValidationError("similarity threshold must lie in (0, 1]");
}

std::vector<EmbeddingVector> Evaluator::embeddings_for(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out(texts.size());
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (cache_) {
            if (auto hit = cache_->get(cfg_.embedding_model, texts[i])) {
                out[i] = std::move(*hit);
                continue;
            }
        }
        missing.push_back(i);
    }
    if (!missing.empty()) {
        std::vector<std::string> batch;
        batch.reserve(missing.size());
        for (auto i : missing) batch.push_back(texts[i]);
        auto fresh = backend_.embed(cfg_.embedding_model, batch);
        for (std::size_t j = 0; j < missing.size(); ++j) {
            if (cache_) cache_->put(cfg_.embedding_model, batch[j], fresh[j]);
            out[missing[j]] = std::move(fresh[j]);
        }
    }
    return out;
}

EvaluationOutcome Evaluator::label_question(const std::string& question,
                                            const std::vector<ReferenceQuestion>& references) {
    return label_batch({question}, references).front();
}

std::vector<EvaluationOutcome> Evaluator::label_batch(
    const std::vector<std::string>& questions,
    const std::vector<ReferenceQuestion>& references) {
    std::vector<EvaluationOutcome> outcomes;
    outcomes.reserve(questions.size());

    if (references.empty()) {
        for (const auto& q : questions)
            outcomes.push_back({q, EvalLabel::NotAbleToEvaluate, -1.0, std::nullopt});
        return outcomes;
    }

    std::vector<std::string> texts = questions;
    for (const auto& ref : references) texts.push_back(ref.text);
    const auto vectors = embeddings_for(texts);

    for (std::size_t qi = 0; qi < questions.size(); ++qi) {
        EvaluationOutcome out;
        out.question_text = questions[qi];

        std::size_t best_ref = 0;
        double best_sim = -2.0;
        for (std::size_t ri = 0; ri < references.size(); ++ri) {
            const double sim = cosine(vectors[qi], vectors[questions.size() + ri]);
            if (sim > best_sim) {  // strict: the lowest index wins ties
                best_sim = sim;
                best_ref = ri;
            }
        }
        out.best_similarity = best_sim;
        const bool labeled = cfg_.strict_greater ? best_sim > cfg_.threshold
                                                 : best_sim >= cfg_.threshold;
        if (labeled) {
            out.label = to_eval_label(references[best_ref].label);
            out.best_ref_id = references[best_ref].ref_id;
        } else {
            out.label = EvalLabel::NotAbleToEvaluate;
        }
        outcomes.push_back(std::move(out));
    }
    return outcomes;
}

ScoreReport score(const std::vector<EvaluationOutcome>& outcomes, int n_interventions,
                  const EvalConfig& cfg) {
    if (outcomes.empty())
        throw ValidationError("cannot score an empty outcome list");

    ScoreReport report;
    report.n_questions = static_cast<int>(outcomes.size());
    report.n_interventions = n_interventions;
    report.embedding_model = cfg.embedding_model;
    report.threshold = cfg.threshold;

    for (const auto& o : outcomes) {
        switch (o.label) {
            case EvalLabel::Useful: ++report.useful; break;
            case EvalLabel::Unhelpful: ++report.unhelpful; break;
            case EvalLabel::Invalid: ++report.invalid; break;
            case EvalLabel::NotAbleToEvaluate: ++report.not_able; break;
        }
    }
    const double n = report.n_questions;
    report.useful_pct = 100.0 * report.useful / n;
    report.unhelpful_pct = 100.0 * report.unhelpful / n;
    report.invalid_pct = 100.0 * report.invalid / n;
    report.not_able_pct = 100.0 * report.not_able / n;
    report.punctuation = report.useful_pct;
    return report;
}

namespace {

AggregateStat aggregate_field(const std::vector<ScoreReport>& reports,
                              double ScoreReport::* field) {
    AggregateStat stat;
    const std::size_t n = reports.size();
    for (const auto& r : reports) stat.mean += r.*field;
    stat.mean /= static_cast<double>(n);
    if (n > 1) {
        double ss = 0.0;
        for (const auto& r : reports) {
            const double d = r.*field - stat.mean;
            ss += d * d;
        }
        stat.stddev = std::sqrt(ss / static_cast<double>(n - 1));
    }
    return stat;
}

}  // namespace

AggregateReport aggregate_runs(const std::vector<ScoreReport>& reports) {
    if (reports.empty())
        throw ValidationError("cannot aggregate zero score reports");
    AggregateReport agg;
    agg.runs = static_cast<int>(reports.size());
    agg.useful_pct = aggregate_field(reports, &ScoreReport::useful_pct);
    agg.unhelpful_pct = aggregate_field(reports, &ScoreReport::unhelpful_pct);
    agg.invalid_pct = aggregate_field(reports, &ScoreReport::invalid_pct);
    agg.not_able_pct = aggregate_field(reports, &ScoreReport::not_able_pct);
    agg.punctuation = aggregate_field(reports, &ScoreReport::punctuation);
    return agg;
}

double mcnemar_exact(const McNemarInput& input) {
    if (input.b < 0 || input.c < 0)
        throw ValidationError("discordant counts must be non-negative");
    const long long n = input.b + input.c;
    if (n == 0) return 1.0;
    const long long m = std::max(input.b, input.c);

    // Walk the binomial pmf with the multiplicative recurrence; magnitudes
    // stay in [0,1] so long double keeps the small cases exact.
    long double term = 1.0L;
    for (long long i = 0; i < n; ++i) term *= 0.5L;
    long double tail = 0.0L;
    for (long long k = 0; k <= n; ++k) {
        if (k >= m) tail += term;
        term *= static_cast<long double>(n - k) / static_cast<long double>(k + 1);
    }
    const long double p = 2.0L * tail;
    return p > 1.0L ? 1.0 : static_cast<double>(p);
}

double mcnemar_chi2(const McNemarInput& input) {
    if (input.b < 0 || input.c < 0)
        throw ValidationError("discordant counts must be non-negative");
    const long long n = input.b + input.c;
    if (n == 0) return 1.0;
    const double diff = std::max(0.0, std::fabs(static_cast<double>(input.b - input.c)) - 1.0);
    const double chi2 = diff * diff / static_cast<double>(n);
    // Survival function of chi-square with one degree of freedom.
    return std::erfc(std::sqrt(chi2 / 2.0));
}

McNemarInput pair_outcomes(const std::vector<OutcomeRecord>& a,
                           const std::vector<OutcomeRecord>& b) {
    if (a.size() != b.size())
        throw ValidationError("outcome lists differ in length (" +
                              std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()) + ")");

    std::map<std::pair<std::string, int>, bool> a_useful;
    for (const auto& rec : a) {
        auto key = std::make_pair(rec.intervention_id, rec.slot);
        if (!a_useful.emplace(key, rec.outcome.label == EvalLabel::Useful).second)
            throw ValidationError("duplicate outcome for intervention \"" +
                                  rec.intervention_id + "\" slot " +
                                  std::to_string(rec.slot));
    }

    McNemarInput input;
    std::set<std::pair<std::string, int>> seen_b;
    for (const auto& rec : b) {
        auto key = std::make_pair(rec.intervention_id, rec.slot);
        if (!seen_b.insert(key).second)
            throw ValidationError("duplicate outcome for intervention \"" +
                                  rec.intervention_id + "\" slot " +
                                  std::to_string(rec.slot));
        auto it = a_useful.find(key);
        if (it == a_useful.end())
            throw ValidationError("outcome lists are misaligned: \"" +
                                  rec.intervention_id + "\" slot " +
                                  std::to_string(rec.slot) +
                                  " is present on one side only");
        const bool bu = rec.outcome.label == EvalLabel::Useful;
        if (it->second && !bu) ++input.b;
        if (!it->second && bu) ++input.c;
    }
    return input;
}

ProvenanceStats provenance_fraction(const std::vector<std::string>& provenance_tags) {
    ProvenanceStats stats;
    for (const auto& tag : provenance_tags) {
        if (tag == "NoScheme")
            ++stats.no_scheme;
        else if (tag.rfind("Scheme(", 0) == 0)
            ++stats.scheme;
        else
            ++stats.unmatched;
    }
    const int matched = stats.scheme + stats.no_scheme;
    stats.fraction = matched > 0 ? static_cast<double>(stats.scheme) / matched : 0.0;
    return stats;
}

ProvenanceStats provenance_fraction(const std::vector<SelectionResult>& selections) {
    std::vector<std::string> tags;
    for (const auto& sel : selections)
        tags.insert(tags.end(), sel.provenance.begin(), sel.provenance.end());
    return provenance_fraction(tags);
}

nlohmann::json summary_to_json(const ScoreReport& summary) {
    return {{"useful_pct", summary.useful_pct},
            {"unhelpful_pct", summary.unhelpful_pct},
            {"invalid_pct", summary.invalid_pct},
            {"not_able_pct", summary.not_able_pct},
            {"punctuation", summary.punctuation},
            {"embedding_model", summary.embedding_model},
            {"threshold", summary.threshold},
            {"n_questions", summary.n_questions},
            {"n_interventions", summary.n_interventions},
            {"useful", summary.useful},
            {"unhelpful", summary.unhelpful},
            {"invalid", summary.invalid},
            {"not_able", summary.not_able}};
}

void save_report(const std::filesystem::path& path,
                 const std::vector<OutcomeRecord>& per_question,
                 const ScoreReport& summary, const std::string& config_digest,
                 const std::vector<std::string>& failures) {
    nlohmann::json doc = nlohmann::json::object();
    if (!config_digest.empty()) doc["_config_digest"] = config_digest;
    if (!failures.empty()) doc["_failures"] = failures;

    auto& rows = doc["per_question"] = nlohmann::json::array();
    for (const auto& rec : per_question) {
        nlohmann::json row = {{"intervention_id", rec.intervention_id},
                              {"slot", rec.slot},
                              {"cq", rec.outcome.question_text},
                              {"label", std::string(to_string(rec.outcome.label))},
                              {"best_similarity", rec.outcome.best_similarity}};
        if (rec.outcome.best_ref_id) row["best_ref_id"] = *rec.outcome.best_ref_id;
        rows.push_back(std::move(row));
    }

    doc["summary"] = summary_to_json(summary);
    write_json_file(path, doc);
}

LoadedReport load_report(const std::filesystem::path& path) {
    const auto doc = load_json_object(path);
    const std::string source = path.string();

    LoadedReport report;
    if (doc.contains("_config_digest") && doc["_config_digest"].is_string())
        report.config_digest = doc["_config_digest"].get<std::string>();
    if (doc.contains("_failures") && doc["_failures"].is_array())
        for (const auto& f : doc["_failures"])
            report.failures.push_back(f.get<std::string>());

    if (!doc.contains("per_question") || !doc["per_question"].is_array())
        throw ValidationError(source + ": report lacks a per_question array");
    if (!doc.contains("summary") || !doc["summary"].is_object())
        throw ValidationError(source + ": report lacks a summary object");
    try {
        for (const auto& row : doc["per_question"]) {
            OutcomeRecord rec;
            rec.intervention_id = row.at("intervention_id").get<std::string>();
            rec.slot = row.at("slot").get<int>();
            rec.outcome.question_text = row.at("cq").get<std::string>();
            rec.outcome.label = eval_label_from_string(row.at("label").get<std::string>());
            rec.outcome.best_similarity = row.at("best_similarity").get<double>();
            if (row.contains("best_ref_id"))
                rec.outcome.best_ref_id = row["best_ref_id"].get<std::string>();
            report.per_question.push_back(std::move(rec));
        }

        const auto& s = doc["summary"];
        report.summary.useful_pct = s.at("useful_pct").get<double>();
        report.summary.unhelpful_pct = s.at("unhelpful_pct").get<double>();
        report.summary.invalid_pct = s.at("invalid_pct").get<double>();
        report.summary.not_able_pct = s.at("not_able_pct").get<double>();
        report.summary.punctuation = s.at("punctuation").get<double>();
        report.summary.embedding_model = s.at("embedding_model").get<std::string>();
        report.summary.threshold = s.at("threshold").get<double>();
        if (s.contains("n_questions")) report.summary.n_questions = s["n_questions"].get<int>();
        if (s.contains("n_interventions"))
            report.summary.n_interventions = s["n_interventions"].get<int>();
        if (s.contains("useful")) report.summary.useful = s["useful"].get<int>();
        if (s.contains("unhelpful")) report.summary.unhelpful = s["unhelpful"].get<int>();
        if (s.contains("invalid")) report.summary.invalid = s["invalid"].get<int>();
        if (s.contains("not_able")) report.summary.not_able = s["not_able"].get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(source + ": " + e.what());
    }
    return report;
}

}  // namespace cqforge
