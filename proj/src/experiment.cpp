#include "cqforge/expctl.hpp"

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <thread>
#include <utility>

#include "cqforge/error.hpp"
#include "cqforge/generation.hpp"
#include "cqforge/json_io.hpp"
#include "cqforge/scheme_kb.hpp"
#include "cqforge/selection.hpp"
#include "cqforge/text.hpp"

namespace cqforge {

namespace {

// Work-stealing loop over [0, count). `fn` must handle its own exceptions;
// anything escaping a worker thread would terminate the process.
void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    const std::size_t nthreads =
        std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), count);
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    threads.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) {
        threads.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1))
                fn(i);
        });
    }
    for (auto& th : threads) th.join();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

nlohmann::json stat_to_json(const AggregateStat& s) {
    return {{"mean", s.mean}, {"std", s.stddev}};
}

nlohmann::json aggregate_to_json(const AggregateReport& a) {
    return {{"useful_pct", stat_to_json(a.useful_pct)},
            {"unhelpful_pct", stat_to_json(a.unhelpful_pct)},
            {"invalid_pct", stat_to_json(a.invalid_pct)},
            {"not_able_pct", stat_to_json(a.not_able_pct)},
            {"punctuation", stat_to_json(a.punctuation)},
            {"runs", a.runs}};
}

nlohmann::json provenance_to_json(const ProvenanceStats& p) {
    return {{"fraction", p.fraction},
            {"scheme", p.scheme},
            {"no_scheme", p.no_scheme},
            {"unmatched", p.unmatched}};
}

std::map<std::string, std::size_t> slot_index(const Corpus& corpus) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < corpus.interventions.size(); ++i)
        index[corpus.interventions[i].intervention_id] = i;
    return index;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& user_cfg, bool resume) {
    ExperimentConfig cfg = user_cfg;
    resolve_config(cfg);
    const std::string digest = config_digest(cfg);

    std::optional<TemplateSet> kb_storage;
    if (cfg.kb_path) kb_storage = TemplateSet::from_file(*cfg.kb_path);
    const TemplateSet& kb = kb_storage ? *kb_storage : TemplateSet::bundled();

    Corpus corpus = load_corpus(cfg.corpus_path, kb);
    if (cfg.split) {
        CorpusSplit parts = split_corpus(corpus, *cfg.split);
        if (cfg.split_part == "train")
            corpus = std::move(parts.train);
        else if (cfg.split_part == "val")
            corpus = std::move(parts.val);
        else
            corpus = std::move(parts.test);
        if (corpus.interventions.empty())
            throw ValidationError("split part \"" + cfg.split_part + "\" is empty");
    }
    if (corpus.interventions.empty())
        throw ValidationError(cfg.corpus_path.string() + ": corpus has no interventions");

    const std::size_t total = corpus.size();
    const auto index = slot_index(corpus);

    auto questioner = make_backend(cfg.questioner.backend);
    std::unique_ptr<Backend> judge_backend;
    if (cfg.judge) judge_backend = make_backend(cfg.judge->backend);
    auto embedder = make_backend(cfg.eval.embedding_backend);

    std::optional<EmbeddingCache> cache_storage;
    if (cfg.embedding_cache) cache_storage.emplace(*cfg.embedding_cache);
    Evaluator evaluator(*embedder, cfg.eval,
                        cache_storage ? &*cache_storage : nullptr);

    const std::filesystem::path base = cfg.out_dir / digest;
    std::filesystem::create_directories(base);

    std::vector<std::string> warnings;
    std::vector<std::string> failures;
    std::map<std::string, double> timings;

    std::map<std::string, std::vector<ScoreReport>> per_run;
    std::map<std::string, std::vector<std::string>> provenance_tags;

    auto check_stage = [&](const std::string& stage, std::size_t failed) {
        if (static_cast<double>(failed) >
            cfg.failure_threshold * static_cast<double>(total)) {
            throw Error(stage + ": " + std::to_string(failed) + " of " +
                        std::to_string(total) +
                        " interventions failed, past the failure threshold");
        }
    };

    for (int run = 1; run <= cfg.runs; ++run) {
        const std::uint64_t run_seed = cfg.seeds[static_cast<std::size_t>(run - 1)];
        const std::string run_tag = "run" + std::to_string(run);
        const std::filesystem::path run_dir = base / run_tag;
        std::filesystem::create_directories(run_dir);

        // --- generation -----------------------------------------------------
        auto t0 = std::chrono::steady_clock::now();
        const std::filesystem::path cand_path = run_dir / "candidates.json";
        std::vector<std::optional<CandidatePool>> pools(total);
        std::vector<std::string> stage_failures;  // "<intervention_id>: <msg>"
        bool loaded = false;

        if (resume && std::filesystem::exists(cand_path)) {
            CandidateFile file = load_candidates(cand_path);
            if (file.config_digest == digest) {
                for (auto& entry : file.entries) {
                    auto it = index.find(entry.intervention_id);
                    if (it == index.end())
                        throw ValidationError(cand_path.string() + ": entry \"" +
                                              entry.intervention_id +
                                              "\" is not in the corpus");
                    CandidatePool pool;
                    pool.intervention_id = entry.intervention_id;
                    pool.candidates = std::move(entry.candidates);
                    pools[it->second] = std::move(pool);
                }
                for (const auto& w : file.warnings)
                    warnings.push_back(run_tag + "/generate: " + w);
                stage_failures = std::move(file.failures);
                loaded = true;
            }
        }
        if (!loaded) {
            std::vector<std::string> errors(total);
            parallel_for(total, cfg.workers, [&](std::size_t i) {
                try {
                    pools[i] = generate_candidates(*questioner, cfg.questioner.params,
                                                   corpus.interventions[i], cfg.mode,
                                                   cfg.n, kb, run);
                } catch (const std::exception& e) {
                    errors[i] = e.what();
                }
            });
            for (std::size_t i = 0; i < total; ++i)
                if (!errors[i].empty())
                    stage_failures.push_back(corpus.interventions[i].intervention_id +
                                             ": " + errors[i]);
            std::vector<CandidatePool> present;
            for (const auto& pool : pools)
                if (pool) present.push_back(*pool);
            save_candidates(cand_path, corpus, present, digest, stage_failures);
            for (const auto& w : flatten_pool_warnings(present))
                warnings.push_back(run_tag + "/generate: " + w);
        }
        for (const auto& f : stage_failures)
            failures.push_back(run_tag + "/generate: " + f);
        check_stage(run_tag + "/generate", stage_failures.size());
        timings[run_tag + "/generate"] += seconds_since(t0);

        // --- per-strategy selection and evaluation ---------------------------
        for (const auto& strategy : cfg.strategies) {
            t0 = std::chrono::steady_clock::now();
            const std::filesystem::path sel_path =
                run_dir / ("selections_" + strategy + ".json");
            std::vector<std::optional<SelectionResult>> sels(total);
            std::vector<std::string> sel_failures;
            loaded = false;

            if (resume && std::filesystem::exists(sel_path)) {
                SelectionFile file = load_selections(sel_path);
                if (file.config_digest == digest) {
                    for (auto& entry : file.entries) {
                        auto it = index.find(entry.intervention_id);
                        if (it == index.end())
                            throw ValidationError(sel_path.string() + ": entry \"" +
                                                  entry.intervention_id +
                                                  "\" is not in the corpus");
                        SelectionResult sel;
                        sel.intervention_id = entry.intervention_id;
                        sel.selected = std::move(entry.selected);
                        sel.provenance = std::move(entry.provenance);
                        sel.strategy = std::move(entry.strategy);
                        sel.warnings = std::move(entry.warnings);
                        sels[it->second] = std::move(sel);
                    }
                    sel_failures = std::move(file.failures);
                    loaded = true;
                }
            }
            if (!loaded) {
                std::vector<std::string> errors(total);
                parallel_for(total, cfg.workers, [&](std::size_t i) {
                    if (!pools[i]) return;
                    try {
                        if (strategy == "judge") {
                            sels[i] = select_judge(*judge_backend, cfg.judge->params,
                                                   corpus.interventions[i], *pools[i],
                                                   cfg.k, kb, cfg.judge_include_schemes);
                        } else if (strategy == "random") {
                            sels[i] = select_random(
                                *pools[i], cfg.k,
                                fnv1a64(corpus.interventions[i].intervention_id,
                                        run_seed));
                        } else {
                            std::vector<std::string> texts;
                            texts.reserve(pools[i]->candidates.size());
                            for (const auto& cand : pools[i]->candidates)
                                texts.push_back(cand.text);
                            const auto outcomes = evaluator.label_batch(
                                texts, corpus.interventions[i].references);
                            std::vector<EvalLabel> labels;
                            labels.reserve(outcomes.size());
                            for (const auto& outcome : outcomes)
                                labels.push_back(outcome.label);
                            sels[i] = select_oracle(*pools[i], labels, cfg.k);
                        }
                    } catch (const std::exception& e) {
                        errors[i] = e.what();
                    }
                });
                for (std::size_t i = 0; i < total; ++i)
                    if (!errors[i].empty())
                        sel_failures.push_back(
                            corpus.interventions[i].intervention_id + ": " +
                            errors[i]);
                std::vector<SelectionResult> present;
                for (const auto& sel : sels)
                    if (sel) present.push_back(*sel);
                save_selections(sel_path, corpus, present, digest, sel_failures);
            }
            for (const auto& sel : sels) {
                if (!sel) continue;
                for (const auto& w : sel->warnings)
                    warnings.push_back(run_tag + "/select-" + strategy + ": " +
                                       sel->intervention_id + ": " + w);
                auto& tags = provenance_tags[strategy];
                tags.insert(tags.end(), sel->provenance.begin(),
                            sel->provenance.end());
            }
            for (const auto& f : sel_failures)
                failures.push_back(run_tag + "/select-" + strategy + ": " + f);
            check_stage(run_tag + "/select-" + strategy, sel_failures.size());
            timings[run_tag + "/select-" + strategy] += seconds_since(t0);

            // --- evaluation --------------------------------------------------
            t0 = std::chrono::steady_clock::now();
            const std::filesystem::path out_path =
                run_dir / ("outcomes_" + strategy + ".json");
            std::optional<ScoreReport> summary;
            std::vector<std::string> eval_failures;

            if (resume && std::filesystem::exists(out_path)) {
                LoadedReport file = load_report(out_path);
                if (file.config_digest == digest) {
                    summary = std::move(file.summary);
                    eval_failures = std::move(file.failures);
                }
            }
            if (!summary) {
                std::vector<std::vector<OutcomeRecord>> records(total);
                std::vector<std::string> errors(total);
                parallel_for(total, cfg.workers, [&](std::size_t i) {
                    if (!sels[i]) return;
                    try {
                        const auto outcomes = evaluator.label_batch(
                            sels[i]->selected, corpus.interventions[i].references);
                        for (std::size_t slot = 0; slot < outcomes.size(); ++slot)
                            records[i].push_back(
                                {sels[i]->intervention_id, static_cast<int>(slot),
                                 outcomes[slot]});
                    } catch (const std::exception& e) {
                        errors[i] = e.what();
                    }
                });
                std::vector<OutcomeRecord> per_question;
                std::vector<EvaluationOutcome> flat;
                int evaluated_interventions = 0;
                for (std::size_t i = 0; i < total; ++i) {
                    if (!errors[i].empty()) {
                        eval_failures.push_back(
                            corpus.interventions[i].intervention_id + ": " +
                            errors[i]);
                        continue;
                    }
                    if (records[i].empty()) continue;
                    ++evaluated_interventions;
                    for (auto& rec : records[i]) {
                        flat.push_back(rec.outcome);
                        per_question.push_back(std::move(rec));
                    }
                }
                if (flat.empty())
                    throw Error(run_tag + "/evaluate-" + strategy +
                                ": no outcomes to score");
                summary = score(flat, evaluated_interventions, cfg.eval);
                save_report(out_path, per_question, *summary, digest, eval_failures);
            }
            for (const auto& f : eval_failures)
                failures.push_back(run_tag + "/evaluate-" + strategy + ": " + f);
            check_stage(run_tag + "/evaluate-" + strategy, eval_failures.size());
            per_run[strategy].push_back(*summary);
            timings[run_tag + "/evaluate-" + strategy] += seconds_since(t0);
        }
    }

    // --- aggregate and write the experiment report ---------------------------
    ExperimentReport report;
    report.digest = digest;
    report.warnings = warnings;
    report.failures = failures;

    const bool scheme_mix = cfg.mode == SchemeMode::BothMerged ||
                            cfg.mode == SchemeMode::BothSingle;
    nlohmann::json strategies_doc = nlohmann::json::object();
    for (const auto& strategy : cfg.strategies) {
        StrategyReport sr;
        sr.strategy = strategy;
        sr.per_run = per_run[strategy];
        sr.aggregate = aggregate_runs(sr.per_run);
        sr.provenance = provenance_fraction(provenance_tags[strategy]);
        sr.has_provenance = scheme_mix;

        nlohmann::json entry = nlohmann::json::object();
        auto& runs_doc = entry["per_run"] = nlohmann::json::array();
        for (const auto& run_summary : sr.per_run)
            runs_doc.push_back(summary_to_json(run_summary));
        entry["aggregate"] = aggregate_to_json(sr.aggregate);
        if (sr.has_provenance)
            entry["provenance"] = provenance_to_json(sr.provenance);
        strategies_doc[strategy] = std::move(entry);
        report.strategies.push_back(std::move(sr));
    }

    nlohmann::json doc = nlohmann::json::object();
    doc["_config_digest"] = digest;
    doc["config"] = config_to_json(cfg, false);
    doc["strategies"] = std::move(strategies_doc);
    doc["warnings"] = warnings;
    doc["failures"] = failures;
    report.document = doc;
    report.report_path = base / "report.json";
    write_json_file(report.report_path, doc);

    double elapsed_total = 0.0;
    nlohmann::json timing_doc = nlohmann::json::object();
    for (const auto& [stage, secs] : timings) {
        timing_doc[stage] = secs;
        elapsed_total += secs;
    }
    timing_doc["total"] = elapsed_total;
    write_json_file(base / "timings.json", timing_doc);

    if (cache_storage) cache_storage->save();
    return report;
}

}  // namespace cqforge
