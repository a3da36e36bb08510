#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "cqforge/corpus.hpp"
#include "cqforge/error.hpp"
#include "cqforge/evaluation.hpp"
#include "cqforge/expctl.hpp"
#include "cqforge/generation.hpp"
#include "cqforge/json_io.hpp"
#include "cqforge/llm_gateway.hpp"
#include "cqforge/prompting.hpp"
#include "cqforge/scheme_kb.hpp"
#include "cqforge/selection.hpp"
#include "cqforge/text.hpp"

namespace {

using namespace cqforge;

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitPartial = 2;

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

struct BackendFlags {
    std::string kind = "http";
    std::string base_url;
    std::string fixture;
    std::uint64_t seed = 0;
    int max_in_flight = 2;
    CLI::Option* seed_opt = nullptr;  // distinguishes --...-seed 0 from unset
    std::vector<CLI::Option*> options;
};

void add_backend_flags(CLI::App* cmd, BackendFlags& flags, const std::string& prefix,
                       const std::string& role) {
    flags.options.push_back(
        cmd->add_option("--" + prefix + "backend", flags.kind, role + " backend kind")
            ->check(CLI::IsMember({"http", "mock"})));
    flags.options.push_back(cmd->add_option("--" + prefix + "base-url", flags.base_url,
                                            role + " HTTP endpoint"));
    flags.options.push_back(cmd->add_option("--" + prefix + "fixture", flags.fixture,
                                            role + " mock fixture file"));
    flags.seed_opt = cmd->add_option("--" + prefix + "backend-seed", flags.seed,
                                     role + " mock backend seed");
    flags.options.push_back(flags.seed_opt);
    flags.options.push_back(cmd->add_option("--" + prefix + "max-in-flight",
                                            flags.max_in_flight,
                                            role + " request concurrency cap")
                                ->check(CLI::PositiveNumber));
}

bool backend_flags_touched(const BackendFlags& flags) {
    for (const CLI::Option* opt : flags.options)
        if (opt->count() > 0) return true;
    return false;
}

BackendDescriptor to_descriptor(const BackendFlags& flags) {
    BackendDescriptor desc;
    desc.kind = flags.kind == "mock" ? BackendKind::Mock : BackendKind::Http;
    if (!flags.base_url.empty()) desc.base_url = flags.base_url;
    if (!flags.fixture.empty()) desc.fixture = flags.fixture;
    if (flags.seed_opt && flags.seed_opt->count() > 0)
        desc.seed = flags.seed;
    else if (desc.kind == BackendKind::Mock)
        desc.seed = 0;
    desc.max_in_flight = flags.max_in_flight;
    return desc;
}

const TemplateSet& resolve_kb(const std::string& kb_path,
                              std::optional<TemplateSet>& storage) {
    if (kb_path.empty()) return TemplateSet::bundled();
    storage = TemplateSet::from_file(kb_path);
    return *storage;
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

void print_failures(const std::vector<std::string>& failures) {
    for (const auto& f : failures) std::fprintf(stderr, "failed: %s\n", f.c_str());
}

// ---------------------------------------------------------------------------
// prompt

struct PromptArgs {
    std::string corpus, intervention_id, mode = "without", candidates, kb;
    int n = 3, k = 3;
    bool judge = false, no_schemes = false;
};

int cmd_prompt(const PromptArgs& args) {
    std::optional<TemplateSet> kb_storage;
    const TemplateSet& kb = resolve_kb(args.kb, kb_storage);
    const Corpus corpus = load_corpus(args.corpus, kb);
    const Intervention* iv = corpus.find(args.intervention_id);
    if (!iv)
        throw ValidationError("intervention \"" + args.intervention_id +
                              "\" not found in " + args.corpus);
    const SchemeMode mode = scheme_mode_from_string(args.mode);

    if (!args.judge) {
        const QuestionerPrompts prompts = build_questioner_prompts(*iv, mode, args.n, kb);
        print_warnings(prompts.warnings);
        for (std::size_t i = 0; i < prompts.prompts.size(); ++i) {
            const auto& p = prompts.prompts[i];
            std::printf("--- prompt %zu [%s] expects %d question(s)\n%s\n", i + 1,
                        to_string(p.origin).c_str(), p.expected_questions,
                        p.text.c_str());
            if (i + 1 < prompts.prompts.size()) std::printf("\n");
        }
        return kExitOk;
    }

    std::vector<std::string> candidates;
    if (!args.candidates.empty()) {
        const CandidateFile file = load_candidates(args.candidates);
        for (const auto& entry : file.entries) {
            if (entry.intervention_id != args.intervention_id) continue;
            for (const auto& cand : entry.candidates) candidates.push_back(cand.text);
        }
        if (candidates.empty())
            throw ValidationError(args.candidates + ": no candidates for \"" +
                                  args.intervention_id + "\"");
    } else {
        const bool both =
            mode == SchemeMode::BothMerged || mode == SchemeMode::BothSingle;
        const int count = both ? 2 * args.n : args.n;
        for (int i = 1; i <= count; ++i)
            candidates.push_back("<candidate " + std::to_string(i) + ">");
    }
    std::printf("--- judge prompt expects %d question(s)\n%s\n", args.k,
                build_judge_prompt(*iv, candidates, args.k, !args.no_schemes, kb)
                    .c_str());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
    std::string corpus, mode = "without", model, out, kb;
    int n = 3, runs = 1, retries = 2, workers = 2;
    long timeout_ms = 120000;
    double temperature = 0.0;
    int max_tokens = 0;
    CLI::Option* temperature_opt = nullptr;
    CLI::Option* max_tokens_opt = nullptr;
    BackendFlags backend;
};

int cmd_generate(const GenerateArgs& args) {
    std::optional<TemplateSet> kb_storage;
    const TemplateSet& kb = resolve_kb(args.kb, kb_storage);
    const Corpus corpus = load_corpus(args.corpus, kb);
    const SchemeMode mode = scheme_mode_from_string(args.mode);

    auto backend = make_backend(to_descriptor(args.backend));
    GenParams params;
    params.model = args.model;
    if (args.temperature_opt && args.temperature_opt->count())
        params.temperature = args.temperature;
    if (args.max_tokens_opt && args.max_tokens_opt->count())
        params.max_tokens = args.max_tokens;
    params.request_timeout = std::chrono::milliseconds(args.timeout_ms);
    params.retries = args.retries;

    const std::size_t total = corpus.size();
    std::vector<CandidatePool> pools;
    std::vector<std::string> failures;
    for (int run = 1; run <= args.runs; ++run) {
        std::vector<std::optional<CandidatePool>> slots(total);
        std::vector<std::string> errors(total);
        parallel_for(total, args.workers, [&](std::size_t i) {
            try {
                slots[i] = generate_candidates(*backend, params, corpus.interventions[i],
                                               mode, args.n, kb, run);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        });
        const std::string prefix = args.runs > 1 ? "run" + std::to_string(run) + ": " : "";
        for (std::size_t i = 0; i < total; ++i) {
            if (!errors[i].empty()) {
                failures.push_back(prefix + corpus.interventions[i].intervention_id +
                                   ": " + errors[i]);
                continue;
            }
            pools.push_back(std::move(*slots[i]));
        }
    }
    print_warnings(flatten_pool_warnings(pools));
    print_failures(failures);
    save_candidates(args.out, corpus, pools, "", failures);
    std::printf("wrote %s (%zu pool(s), %zu failure(s))\n", args.out.c_str(),
                pools.size(), failures.size());
    return failures.empty() ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------------------
// select

struct SelectArgs {
    std::string candidates, strategy, out, corpus, kb, judge_model, embed_model, cache;
    int k = 3, run = 1, retries = 2;
    long timeout_ms = 120000;
    std::uint64_t seed = 0;
    double threshold = 0.6;
    bool strict_gt = false, no_schemes = false;
    BackendFlags judge_backend;
    BackendFlags embed_backend;
};

int cmd_select(const SelectArgs& args) {
    std::optional<TemplateSet> kb_storage;
    const TemplateSet& kb = resolve_kb(args.kb, kb_storage);
    const CandidateFile file = load_candidates(args.candidates);

    std::optional<Corpus> corpus;
    if (!args.corpus.empty()) corpus = load_corpus(args.corpus, kb);

    std::unique_ptr<Backend> judge;
    GenParams judge_params;
    if (args.strategy == "judge") {
        if (args.judge_model.empty())
            throw ValidationError("--judge-model is required for the judge strategy");
        judge = make_backend(to_descriptor(args.judge_backend));
        judge_params.model = args.judge_model;
        judge_params.request_timeout = std::chrono::milliseconds(args.timeout_ms);
        judge_params.retries = args.retries;
    }
    std::optional<EmbeddingCache> cache;
    std::unique_ptr<Backend> embedder;
    std::optional<Evaluator> evaluator;
    if (args.strategy == "oracle") {
        if (!corpus)
            throw ValidationError("--corpus is required for the oracle strategy "
                                  "(reference questions live there)");
        if (args.embed_model.empty())
            throw ValidationError("--embed-model is required for the oracle strategy");
        embedder = make_backend(to_descriptor(args.embed_backend));
        EvalConfig cfg;
        cfg.threshold = args.threshold;
        cfg.strict_greater = args.strict_gt;
        cfg.embedding_model = args.embed_model;
        cfg.embedding_backend = to_descriptor(args.embed_backend);
        if (!args.cache.empty()) cache.emplace(args.cache);
        evaluator.emplace(*embedder, cfg, cache ? &*cache : nullptr);
    }

    // Without a corpus the intervention is reconstructed from the candidates
    // file: text is preserved, scheme annotations and references are not.
    Corpus sink;
    sink.name = std::filesystem::path(args.candidates).stem().string();
    std::vector<SelectionResult> selections;
    std::vector<std::string> failures;
    for (const auto& entry : file.entries) {
        Intervention synthetic;
        const Intervention* iv = corpus ? corpus->find(entry.intervention_id) : nullptr;
        if (!iv) {
            if (corpus) {
                failures.push_back(entry.intervention_id + ": not in " + args.corpus);
                continue;
            }
            synthetic.intervention_id = entry.intervention_id;
            synthetic.text = entry.intervention_text;
            iv = &synthetic;
        }
        CandidatePool pool;
        pool.intervention_id = entry.intervention_id;
        for (const auto& cand : entry.candidates)
            if (args.run == 0 || cand.run_id == args.run) pool.candidates.push_back(cand);
        if (pool.candidates.empty()) {
            failures.push_back(entry.intervention_id + ": no candidates for run " +
                               std::to_string(args.run));
            continue;
        }
        try {
            if (args.strategy == "judge") {
                selections.push_back(select_judge(*judge, judge_params, *iv, pool,
                                                  args.k, kb, !args.no_schemes));
            } else if (args.strategy == "random") {
                selections.push_back(select_random(
                    pool, args.k, fnv1a64(entry.intervention_id, args.seed)));
            } else {
                std::vector<std::string> texts;
                for (const auto& cand : pool.candidates) texts.push_back(cand.text);
                const auto outcomes = evaluator->label_batch(texts, iv->references);
                std::vector<EvalLabel> labels;
                for (const auto& o : outcomes) labels.push_back(o.label);
                selections.push_back(select_oracle(pool, labels, args.k));
            }
        } catch (const std::exception& e) {
            failures.push_back(entry.intervention_id + ": " + e.what());
            continue;
        }
        if (!corpus) sink.interventions.push_back(synthetic);
    }
    for (const auto& sel : selections) print_warnings(sel.warnings);
    print_failures(failures);
    save_selections(args.out, corpus ? *corpus : sink, selections, "", failures);
    if (cache) cache->save();
    std::printf("wrote %s (%zu selection(s), %zu failure(s))\n", args.out.c_str(),
                selections.size(), failures.size());
    return failures.empty() ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
    std::string corpus, submission, embed_model, out, cache, kb;
    double threshold = 0.6;
    bool strict_gt = false;
    BackendFlags backend;
};

int cmd_evaluate(const EvaluateArgs& args) {
    std::optional<TemplateSet> kb_storage;
    const TemplateSet& kb = resolve_kb(args.kb, kb_storage);
    const Corpus corpus = load_corpus(args.corpus, kb);
    const std::vector<SubmissionEntry> entries = load_generated(args.submission);
    if (entries.empty())
        throw ValidationError(args.submission + ": submission has no entries");

    auto backend = make_backend(to_descriptor(args.backend));
    EvalConfig cfg;
    cfg.threshold = args.threshold;
    cfg.strict_greater = args.strict_gt;
    cfg.embedding_model = args.embed_model;
    cfg.embedding_backend = to_descriptor(args.backend);
    std::optional<EmbeddingCache> cache;
    if (!args.cache.empty()) cache.emplace(args.cache);
    Evaluator evaluator(*backend, cfg, cache ? &*cache : nullptr);

    std::vector<OutcomeRecord> per_question;
    std::vector<EvaluationOutcome> flat;
    for (const auto& entry : entries) {
        const Intervention* iv = corpus.find(entry.intervention_id);
        if (!iv)
            throw ValidationError(args.submission + ": intervention \"" +
                                  entry.intervention_id + "\" is not in " +
                                  args.corpus);
        const auto outcomes = evaluator.label_batch(entry.questions, iv->references);
        for (std::size_t slot = 0; slot < outcomes.size(); ++slot) {
            per_question.push_back(
                {entry.intervention_id, static_cast<int>(slot), outcomes[slot]});
            flat.push_back(outcomes[slot]);
        }
    }
    const ScoreReport summary = score(flat, static_cast<int>(entries.size()), cfg);
    save_report(args.out, per_question, summary, "", {});
    if (cache) cache->save();

    std::printf("questions      %d (over %d interventions)\n", summary.n_questions,
                summary.n_interventions);
    std::printf("Useful         %d (%.1f%%)\n", summary.useful, summary.useful_pct);
    std::printf("Unhelpful      %d (%.1f%%)\n", summary.unhelpful,
                summary.unhelpful_pct);
    std::printf("Invalid        %d (%.1f%%)\n", summary.invalid, summary.invalid_pct);
    std::printf("NotAble        %d (%.1f%%)\n", summary.not_able,
                summary.not_able_pct);
    std::printf("punctuation    %.1f\n", summary.punctuation);
    std::printf("wrote %s\n", args.out.c_str());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// mcnemar

struct McNemarArgs {
    std::string a, b;
    bool chi2 = false;
};

int cmd_mcnemar(const McNemarArgs& args) {
    const LoadedReport ra = load_report(args.a);
    const LoadedReport rb = load_report(args.b);
    const McNemarInput input = pair_outcomes(ra.per_question, rb.per_question);
    const double p = args.chi2 ? mcnemar_chi2(input) : mcnemar_exact(input);
    std::printf("b = %lld\nc = %lld\np = %.12g\n", input.b, input.c, p);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// experiment

struct ExperimentArgs {
    std::string config, preset;
    bool resume = true;
    std::string corpus, out_dir, kb, mode, embed_model, cache, split_part;
    std::string questioner_model, judge_model;
    BackendFlags questioner_backend, judge_backend, embed_backend;
    int n = 0, k = 0, runs = 0, workers = 0;
    double threshold = 0.0, failure_threshold = -1.0;
    bool strict_gt = false;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> strategies;
};

int cmd_experiment(const ExperimentArgs& args, const CLI::App* cmd) {
    ExperimentConfig cfg;
    if (!args.config.empty()) cfg = config_from_toml(args.config);
    if (!args.preset.empty()) apply_preset(cfg, args.preset);

    auto passed = [cmd](const std::string& name) { return cmd->count(name) > 0; };
    if (passed("--corpus")) cfg.corpus_path = args.corpus;
    if (passed("--out-dir")) cfg.out_dir = args.out_dir;
    if (passed("--kb")) cfg.kb_path = args.kb;
    if (passed("--mode")) cfg.mode = scheme_mode_from_string(args.mode);
    if (passed("--n")) cfg.n = args.n;
    if (passed("--k")) cfg.k = args.k;
    if (passed("--runs")) cfg.runs = args.runs;
    if (passed("--seeds")) cfg.seeds = args.seeds;
    if (passed("--strategies")) cfg.strategies = args.strategies;
    if (passed("--workers")) cfg.workers = args.workers;
    if (passed("--failure-threshold")) cfg.failure_threshold = args.failure_threshold;
    if (passed("--split-part")) cfg.split_part = args.split_part;
    if (passed("--embed-model")) cfg.eval.embedding_model = args.embed_model;
    if (passed("--threshold")) cfg.eval.threshold = args.threshold;
    if (passed("--strict-gt")) cfg.eval.strict_greater = true;
    if (passed("--cache")) cfg.embedding_cache = args.cache;
    if (passed("--questioner-model")) cfg.questioner.params.model = args.questioner_model;
    if (backend_flags_touched(args.questioner_backend))
        cfg.questioner.backend = to_descriptor(args.questioner_backend);
    if (passed("--judge-model") || backend_flags_touched(args.judge_backend)) {
        if (!cfg.judge) cfg.judge.emplace();
        if (passed("--judge-model")) cfg.judge->params.model = args.judge_model;
        if (backend_flags_touched(args.judge_backend))
            cfg.judge->backend = to_descriptor(args.judge_backend);
    }
    if (backend_flags_touched(args.embed_backend))
        cfg.eval.embedding_backend = to_descriptor(args.embed_backend);

    const ExperimentReport report = run_experiment(cfg, args.resume);
    print_warnings(report.warnings);
    print_failures(report.failures);
    for (const auto& sr : report.strategies) {
        const auto& agg = sr.aggregate;
        std::printf("%s: punctuation %.1f", sr.strategy.c_str(),
                    agg.punctuation.mean);
        if (agg.runs > 1) std::printf(" ± %.2f", agg.punctuation.stddev);
        std::printf(" | useful %.1f | invalid %.1f | noeval %.1f",
                    agg.useful_pct.mean, agg.invalid_pct.mean,
                    agg.not_able_pct.mean);
        if (sr.has_provenance)
            std::printf(" | scheme-origin %.1f%%", 100.0 * sr.provenance.fraction);
        std::printf("\n");
    }
    std::printf("report: %s\n", report.report_path.string().c_str());
    return report.failures.empty() ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
    std::string dir, layout = "strategy_compare";
    bool csv = false;
};

int cmd_report(const ReportArgs& args) {
    namespace fs = std::filesystem;
    std::vector<fs::path> paths;
    const fs::path root(args.dir);
    if (fs::exists(root / "report.json")) {
        paths.push_back(root / "report.json");
    } else if (fs::is_directory(root)) {
        std::vector<fs::path> children;
        for (const auto& entry : fs::directory_iterator(root))
            if (entry.is_directory() && fs::exists(entry.path() / "report.json"))
                children.push_back(entry.path() / "report.json");
        std::sort(children.begin(), children.end());
        paths = std::move(children);
    }
    if (paths.empty())
        throw ValidationError("no report.json found under " + args.dir);

    std::vector<nlohmann::json> reports;
    reports.reserve(paths.size());
    for (const auto& p : paths)
        reports.push_back(load_json_object(p));
    std::fputs(render_table(reports, table_layout_from_string(args.layout), args.csv)
                   .c_str(),
               stdout);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"critical-question generation, selection, and evaluation toolkit"};
    app.require_subcommand(1);
    const std::string mode_desc =
        "scheme mode: without|with-one|with-mult|both-merged|both-single";

    PromptArgs prompt_args;
    auto* prompt_cmd = app.add_subcommand("prompt", "render pipeline prompts");
    prompt_cmd->add_option("--corpus", prompt_args.corpus, "corpus JSON file")
        ->required();
    prompt_cmd
        ->add_option("--intervention-id", prompt_args.intervention_id,
                     "intervention to render")
        ->required();
    prompt_cmd->add_option("--mode", prompt_args.mode, mode_desc);
    prompt_cmd->add_option("--n", prompt_args.n, "questions per prompt");
    prompt_cmd->add_flag("--judge", prompt_args.judge, "render the judge prompt");
    prompt_cmd->add_option("--k", prompt_args.k, "questions the judge keeps");
    prompt_cmd->add_option("--candidates", prompt_args.candidates,
                           "candidates file for the judge prompt");
    prompt_cmd->add_flag("--no-schemes", prompt_args.no_schemes,
                         "omit scheme sections from the judge prompt");
    prompt_cmd->add_option("--kb", prompt_args.kb, "scheme knowledge-base file");

    GenerateArgs gen_args;
    auto* gen_cmd = app.add_subcommand("generate", "generate candidate questions");
    gen_cmd->add_option("--corpus", gen_args.corpus, "corpus JSON file")->required();
    gen_cmd->add_option("--mode", gen_args.mode, mode_desc);
    gen_cmd->add_option("--n", gen_args.n, "questions per prompt");
    gen_cmd->add_option("--model", gen_args.model, "questioner model")->required();
    gen_cmd->add_option("--out", gen_args.out, "candidates file to write")->required();
    gen_cmd->add_option("--runs", gen_args.runs, "independent runs")
        ->check(CLI::PositiveNumber);
    gen_args.temperature_opt =
        gen_cmd->add_option("--temperature", gen_args.temperature, "sampling temperature");
    gen_args.max_tokens_opt =
        gen_cmd->add_option("--max-tokens", gen_args.max_tokens, "completion cap");
    gen_cmd->add_option("--retries", gen_args.retries, "retries per request");
    gen_cmd->add_option("--timeout-ms", gen_args.timeout_ms, "request timeout");
    gen_cmd->add_option("--workers", gen_args.workers, "concurrent interventions")
        ->check(CLI::PositiveNumber);
    gen_cmd->add_option("--kb", gen_args.kb, "scheme knowledge-base file");
    add_backend_flags(gen_cmd, gen_args.backend, "", "questioner");

    SelectArgs sel_args;
    auto* sel_cmd = app.add_subcommand("select", "select k questions per intervention");
    sel_cmd->add_option("--candidates", sel_args.candidates, "candidates file")
        ->required();
    sel_cmd->add_option("--strategy", sel_args.strategy, "judge|random|oracle")
        ->required()
        ->check(CLI::IsMember({"judge", "random", "oracle"}));
    sel_cmd->add_option("--k", sel_args.k, "questions to keep");
    sel_cmd->add_option("--out", sel_args.out, "selections file to write")->required();
    sel_cmd->add_option("--run", sel_args.run, "candidate run to select from (0 = all)");
    sel_cmd->add_option("--corpus", sel_args.corpus,
                        "corpus file (schemes for the judge, references for the oracle)");
    sel_cmd->add_option("--kb", sel_args.kb, "scheme knowledge-base file");
    sel_cmd->add_option("--judge-model", sel_args.judge_model, "judge model");
    sel_cmd->add_option("--seed", sel_args.seed, "random-strategy seed");
    sel_cmd->add_option("--retries", sel_args.retries, "retries per request");
    sel_cmd->add_option("--timeout-ms", sel_args.timeout_ms, "request timeout");
    sel_cmd->add_flag("--no-schemes", sel_args.no_schemes,
                      "omit scheme sections from the judge prompt");
    add_backend_flags(sel_cmd, sel_args.judge_backend, "", "judge");
    sel_cmd->add_option("--embed-model", sel_args.embed_model,
                        "embedding model (oracle strategy)");
    sel_cmd->add_option("--threshold", sel_args.threshold,
                        "similarity threshold (oracle strategy)");
    sel_cmd->add_flag("--strict-gt", sel_args.strict_gt,
                      "label on similarity strictly above the threshold");
    sel_cmd->add_option("--cache", sel_args.cache, "embedding cache file");
    add_backend_flags(sel_cmd, sel_args.embed_backend, "embed-", "embedding");

    EvaluateArgs eval_args;
    auto* eval_cmd = app.add_subcommand("evaluate", "label a submission against references");
    eval_cmd->add_option("--corpus", eval_args.corpus, "corpus JSON file")->required();
    eval_cmd->add_option("--submission", eval_args.submission, "submission file")
        ->required();
    eval_cmd->add_option("--embed-model", eval_args.embed_model, "embedding model")
        ->required();
    eval_cmd->add_option("--threshold", eval_args.threshold, "similarity threshold");
    eval_cmd->add_option("--out", eval_args.out, "report file to write")->required();
    eval_cmd->add_flag("--strict-gt", eval_args.strict_gt,
                       "label on similarity strictly above the threshold");
    eval_cmd->add_option("--cache", eval_args.cache, "embedding cache file");
    eval_cmd->add_option("--kb", eval_args.kb, "scheme knowledge-base file");
    add_backend_flags(eval_cmd, eval_args.backend, "", "embedding");

    McNemarArgs mc_args;
    auto* mc_cmd = app.add_subcommand("mcnemar", "paired significance test on two reports");
    mc_cmd->add_option("--a", mc_args.a, "first outcomes/report file")->required();
    mc_cmd->add_option("--b", mc_args.b, "second outcomes/report file")->required();
    mc_cmd->add_flag("--chi2", mc_args.chi2,
                     "continuity-corrected chi-squared instead of the exact test");

    ExperimentArgs exp_args;
    auto* exp_cmd = app.add_subcommand("experiment", "run a full experiment");
    exp_cmd->add_option("--config", exp_args.config, "experiment TOML file");
    exp_cmd->add_option("--preset", exp_args.preset, "sub1|sub2|sub3")
        ->check(CLI::IsMember({"sub1", "sub2", "sub3"}));
    exp_cmd->add_flag("--resume,!--no-resume", exp_args.resume,
                      "reuse stage artifacts whose config digest matches");
    exp_cmd->add_option("--corpus", exp_args.corpus, "corpus JSON file");
    exp_cmd->add_option("--out-dir", exp_args.out_dir, "artifact directory");
    exp_cmd->add_option("--kb", exp_args.kb, "scheme knowledge-base file");
    exp_cmd->add_option("--mode", exp_args.mode, mode_desc);
    exp_cmd->add_option("--n", exp_args.n, "questions per prompt");
    exp_cmd->add_option("--k", exp_args.k, "questions to keep");
    exp_cmd->add_option("--runs", exp_args.runs, "independent runs");
    exp_cmd->add_option("--seeds", exp_args.seeds, "per-run seeds");
    exp_cmd->add_option("--strategies", exp_args.strategies, "judge|random|oracle");
    exp_cmd->add_option("--workers", exp_args.workers, "concurrent interventions");
    exp_cmd->add_option("--failure-threshold", exp_args.failure_threshold,
                        "abort past this failure fraction");
    exp_cmd->add_option("--split-part", exp_args.split_part, "train|val|test");
    exp_cmd->add_option("--embed-model", exp_args.embed_model, "embedding model");
    exp_cmd->add_option("--threshold", exp_args.threshold, "similarity threshold");
    exp_cmd->add_flag("--strict-gt", exp_args.strict_gt,
                      "label on similarity strictly above the threshold");
    exp_cmd->add_option("--cache", exp_args.cache, "embedding cache file");
    exp_cmd->add_option("--questioner-model", exp_args.questioner_model,
                        "questioner model");
    exp_cmd->add_option("--judge-model", exp_args.judge_model, "judge model");
    add_backend_flags(exp_cmd, exp_args.questioner_backend, "questioner-", "questioner");
    add_backend_flags(exp_cmd, exp_args.judge_backend, "judge-", "judge");
    add_backend_flags(exp_cmd, exp_args.embed_backend, "embed-", "embedding");

    ReportArgs rep_args;
    auto* rep_cmd = app.add_subcommand("report", "render experiment reports as a table");
    rep_cmd->add_option("--dir", rep_args.dir, "experiment output directory")
        ->required();
    rep_cmd->add_option("--layout", rep_args.layout,
                        "model_grid|scheme_ablation|count_sweep|strategy_compare");
    rep_cmd->add_flag("--csv", rep_args.csv, "emit CSV instead of aligned text");

    try {
        app.parse(argc, argv);
        if (*prompt_cmd) return cmd_prompt(prompt_args);
        if (*gen_cmd) return cmd_generate(gen_args);
        if (*sel_cmd) return cmd_select(sel_args);
        if (*eval_cmd) return cmd_evaluate(eval_args);
        if (*mc_cmd) return cmd_mcnemar(mc_args);
        if (*exp_cmd) return cmd_experiment(exp_args, exp_cmd);
        if (*rep_cmd) return cmd_report(rep_args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFatal;
    }
    return kExitOk;
}
