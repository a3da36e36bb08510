#include <doctest/doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cqforge/error.hpp"
#include "cqforge/selection.hpp"
#include "cqforge/text.hpp"
#include "helpers.hpp"

using namespace cqforge;

namespace {

Intervention make_iv(const std::string& id = "iv_sel") {
    Intervention iv;
    iv.intervention_id = id;
    iv.text = "Cities should ban cars.";
    return iv;
}

CandidatePool make_pool(const std::vector<std::string>& texts,
                        const std::string& id = "iv_sel") {
    CandidatePool pool;
    pool.intervention_id = id;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        CandidateQuestion q;
        q.text = texts[i];
        q.origin = (i % 2 == 0) ? QuestionOrigin::no_scheme()
                                : QuestionOrigin::from_scheme("all");
        q.line_index = static_cast<int>(i);
        pool.candidates.push_back(std::move(q));
    }
    return pool;
}

// Judge stub that replays a fixed completion and records the prompt.
class ScriptedJudge : public Backend {
public:
    explicit ScriptedJudge(std::string reply) : reply_(std::move(reply)) {}

    std::string generate(const GenParams&, const std::string& prompt) override {
        last_prompt = prompt;
        return reply_;
    }
    std::vector<EmbeddingVector> embed(const std::string&,
                                       const std::vector<std::string>&) override {
        throw Error("embed is not part of this stub");
    }
    std::string describe() const override { return "scripted"; }

    std::string last_prompt;

private:
    std::string reply_;
};

SelectionResult run_judge(const std::string& reply, const CandidatePool& pool, int k,
                          bool include_schemes = false) {
    ScriptedJudge backend(reply);
    GenParams p;
    p.model = "judge-model";
    return select_judge(backend, p, make_iv(), pool, k, TemplateSet::bundled(),
                        include_schemes);
}

}  // namespace

TEST_CASE("select_judge maps exact (casefolded) lines back to candidates") {
    const auto pool = make_pool({"Is the ban fair?", "Who pays for transit?",
                                 "What about deliveries?", "Does pollution drop?"});
    const auto result =
        run_judge("1. WHO PAYS FOR TRANSIT?\n2. Is the ban fair?", pool, 2);

    CHECK(result.intervention_id == "iv_sel");
    CHECK(result.strategy == "judge(judge-model)");
    REQUIRE(result.judge_raw.has_value());
    CHECK(*result.judge_raw == "1. WHO PAYS FOR TRANSIT?\n2. Is the ban fair?");
    // Canonical candidate spelling wins over the judge's casing.
    CHECK(result.selected ==
          std::vector<std::string>{"Who pays for transit?", "Is the ban fair?"});
    CHECK(result.provenance == std::vector<std::string>{"Scheme(all)", "NoScheme"});
    CHECK(result.warnings.empty());
}

TEST_CASE("select_judge falls back to token overlap, ties to the lower index") {
    SUBCASE("paraphrase above the overlap threshold matches") {
        const auto pool = make_pool({"Is the proposed ban on cars fair to commuters?",
                                     "Completely different other thing?"});
        const auto result = run_judge(
            "1. Is the proposed ban on cars fair?\n2. Completely different other thing?",
            pool, 2);
        CHECK(result.selected[0] == "Is the proposed ban on cars fair to commuters?");
        CHECK(result.provenance[0] == "NoScheme");
    }
    SUBCASE("equal-overlap tie goes to the earlier candidate") {
        // "alpha beta gamma delta?" overlaps each candidate equally.
        const auto pool = make_pool({"alpha beta gamma epsilon?", "alpha beta gamma zeta?"});
        const auto result = run_judge("1. alpha beta gamma delta?\n", pool, 1);
        REQUIRE(result.selected.size() == 1);
        CHECK(result.selected[0] == "alpha beta gamma epsilon?");
    }
}

TEST_CASE("select_judge keeps unmatched lines verbatim and flags them") {
    const auto pool = make_pool({"Is the ban fair?", "Who pays for transit?"});
    const auto result =
        run_judge("1. Entirely novel judge invention?\n2. Is the ban fair?", pool, 2);

    CHECK(result.selected ==
          std::vector<std::string>{"Entirely novel judge invention?", "Is the ban fair?"});
    CHECK(result.provenance == std::vector<std::string>{"Unmatched", "NoScheme"});
    REQUIRE(result.warnings.size() == 1);
    CHECK(result.warnings[0].find("kept verbatim") != std::string::npos);
}

TEST_CASE("select_judge drops duplicates and fills shortfall from the pool") {
    const auto pool = make_pool({"First candidate?", "Second candidate?",
                                 "Third candidate?", "Fourth candidate?"});

    SUBCASE("repeated judge picks collapse") {
        const auto result =
            run_judge("1. First candidate?\n2. FIRST CANDIDATE?\n3. Third candidate?",
                      pool, 3);
        REQUIRE(result.selected.size() == 3);
        CHECK(result.selected[0] == "First candidate?");
        CHECK(result.selected[1] == "Third candidate?");
        // Shortfall of one filled from the pool in order, skipping taken texts.
        CHECK(result.selected[2] == "Second candidate?");
        bool saw_dup = false, saw_fill = false;
        for (const auto& w : result.warnings) {
            if (w.find("duplicate dropped") != std::string::npos) saw_dup = true;
            if (w.find("filled 1 slot(s) from the pool in order") != std::string::npos)
                saw_fill = true;
        }
        CHECK(saw_dup);
        CHECK(saw_fill);
    }
    SUBCASE("unparseable judge output keeps the first k candidates") {
        const auto result = run_judge("The judge rambles without questions.", pool, 2);
        CHECK(result.selected ==
              std::vector<std::string>{"First candidate?", "Second candidate?"});
        CHECK(result.provenance == std::vector<std::string>{"NoScheme", "Scheme(all)"});
        REQUIRE(!result.warnings.empty());
        CHECK(result.warnings[0].find("no parseable questions") != std::string::npos);
    }
    SUBCASE("overlong judge lists are cut to k") {
        const auto result = run_judge(
            "1. First candidate?\n2. Second candidate?\n3. Third candidate?", pool, 2);
        CHECK(result.selected ==
              std::vector<std::string>{"First candidate?", "Second candidate?"});
    }
}

TEST_CASE("select_judge renders the prompt it claims to") {
    const auto pool = make_pool({"Only one?"});
    ScriptedJudge backend("1. Only one?");
    GenParams p;
    p.model = "j";
    const auto iv = make_iv();
    select_judge(backend, p, iv, pool, 1, TemplateSet::bundled(), true);
    CHECK(backend.last_prompt ==
          build_judge_prompt(iv, {"Only one?"}, 1, true, TemplateSet::bundled()));
}

TEST_CASE("select_judge validation") {
    ScriptedJudge backend("1. X?");
    GenParams p;
    p.model = "j";
    CandidatePool empty;
    empty.intervention_id = "iv_sel";
    CHECK_THROWS_AS(
        select_judge(backend, p, make_iv(), empty, 3, TemplateSet::bundled()),
        ValidationError);
    const auto pool = make_pool({"X?"});
    CHECK_THROWS_AS(select_judge(backend, p, make_iv(), pool, 0, TemplateSet::bundled()),
                    ValidationError);
}

TEST_CASE("select_random draws without replacement, deterministically per seed") {
    const auto pool =
        make_pool({"A?", "B?", "C?", "D?", "E?", "F?", "G?", "H?"});

    const auto r1 = select_random(pool, 3, 42);
    const auto r2 = select_random(pool, 3, 42);
    CHECK(r1.selected == r2.selected);
    CHECK(r1.strategy == "random(42)");
    REQUIRE(r1.selected.size() == 3);
    std::set<std::string> uniq(r1.selected.begin(), r1.selected.end());
    CHECK(uniq.size() == 3);

    // k larger than the pool takes everything.
    const auto all = select_random(pool, 99, 7);
    CHECK(all.selected.size() == 8);

    CHECK_THROWS_AS(select_random(CandidatePool{}, 3, 0), ValidationError);
    CHECK_THROWS_AS(select_random(pool, 0, 0), ValidationError);
}

TEST_CASE("select_random is uniform over candidates") {
    // 8 candidates, k = 3: each candidate should be chosen in ~3/8 of runs.
    const auto pool =
        make_pool({"A?", "B?", "C?", "D?", "E?", "F?", "G?", "H?"});
    std::map<std::string, int> hits;
    const int kTrials = 10000;
    for (int seed = 0; seed < kTrials; ++seed) {
        const auto r = select_random(pool, 3, static_cast<std::uint64_t>(seed));
        for (const auto& s : r.selected) hits[s]++;
    }
    REQUIRE(hits.size() == 8);
    for (const auto& [text, n] : hits) {
        const double frac = static_cast<double>(n) / kTrials;
        CHECK(frac > 3.0 / 8.0 - 0.02);
        CHECK(frac < 3.0 / 8.0 + 0.02);
    }
}

TEST_CASE("select_oracle fills by label priority, pool order within a class") {
    const auto pool = make_pool({"c0?", "c1?", "c2?", "c3?", "c4?", "c5?"});

    SUBCASE("useful first, then unhelpful, then invalid, then not-able") {
        const std::vector<EvalLabel> labels = {
            EvalLabel::NotAbleToEvaluate, EvalLabel::Invalid, EvalLabel::Useful,
            EvalLabel::Unhelpful,         EvalLabel::Useful,  EvalLabel::NotAbleToEvaluate,
        };
        const auto r = select_oracle(pool, labels, 3);
        CHECK(r.strategy == "oracle");
        CHECK(r.selected == std::vector<std::string>{"c2?", "c4?", "c3?"});
    }
    SUBCASE("exhausts priority classes in order when k is large") {
        const std::vector<EvalLabel> labels = {
            EvalLabel::Invalid,          EvalLabel::NotAbleToEvaluate,
            EvalLabel::Unhelpful,        EvalLabel::Useful,
            EvalLabel::NotAbleToEvaluate, EvalLabel::Invalid,
        };
        const auto r = select_oracle(pool, labels, 6);
        CHECK(r.selected ==
              std::vector<std::string>{"c3?", "c2?", "c0?", "c5?", "c1?", "c4?"});
    }
    SUBCASE("labels must be parallel to the pool") {
        CHECK_THROWS_AS(select_oracle(pool, {EvalLabel::Useful}, 3), ValidationError);
    }
}

TEST_CASE("select_oracle maximizes Useful count over all k-subsets") {
    // Exhaustive cross-check: for every label multiset over a pool of 5 and
    // k = 3, the oracle's Useful count equals the best achievable, and its
    // full label profile is lexicographically optimal by priority.
    const auto pool = make_pool({"c0?", "c1?", "c2?", "c3?", "c4?"});
    const EvalLabel all_labels[] = {EvalLabel::Useful, EvalLabel::Unhelpful,
                                    EvalLabel::Invalid, EvalLabel::NotAbleToEvaluate};
    const int k = 3;

    auto priority_rank = [](EvalLabel l) {
        switch (l) {
            case EvalLabel::Useful: return 0;
            case EvalLabel::Unhelpful: return 1;
            case EvalLabel::Invalid: return 2;
            case EvalLabel::NotAbleToEvaluate: return 3;
        }
        return 3;
    };

    std::vector<EvalLabel> labels(5);
    int combos = 0;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d)
                    for (int e = 0; e < 4; ++e) {
                        labels = {all_labels[a], all_labels[b], all_labels[c],
                                  all_labels[d], all_labels[e]};
                        const auto r = select_oracle(pool, labels, k);
                        REQUIRE(r.selected.size() == 3);

                        // Oracle profile: sorted priority ranks of its picks.
                        std::vector<int> oracle_profile;
                        for (const auto& text : r.selected) {
                            const std::size_t idx =
                                static_cast<std::size_t>(text[1] - '0');
                            oracle_profile.push_back(priority_rank(labels[idx]));
                        }
                        std::sort(oracle_profile.begin(), oracle_profile.end());

                        // Best achievable profile: the 3 smallest ranks overall.
                        std::vector<int> best;
                        for (const auto& l : labels) best.push_back(priority_rank(l));
                        std::sort(best.begin(), best.end());
                        best.resize(3);

                        CHECK(oracle_profile == best);
                        ++combos;
                    }
    CHECK(combos == 1024);
}

TEST_CASE("selections files round-trip") {
    testutil::TempDir tmp;
    const auto path = tmp.file("selections.json");

    Corpus corpus;
    corpus.interventions.push_back(make_iv("iv_sel"));

    SelectionResult sel;
    sel.intervention_id = "iv_sel";
    sel.selected = {"Kept one?", "Kept two?"};
    sel.provenance = {"NoScheme", "Unmatched"};
    sel.strategy = "judge(gemma2:9b)";
    sel.judge_raw = "1. Kept one?\n2. Kept two?";
    sel.warnings = {"judge line kept verbatim (no candidate match): \"Kept two?\""};

    save_selections(path, corpus, {sel}, "beadfeed00000000", {"iv_x: judge timed out"});

    const auto file = load_selections(path);
    CHECK(file.config_digest == "beadfeed00000000");
    REQUIRE(file.failures.size() == 1);
    CHECK(file.failures[0] == "iv_x: judge timed out");
    REQUIRE(file.entries.size() == 1);
    const auto& e = file.entries[0];
    CHECK(e.intervention_id == "iv_sel");
    CHECK(e.intervention_text == "Cities should ban cars.");
    CHECK(e.selected == sel.selected);
    CHECK(e.provenance == sel.provenance);
    CHECK(e.strategy == "judge(gemma2:9b)");
    CHECK(e.warnings == sel.warnings);

    SUBCASE("duplicate intervention ids are rejected") {
        CHECK_THROWS_AS(save_selections(tmp.file("dup.json"), corpus, {sel, sel}, "", {}),
                        ValidationError);
    }
    SUBCASE("unknown interventions are rejected") {
        SelectionResult ghost = sel;
        ghost.intervention_id = "ghost";
        CHECK_THROWS_AS(save_selections(tmp.file("ghost.json"), corpus, {ghost}, "", {}),
                        ValidationError);
    }
}

TEST_CASE("load_selections defaults provenance to Unmatched") {
    testutil::TempDir tmp;
    const auto path = tmp.file("plain.json");
    nlohmann::json doc = {
        {"iv",
         {{"intervention", "Essay."},
          {"cqs", {{{"id", 0}, {"cq", "Bare question?"}}}}}},
    };
    testutil::write_file(path, doc.dump());
    const auto file = load_selections(path);
    REQUIRE(file.entries.size() == 1);
    CHECK(file.entries[0].provenance == std::vector<std::string>{"Unmatched"});
    CHECK(file.entries[0].strategy.empty());
}
