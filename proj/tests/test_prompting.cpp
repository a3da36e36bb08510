#include <doctest/doctest.h>

#include <string>
#include <vector>

#include "cqforge/error.hpp"
#include "cqforge/prompting.hpp"
#include "cqforge/scheme_kb.hpp"

using namespace cqforge;

namespace {

// The role/definition/instruction sentences, restated here so a silent edit to
// the production strings fails the suite.
const std::string kRole = "You are a critical judge.";
const std::string kJudgeRole = "You are a very strict critical and sceptical judge.";
const std::string kCqDef =
    "Critical questions are the set of enquiries that should be asked in order to "
    "judge if an argument is good or fallacious by unmasking the assumptions held "
    "by the premises of the argument.";
const std::string kSchemeDef =
    "Argumentative schemes are stereotypical patterns of inference that capture "
    "common types of defeasible arguments, i.e. arguments that are plausible but "
    "open to rebuttal. Each scheme represents a form of reasoning with typical "
    "premises and a conclusion.";
const std::string kOutput =
    "Give one question per line. Make the questions simple, and do not give any "
    "explanation regarding why the question is relevant.";

Intervention make_iv(std::vector<std::string> schemes) {
    Intervention iv;
    iv.intervention_id = "iv_test";
    iv.text = "Cities should ban cars.";
    iv.schemes = std::move(schemes);
    return iv;
}

std::string join(const std::vector<std::string>& sections) {
    std::string out;
    for (const auto& s : sections) {
        if (!out.empty()) out += "\n\n";
        out += s;
    }
    return out;
}

std::string block_for(const std::string& scheme_name) {
    const auto& e = TemplateSet::bundled().lookup(scheme_name);
    std::string b = "Scheme: " + e.name + "\nDefinition: " + e.definition +
                    "\nTemplate of critical questions:";
    for (const auto& q : e.template_questions) b += "\n" + q;
    return b;
}

}  // namespace

TEST_CASE("scheme modes round-trip through strings") {
    for (auto mode : {SchemeMode::Without, SchemeMode::WithOne, SchemeMode::WithMult,
                      SchemeMode::BothMerged, SchemeMode::BothSingle})
        CHECK(scheme_mode_from_string(to_string(mode)) == mode);
    CHECK(scheme_mode_from_string("both-single") == SchemeMode::BothSingle);
    CHECK_THROWS_AS(scheme_mode_from_string("with_one"), ValidationError);
}

TEST_CASE("question origins round-trip through strings") {
    CHECK(to_string(QuestionOrigin::no_scheme()) == "NoScheme");
    CHECK(to_string(QuestionOrigin::from_scheme("Bias")) == "Scheme(Bias)");
    CHECK(origin_from_string("NoScheme") == QuestionOrigin::no_scheme());
    CHECK(origin_from_string("Scheme(all)") == QuestionOrigin::from_scheme("all"));
    CHECK(origin_from_string("Scheme(Expert opinion)") ==
          QuestionOrigin::from_scheme("Expert opinion"));
    CHECK_THROWS_AS(origin_from_string("Scheme()"), ValidationError);
    CHECK_THROWS_AS(origin_from_string("noscheme"), ValidationError);
}

TEST_CASE("scheme-free prompt matches the golden rendering exactly") {
    const auto iv = make_iv({});
    const auto out = build_questioner_prompts(iv, SchemeMode::Without, 4,
                                              TemplateSet::bundled());
    REQUIRE(out.prompts.size() == 1);
    CHECK(out.warnings.empty());

    const std::string expected = join({
        "Essay:\nCities should ban cars.",
        kRole,
        kCqDef,
        "Your goal is to generate 4 critical questions to evaluate the arguments in "
        "the given essay.",
        kOutput,
    });
    CHECK(out.prompts[0].text == expected);
    CHECK(out.prompts[0].origin == QuestionOrigin::no_scheme());
    CHECK(out.prompts[0].expected_questions == 4);
}

TEST_CASE("with-one merges all annotated schemes into a single prompt") {
    const auto iv = make_iv({"Example", "Positive consequences"});
    const auto out = build_questioner_prompts(iv, SchemeMode::WithOne, 3,
                                              TemplateSet::bundled());
    REQUIRE(out.prompts.size() == 1);

    const std::string expected = join({
        "Essay:\nCities should ban cars.",
        kRole,
        kCqDef,
        kSchemeDef,
        block_for("Example"),
        block_for("Positive consequences"),
        "Use the provided scheme and template of critical questions to generate 3 "
        "critical questions to evaluate the arguments in the given essay.",
        kOutput,
    });
    CHECK(out.prompts[0].text == expected);
    CHECK(out.prompts[0].origin == QuestionOrigin::from_scheme("all"));
    CHECK(out.prompts[0].expected_questions == 3);
}

TEST_CASE("with-mult renders one prompt per unique scheme") {
    // Duplicate annotations collapse to one prompt each.
    const auto iv = make_iv({"Example", "Sign", "Example"});
    const auto out = build_questioner_prompts(iv, SchemeMode::WithMult, 2,
                                              TemplateSet::bundled());
    REQUIRE(out.prompts.size() == 2);
    CHECK(out.prompts[0].origin == QuestionOrigin::from_scheme("Example"));
    CHECK(out.prompts[1].origin == QuestionOrigin::from_scheme("Sign"));
    CHECK(out.prompts[0].text.find(block_for("Example")) != std::string::npos);
    CHECK(out.prompts[0].text.find("Scheme: Sign") == std::string::npos);
    CHECK(out.prompts[1].text.find(block_for("Sign")) != std::string::npos);
    for (const auto& p : out.prompts) CHECK(p.expected_questions == 2);
}

TEST_CASE("both-merged sends the scheme-free prompt first") {
    const auto iv = make_iv({"Analogy"});
    const auto out = build_questioner_prompts(iv, SchemeMode::BothMerged, 4,
                                              TemplateSet::bundled());
    REQUIRE(out.prompts.size() == 2);
    CHECK(out.prompts[0].origin == QuestionOrigin::no_scheme());
    CHECK(out.prompts[0].text.find("Scheme:") == std::string::npos);
    CHECK(out.prompts[1].origin == QuestionOrigin::from_scheme("all"));
    CHECK(out.prompts[1].text.find(block_for("Analogy")) != std::string::npos);
    CHECK(out.prompts[0].expected_questions == 4);
    CHECK(out.prompts[1].expected_questions == 4);
}

TEST_CASE("both-single asks one prompt for 2n questions") {
    const auto iv = make_iv({"Analogy", "Value"});
    const auto out = build_questioner_prompts(iv, SchemeMode::BothSingle, 4,
                                              TemplateSet::bundled());
    REQUIRE(out.prompts.size() == 1);
    const auto& p = out.prompts[0];
    CHECK(p.expected_questions == 8);
    CHECK(p.origin == QuestionOrigin::from_scheme("all"));
    CHECK(p.text.find(
              "Your goal is to generate 4 critical questions without considering the "
              "schemes and 4 critical questions using the provided scheme and template "
              "to evaluate the arguments in the given essay.") != std::string::npos);
    CHECK(p.text.find(block_for("Analogy")) != std::string::npos);
    CHECK(p.text.find(block_for("Value")) != std::string::npos);
}

TEST_CASE("scheme modes without annotations fall back with a warning") {
    const auto iv = make_iv({});
    for (auto mode : {SchemeMode::WithOne, SchemeMode::WithMult, SchemeMode::BothMerged,
                      SchemeMode::BothSingle}) {
        const auto out = build_questioner_prompts(iv, mode, 3, TemplateSet::bundled());
        REQUIRE(out.prompts.size() == 1);
        CHECK(out.prompts[0].origin == QuestionOrigin::no_scheme());
        CHECK(out.prompts[0].expected_questions == 3);
        REQUIRE(out.warnings.size() == 1);
        CHECK(out.warnings[0] ==
              "intervention \"iv_test\" has no scheme annotations; falling back to "
              "scheme-free prompting");
    }
}

TEST_CASE("questioner prompt validation") {
    const auto iv = make_iv({});
    CHECK_THROWS_AS(build_questioner_prompts(iv, SchemeMode::Without, 0,
                                             TemplateSet::bundled()),
                    ValidationError);
}

TEST_CASE("judge prompt matches the golden rendering") {
    const auto iv = make_iv({"Example"});
    const std::vector<std::string> candidates = {"First question?", "Second question?",
                                                 "Third question?"};

    SUBCASE("with schemes") {
        const std::string expected = join({
            "Essay:\nCities should ban cars.",
            kJudgeRole,
            kCqDef,
            kSchemeDef,
            block_for("Example"),
            "Candidate critical questions:\n1. First question?\n2. Second question?\n"
            "3. Third question?",
            "Select the 2 best critical questions that should be raised before "
            "accepting the arguments in the essay. If some questions are redundant, "
            "these questions must be important: select the most relevant one.",
            kOutput,
        });
        CHECK(build_judge_prompt(iv, candidates, 2, true, TemplateSet::bundled()) ==
              expected);
    }
    SUBCASE("schemes suppressed") {
        const std::string prompt =
            build_judge_prompt(iv, candidates, 3, false, TemplateSet::bundled());
        CHECK(prompt.find(kSchemeDef) == std::string::npos);
        CHECK(prompt.find("Scheme: Example") == std::string::npos);
        CHECK(prompt.find("Select the 3 best critical questions") != std::string::npos);
    }
    SUBCASE("no annotations means no scheme sections even when asked") {
        const auto plain = make_iv({});
        const std::string prompt =
            build_judge_prompt(plain, candidates, 3, true, TemplateSet::bundled());
        CHECK(prompt.find(kSchemeDef) == std::string::npos);
    }
    SUBCASE("validation") {
        CHECK_THROWS_AS(build_judge_prompt(iv, {}, 3, true, TemplateSet::bundled()),
                        ValidationError);
        CHECK_THROWS_AS(build_judge_prompt(iv, candidates, 0, true, TemplateSet::bundled()),
                        ValidationError);
    }
}
