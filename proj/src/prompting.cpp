#include "cqforge/prompting.hpp"

#include <set>
#include <sstream>

#include "cqforge/error.hpp"

namespace cqforge {

namespace {

constexpr const char* kQuestionerRole = "You are a critical judge.";
constexpr const char* kJudgeRole = "You are a very strict critical and sceptical judge.";
constexpr const char* kCqDefinition =
    "Critical questions are the set of enquiries that should be asked in order to "
    "judge if an argument is good or fallacious by unmasking the assumptions held "
    "by the premises of the argument.";
constexpr const char* kSchemeDefinition =
    "Argumentative schemes are stereotypical patterns of inference that capture "
    "common types of defeasible arguments, i.e. arguments that are plausible but "
    "open to rebuttal. Each scheme represents a form of reasoning with typical "
    "premises and a conclusion.";
constexpr const char* kOutputInstructions =
    "Give one question per line. Make the questions simple, and do not give any "
    "explanation regarding why the question is relevant.";

std::string essay_section(const Intervention& intervention) {
    return "Essay:\n" + intervention.text;
}

std::string scheme_block(const SchemeEntry& entry) {
    std::string block = "Scheme: " + entry.name + "\nDefinition: " + entry.definition +
                        "\nTemplate of critical questions:";
    for (const auto& q : entry.template_questions) block += "\n" + q;
    return block;
}

std::string join_sections(const std::vector<std::string>& sections) {
    std::string out;
    for (const auto& s : sections) {
        if (!out.empty()) out += "\n\n";
        out += s;
    }
    return out;
}

std::string goal_without(int n) {
    return "Your goal is to generate " + std::to_string(n) +
           " critical questions to evaluate the arguments in the given essay.";
}

std::string goal_with_schemes(int n) {
    return "Use the provided scheme and template of critical questions to generate " +
           std::to_string(n) +
           " critical questions to evaluate the arguments in the given essay.";
}

std::string goal_both_single(int n) {
    const std::string count = std::to_string(n);
    return "Your goal is to generate " + count +
           " critical questions without considering the schemes and " + count +
           " critical questions using the provided scheme and template to evaluate "
           "the arguments in the given essay.";
}

std::vector<std::string> unique_schemes(const Intervention& intervention) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& name : intervention.schemes)
        if (seen.insert(name).second) out.push_back(name);
    return out;
}

QuestionerPrompt without_prompt(const Intervention& intervention, int n) {
    QuestionerPrompt p;
    p.text = join_sections({essay_section(intervention), kQuestionerRole,
                            kCqDefinition, goal_without(n), kOutputInstructions});
    p.origin = QuestionOrigin::no_scheme();
    p.expected_questions = n;
    return p;
}

QuestionerPrompt scheme_prompt(const Intervention& intervention,
                               const std::vector<std::string>& scheme_names,
                               const std::string& goal, QuestionOrigin origin,
                               int expected, const TemplateSet& kb) {
    std::vector<std::string> sections = {essay_section(intervention), kQuestionerRole,
                                         kCqDefinition, kSchemeDefinition};
    for (const auto& name : scheme_names) sections.push_back(scheme_block(kb.lookup(name)));
    sections.push_back(goal);
    sections.push_back(kOutputInstructions);

    QuestionerPrompt p;
    p.text = join_sections(sections);
    p.origin = std::move(origin);
    p.expected_questions = expected;
    return p;
}

}  // namespace

SchemeMode scheme_mode_from_string(std::string_view s) {
    if (s == "without") return SchemeMode::Without;
    if (s == "with-one") return SchemeMode::WithOne;
    if (s == "with-mult") return SchemeMode::WithMult;
    if (s == "both-merged") return SchemeMode::BothMerged;
    if (s == "both-single") return SchemeMode::BothSingle;
    throw ValidationError("unknown scheme mode \"" + std::string(s) +
                          "\" (expected without, with-one, with-mult, both-merged, "
                          "or both-single)");
}

std::string_view to_string(SchemeMode mode) {
    switch (mode) {
        case SchemeMode::Without: return "without";
        case SchemeMode::WithOne: return "with-one";
        case SchemeMode::WithMult: return "with-mult";
        case SchemeMode::BothMerged: return "both-merged";
        case SchemeMode::BothSingle: return "both-single";
    }
    return "without";
}

std::string to_string(const QuestionOrigin& origin) {
    if (origin.kind == QuestionOrigin::Kind::NoScheme) return "NoScheme";
    return "Scheme(" + origin.scheme + ")";
}

QuestionOrigin origin_from_string(std::string_view s) {
    if (s == "NoScheme") return QuestionOrigin::no_scheme();
    if (s.size() > 8 && s.substr(0, 7) == "Scheme(" && s.back() == ')')
        return QuestionOrigin::from_scheme(std::string(s.substr(7, s.size() - 8)));
    throw ValidationError("unknown question origin \"" + std::string(s) + "\"");
}

QuestionerPrompts build_questioner_prompts(const Intervention& intervention,
                                           SchemeMode mode, int n,
                                           const TemplateSet& kb) {
    if (n < 1) throw ValidationError("question count must be at least 1");

    QuestionerPrompts result;
    const auto schemes = unique_schemes(intervention);

    if (mode != SchemeMode::Without && schemes.empty()) {
        result.warnings.push_back("intervention \"" + intervention.intervention_id +
                                  "\" has no scheme annotations; falling back to "
                                  "scheme-free prompting");
        mode = SchemeMode::Without;
    }

    switch (mode) {
        case SchemeMode::Without:
            result.prompts.push_back(without_prompt(intervention, n));
            break;
        case SchemeMode::WithOne:
            result.prompts.push_back(scheme_prompt(intervention, schemes,
                                                   goal_with_schemes(n),
                                                   QuestionOrigin::from_scheme("all"), n, kb));
            break;
        case SchemeMode::WithMult:
            for (const auto& name : schemes)
                result.prompts.push_back(scheme_prompt(intervention, {name},
                                                       goal_with_schemes(n),
                                                       QuestionOrigin::from_scheme(name), n, kb));
            break;
        case SchemeMode::BothMerged:
            result.prompts.push_back(without_prompt(intervention, n));
            result.prompts.push_back(scheme_prompt(intervention, schemes,
                                                   goal_with_schemes(n),
                                                   QuestionOrigin::from_scheme("all"), n, kb));
            break;
        case SchemeMode::BothSingle:
            result.prompts.push_back(scheme_prompt(intervention, schemes,
                                                   goal_both_single(n),
                                                   QuestionOrigin::from_scheme("all"), 2 * n, kb));
            break;
    }
    return result;
}

std::string build_judge_prompt(const Intervention& intervention,
                               const std::vector<std::string>& candidates, int k,
                               bool include_schemes, const TemplateSet& kb) {
    if (candidates.empty())
        throw ValidationError("judge prompt requires at least one candidate question");
    if (k < 1) throw ValidationError("selection size must be at least 1");

    std::vector<std::string> sections = {essay_section(intervention), kJudgeRole,
                                         kCqDefinition};
    const auto schemes = unique_schemes(intervention);
    if (include_schemes && !schemes.empty()) {
        sections.push_back(kSchemeDefinition);
        for (const auto& name : schemes) sections.push_back(scheme_block(kb.lookup(name)));
    }

    std::string listing = "Candidate critical questions:";
    for (std::size_t i = 0; i < candidates.size(); ++i)
        listing += "\n" + std::to_string(i + 1) + ". " + candidates[i];
    sections.push_back(std::move(listing));

    sections.push_back("Select the " + std::to_string(k) +
                       " best critical questions that should be raised before accepting "
                       "the arguments in the essay. If some questions are redundant, "
                       "these questions must be important: select the most relevant one.");
    sections.push_back(kOutputInstructions);
    return join_sections(sections);
}

}  // namespace cqforge
