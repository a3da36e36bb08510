#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cqforge/corpus.hpp"
#include "cqforge/scheme_kb.hpp"

namespace cqforge {

/// Which scheme information enters the questioner prompt.
enum class SchemeMode { Without, WithOne, WithMult, BothMerged, BothSingle };

SchemeMode scheme_mode_from_string(std::string_view s);
std::string_view to_string(SchemeMode mode);

/// Where a candidate question came from: a scheme-free prompt, or a
/// scheme-conditioned one (a named scheme, or "all" when every annotated
/// scheme shared one prompt).
struct QuestionOrigin {
    enum class Kind { NoScheme, Scheme };
    Kind kind = Kind::NoScheme;
    std::string scheme;  // scheme name or "all"; empty for NoScheme

    bool operator==(const QuestionOrigin&) const = default;

    static QuestionOrigin no_scheme() { return {Kind::NoScheme, ""}; }
    static QuestionOrigin from_scheme(std::string name) {
        return {Kind::Scheme, std::move(name)};
    }
};

std::string to_string(const QuestionOrigin& origin);
QuestionOrigin origin_from_string(std::string_view s);

struct QuestionerPrompt {
    std::string text;
    QuestionOrigin origin;
    int expected_questions = 0;  // lines the prompt asks for (2n for BothSingle)
};

struct QuestionerPrompts {
    std::vector<QuestionerPrompt> prompts;
    std::vector<std::string> warnings;
};

/// Render the questioner prompt(s) for one intervention. A scheme mode on an
/// intervention without scheme annotations falls back to Without and records
/// a warning instead of failing.
QuestionerPrompts build_questioner_prompts(const Intervention& intervention,
                                           SchemeMode mode, int n,
                                           const TemplateSet& kb);

/// Render the judge prompt over an ordered candidate list.
std::string build_judge_prompt(const Intervention& intervention,
                               const std::vector<std::string>& candidates, int k,
                               bool include_schemes, const TemplateSet& kb);

}  // namespace cqforge
