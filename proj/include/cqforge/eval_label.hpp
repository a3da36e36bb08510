#pragma once

#include <string>
#include <string_view>

#include "cqforge/corpus.hpp"

namespace cqforge {

/// Evaluation outcome for one generated question. The first three values
/// mirror the annotation labels; NotAbleToEvaluate arises only from the
/// similarity-threshold rule, never from annotations.
enum class EvalLabel { Useful, Unhelpful, Invalid, NotAbleToEvaluate };

inline EvalLabel to_eval_label(AnnotationLabel label) {
    switch (label) {
        case AnnotationLabel::Useful: return EvalLabel::Useful;
        case AnnotationLabel::Unhelpful: return EvalLabel::Unhelpful;
        case AnnotationLabel::Invalid: return EvalLabel::Invalid;
    }
    return EvalLabel::Useful;
}

std::string_view to_string(EvalLabel label);
EvalLabel eval_label_from_string(std::string_view s);

}  // namespace cqforge
