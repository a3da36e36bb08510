#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cqforge/scheme_kb.hpp"

namespace cqforge {

/// Annotation attached to a reference question.
enum class AnnotationLabel { Useful, Unhelpful, Invalid };

AnnotationLabel annotation_label_from_string(std::string_view s);
std::string_view to_string(AnnotationLabel label);

struct ReferenceQuestion {
    std::string ref_id;   // unique within its intervention
    std::string text;     // normalized, nonempty
    AnnotationLabel label = AnnotationLabel::Useful;
};

/// One debate turn: the text to question, its annotated schemes, and the
/// reference questions used for evaluation.
struct Intervention {
    std::string intervention_id;
    std::optional<std::string> speaker;
    std::string text;                          // normalized, nonempty
    std::vector<std::string> schemes;          // canonical KB spellings, 0..6
    std::vector<ReferenceQuestion> references;
};

struct Corpus {
    std::string name;
    std::vector<Intervention> interventions;   // file order

    std::size_t size() const { return interventions.size(); }
    const Intervention* find(std::string_view intervention_id) const;
};

struct SplitSpec {
    std::uint64_t seed = 0;
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;
};

struct CorpusSplit {
    Corpus train;
    Corpus val;
    Corpus test;
};

/// Load and validate a corpus file. Scheme names are resolved against
/// `kb` and stored in canonical spelling; a name that does not resolve is a
/// load error. Validation problems are collected and reported together, one
/// line per offending intervention.
Corpus load_corpus(const std::filesystem::path& path,
                   const TemplateSet& kb = TemplateSet::bundled());

/// Deterministic partition: a seeded shuffle of intervention indices decides
/// membership; each part keeps the original corpus order.
CorpusSplit split_corpus(const Corpus& corpus, const SplitSpec& spec);

/// One intervention's worth of a submission file.
struct SubmissionEntry {
    std::string intervention_id;
    std::string intervention_text;
    std::vector<std::string> questions;
};

/// Write a submission file. Every entry must carry exactly `k` questions.
void save_generated(const std::filesystem::path& path,
                    const std::vector<SubmissionEntry>& entries, int k = 3);

/// Read a submission file (and the extended candidate/selection variants;
/// extension keys are ignored here). Entries come back in file order;
/// top-level keys starting with "_" are metadata and are skipped.
std::vector<SubmissionEntry> load_generated(const std::filesystem::path& path);

}  // namespace cqforge
