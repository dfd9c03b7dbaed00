#pragma once

// Pairwise comparison of the question and SQL specifications.

#include <vector>

#include "stef/model.hpp"

namespace stef::align {

struct FilterClassification {
  FilterStatus status = FilterStatus::kFullyApplied;
  std::vector<FilterTriple> required;
  std::vector<FilterTriple> matched;
  std::vector<FilterTriple> missing;
  std::vector<FilterTriple> mismatched;
  std::vector<FilterTriple> extra;
  bool extras_all_benign = true;
  std::vector<ClassifiedFilter> question_filters;
  std::vector<ClassifiedFilter> sql_filters;
};

/// Same column, compatible operator (LIKE and ILIKE agree, a one-value IN is
/// an equality) and equivalent values; IN lists compare as multisets.
/// Both filters are expected to be normalized already.
bool filters_match(const FilterTriple& a, const FilterTriple& b);

/// Normalizes both filter sets, drops ignored dimensions from both sides and
/// assigns the four-class status. COMPLEX SQL conditions are deferred to the
/// judge and never count as extras.
FilterClassification classify_filters(const QuestionSpec& qspec, const SqlSpec& spec,
                                      const AppRules& rules);

struct DimensionMatch {
  bool projection = true;
  bool aggregation = true;
  bool grouping = true;
};

/// A question-side COUNT(*) accepts any non-distinct COUNT. Extra grouping
/// columns are tolerated when a required or benign GROUP BY annotation
/// covers them.
DimensionMatch align_dimensions(const QuestionSpec& qspec, const SqlSpec& spec,
                                const std::vector<NormalizationAnnotation>& annotations);

/// Assembles the record and checks its invariants.
AlignmentRecord build_alignment_record(const QuestionSpec& qspec, const SqlSpec& spec,
                                       const AppRules& rules,
                                       const std::vector<NormalizationAnnotation>& annotations);

}  // namespace stef::align
