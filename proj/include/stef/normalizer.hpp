#pragma once

// Exemptions for production SQL idioms. Rules only annotate; the spec is
// never modified.

#include <cstdint>
#include <optional>
#include <vector>

#include "stef/model.hpp"

namespace stef::normalize {

struct NormalizerConfig {
  std::uint64_t lambda_min = 1000;

  /// Throws InvalidModel when lambda_min is zero.
  void check() const;
};

/// Fires when the query mixes aggregate and plain projections and groups by
/// every plain one.
std::optional<NormalizationAnnotation> rule1_required_group_by(const SqlSpec& spec);

/// One annotation per grouping column pinned to a single literal by WHERE.
std::vector<NormalizationAnnotation> rule2_benign_group_by(const SqlSpec& spec);

/// One annotation per ORDER BY entry unless the question asks for an order.
/// Exempt entries sort an aggregate descending or a grouping column ascending.
std::vector<NormalizationAnnotation> rule3_sensible_order_by(const QuestionSpec& qspec,
                                                             const SqlSpec& spec);

/// LIMIT without a top-k request: exempt at or above lambda_min, otherwise a
/// non-exempt flag for the judge.
std::optional<NormalizationAnnotation> rule4_safety_limit(const QuestionSpec& qspec,
                                                          const SqlSpec& spec,
                                                          const NormalizerConfig& cfg);

std::vector<NormalizationAnnotation> apply_all(const QuestionSpec& qspec, const SqlSpec& spec,
                                               const NormalizerConfig& cfg = {});

}  // namespace stef::normalize
