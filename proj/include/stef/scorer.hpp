#pragma once

// Composite 0-100 score from filter status, verdict and judge confidence.

#include <stdexcept>

#include "stef/model.hpp"

namespace stef::score {

/// Judge confidence outside [0, 1].
class ConfidenceOutOfRange : public std::out_of_range {
 public:
  explicit ConfidenceOutOfRange(double gamma);
  double gamma() const { return gamma_; }

 private:
  double gamma_;
};

int filter_score(FilterStatus status);
int verdict_score(Verdict verdict);
/// 1.0 at or above 0.85, 0.8 at or above 0.65, else 0.5.
double confidence_multiplier(double gamma);
/// 1 for fully_applied_with_extras when every extra is benign.
int leniency(FilterStatus status, bool extras_all_benign);
QualityTier tier_for(double phi);
/// Half away from zero, two decimals.
double round2(double x);

ScoreBreakdown composite(FilterStatus status, bool extras_all_benign, Verdict verdict,
                         double gamma);

}  // namespace stef::score
