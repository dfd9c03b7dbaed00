#include "stef/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stef::score {

ConfidenceOutOfRange::ConfidenceOutOfRange(double gamma)
    : std::out_of_range("confidence " + std::to_string(gamma) + " is outside [0, 1]"),
      gamma_(gamma) {}

int filter_score(FilterStatus status) {
  switch (status) {
    case FilterStatus::kFullyApplied: return 5;
    case FilterStatus::kFullyAppliedWithExtras: return 4;
    case FilterStatus::kPartiallyApplied: return 3;
    case FilterStatus::kNotApplied: return 0;
  }
  return 0;
}

int verdict_score(Verdict verdict) {
  switch (verdict) {
    case Verdict::kCorrect: return 5;
    case Verdict::kLikelyCorrect: return 3;
    case Verdict::kPotentiallyIncorrect: return 2;
    case Verdict::kIncorrect: return 0;
  }
  return 0;
}

double confidence_multiplier(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfidenceOutOfRange(gamma);
  if (gamma >= 0.85) return 1.0;
  if (gamma >= 0.65) return 0.8;
  return 0.5;
}

int leniency(FilterStatus status, bool extras_all_benign) {
  return status == FilterStatus::kFullyAppliedWithExtras && extras_all_benign ? 1 : 0;
}

QualityTier tier_for(double phi) {
  if (phi >= 90.0) return QualityTier::kExcellent;
  if (phi >= 75.0) return QualityTier::kGood;
  if (phi >= 50.0) return QualityTier::kMarginal;
  return QualityTier::kPoor;
}

double round2(double x) { return std::round(x * 100.0) / 100.0; }

ScoreBreakdown composite(FilterStatus status, bool extras_all_benign, Verdict verdict,
                         double gamma) {
  ScoreBreakdown s;
  s.sigma_filters = filter_score(status);
  s.sigma_verdict = verdict_score(verdict);
  s.delta_lenient = leniency(status, extras_all_benign);
  s.base = s.sigma_filters + s.sigma_verdict + s.delta_lenient;
  s.gamma = gamma;
  s.multiplier = confidence_multiplier(gamma);
  // The leniency point restores a full base; it never lifts the score past 100.
  int capped = std::min(s.base, 10);
  s.phi = round2(capped * 10.0 * s.multiplier);
  s.tier = tier_for(s.phi);
  return s;
}

}  // namespace stef::score
