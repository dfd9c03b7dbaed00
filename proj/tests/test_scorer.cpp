#include <gtest/gtest.h>

#include <cmath>

#include "stef/scorer.hpp"

using namespace stef;
using namespace stef::score;

TEST(Scorer, FilterTable) {
  EXPECT_EQ(filter_score(FilterStatus::kFullyApplied), 5);
  EXPECT_EQ(filter_score(FilterStatus::kFullyAppliedWithExtras), 4);
  EXPECT_EQ(filter_score(FilterStatus::kPartiallyApplied), 3);
  EXPECT_EQ(filter_score(FilterStatus::kNotApplied), 0);
}

TEST(Scorer, VerdictTable) {
  EXPECT_EQ(verdict_score(Verdict::kCorrect), 5);
  EXPECT_EQ(verdict_score(Verdict::kLikelyCorrect), 3);
  EXPECT_EQ(verdict_score(Verdict::kPotentiallyIncorrect), 2);
  EXPECT_EQ(verdict_score(Verdict::kIncorrect), 0);
}

TEST(Scorer, MultiplierBoundaries) {
  EXPECT_EQ(confidence_multiplier(0.85), 1.0);
  EXPECT_EQ(confidence_multiplier(0.65), 0.8);
  EXPECT_EQ(confidence_multiplier(0.64), 0.5);
  EXPECT_EQ(confidence_multiplier(0.0), 0.5);
  EXPECT_EQ(confidence_multiplier(1.0), 1.0);
  EXPECT_EQ(confidence_multiplier(0.8499999), 0.8);
  EXPECT_THROW(confidence_multiplier(1.0001), ConfidenceOutOfRange);
  EXPECT_THROW(confidence_multiplier(-0.1), ConfidenceOutOfRange);
  EXPECT_THROW(confidence_multiplier(std::nan("")), ConfidenceOutOfRange);
}

TEST(Scorer, Leniency) {
  EXPECT_EQ(leniency(FilterStatus::kFullyAppliedWithExtras, true), 1);
  EXPECT_EQ(leniency(FilterStatus::kFullyAppliedWithExtras, false), 0);
  EXPECT_EQ(leniency(FilterStatus::kFullyApplied, true), 0);
  EXPECT_EQ(leniency(FilterStatus::kPartiallyApplied, true), 0);
}

TEST(Scorer, MaximumScore) {
  auto s = composite(FilterStatus::kFullyApplied, false, Verdict::kCorrect, 0.90);
  EXPECT_EQ(s.base, 10);
  EXPECT_EQ(s.phi, 100.0);
  EXPECT_EQ(s.tier, QualityTier::kExcellent);
}

TEST(Scorer, MinimumNonZeroScore) {
  auto s = composite(FilterStatus::kNotApplied, false, Verdict::kPotentiallyIncorrect, 0.50);
  EXPECT_EQ(s.base, 2);
  EXPECT_EQ(s.multiplier, 0.5);
  EXPECT_EQ(s.phi, 10.0);
  EXPECT_EQ(s.tier, QualityTier::kPoor);
}

TEST(Scorer, LeniencyRecoversFullBase) {
  auto s = composite(FilterStatus::kFullyAppliedWithExtras, true, Verdict::kCorrect, 0.85);
  EXPECT_EQ(s.sigma_filters, 4);
  EXPECT_EQ(s.delta_lenient, 1);
  EXPECT_EQ(s.base, 10);
  EXPECT_EQ(s.phi, 100.0);
}

TEST(Scorer, PartialLikelyCorrect) {
  auto s = composite(FilterStatus::kPartiallyApplied, false, Verdict::kLikelyCorrect, 0.70);
  EXPECT_EQ(s.base, 6);
  EXPECT_EQ(s.multiplier, 0.8);
  EXPECT_EQ(s.phi, 48.0);
  EXPECT_EQ(s.tier, QualityTier::kPoor);
}

TEST(Scorer, TierBoundariesAreLeftClosed) {
  EXPECT_EQ(tier_for(90.0), QualityTier::kExcellent);
  EXPECT_EQ(tier_for(89.99), QualityTier::kGood);
  EXPECT_EQ(tier_for(75.0), QualityTier::kGood);
  EXPECT_EQ(tier_for(74.99), QualityTier::kMarginal);
  EXPECT_EQ(tier_for(50.0), QualityTier::kMarginal);
  EXPECT_EQ(tier_for(49.99), QualityTier::kPoor);
}

TEST(Scorer, RoundsHalfAwayFromZero) {
  EXPECT_EQ(round2(0.125), 0.13);
  EXPECT_EQ(round2(-0.125), -0.13);
  EXPECT_EQ(round2(48.000000000000007), 48.0);
}

TEST(Scorer, ZeroOnlyWhenBaseIsZero) {
  for (auto st : {FilterStatus::kFullyApplied, FilterStatus::kFullyAppliedWithExtras,
                  FilterStatus::kPartiallyApplied, FilterStatus::kNotApplied}) {
    for (auto v : {Verdict::kCorrect, Verdict::kLikelyCorrect, Verdict::kPotentiallyIncorrect,
                   Verdict::kIncorrect}) {
      for (bool benign : {false, true}) {
        auto s = composite(st, benign, v, 0.3);
        EXPECT_EQ(s.phi == 0.0, s.base == 0);
        EXPECT_GE(s.phi, 0.0);
        EXPECT_LE(s.phi, 100.0);
      }
    }
  }
}
