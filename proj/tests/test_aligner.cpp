#include <gtest/gtest.h>

#include "reference_queries.hpp"
#include "stef/aligner.hpp"
#include "stef/normalizer.hpp"
#include "stef/sql.hpp"

using namespace stef;
using namespace stef::align;

namespace {

FilterTriple eq(const char* lhs, Value v) { return FilterTriple::make(lhs, FilterOp::kEq, {std::move(v)}); }

QuestionSpec with_filters(std::vector<FilterTriple> f) {
  QuestionSpec q;
  q.filters = std::move(f);
  return q;
}

SqlSpec sql_filters(std::vector<FilterTriple> f) {
  SqlSpec s;
  s.filters = std::move(f);
  return s;
}

}  // namespace

TEST(Filters, FullyApplied) {
  auto c = classify_filters(with_filters({eq("country", Value::string("china"))}),
                            sql_filters({eq("country", Value::string("China"))}), {});
  EXPECT_EQ(c.status, FilterStatus::kFullyApplied);
  EXPECT_EQ(c.matched.size(), 1u);
}

TEST(Filters, BenignExtra) {
  auto c = classify_filters(with_filters({eq("country", Value::string("china"))}),
                            sql_filters({eq("country", Value::string("china")),
                                         eq("status", Value::string("Active"))}),
                            fixtures::reference_rules());
  EXPECT_EQ(c.status, FilterStatus::kFullyAppliedWithExtras);
  EXPECT_TRUE(c.extras_all_benign);
  ASSERT_EQ(c.extra.size(), 1u);
}

TEST(Filters, Partial) {
  auto c = classify_filters(
      with_filters({eq("country", Value::string("china")), eq("year", Value::number("2023"))}),
      sql_filters({eq("country", Value::string("china"))}), {});
  EXPECT_EQ(c.status, FilterStatus::kPartiallyApplied);
  ASSERT_EQ(c.missing.size(), 1u);
  EXPECT_EQ(c.missing[0].lhs, "year");
}

TEST(Filters, NotApplied) {
  auto c = classify_filters(with_filters({eq("year", Value::number("2023"))}), {}, {});
  EXPECT_EQ(c.status, FilterStatus::kNotApplied);
  EXPECT_TRUE(c.matched.empty());
}

TEST(Filters, Mismatched) {
  auto c = classify_filters(with_filters({eq("year", Value::number("2023"))}),
                            sql_filters({eq("year", Value::number("2022"))}), {});
  EXPECT_EQ(c.status, FilterStatus::kNotApplied);
  EXPECT_EQ(c.mismatched.size(), 1u);
  EXPECT_TRUE(c.extra.empty());
}

TEST(Filters, NoRequired) {
  auto rules = fixtures::reference_rules();
  EXPECT_EQ(classify_filters({}, {}, rules).status, FilterStatus::kFullyApplied);
  auto benign = classify_filters({}, sql_filters({eq("is_deleted", Value::number("0"))}), rules);
  EXPECT_EQ(benign.status, FilterStatus::kFullyAppliedWithExtras);
  EXPECT_TRUE(benign.extras_all_benign);
  auto other = classify_filters({}, sql_filters({eq("region", Value::string("emea"))}), {});
  EXPECT_EQ(other.status, FilterStatus::kFullyAppliedWithExtras);
  EXPECT_FALSE(other.extras_all_benign);
}

TEST(Filters, IgnoredDimensionsDroppedBothSides) {
  auto rules = fixtures::reference_rules();
  auto c = classify_filters(with_filters({eq("tenant_id", Value::number("7"))}),
                            sql_filters({eq("portfolio", Value::string("x"))}), rules);
  EXPECT_EQ(c.status, FilterStatus::kFullyApplied);
  EXPECT_TRUE(c.required.empty());
  EXPECT_TRUE(c.extra.empty());
}

TEST(Filters, ComplexDeferred) {
  auto c = classify_filters({}, sql_filters({FilterTriple::complex("a = 1 or b = 2")}), {});
  EXPECT_EQ(c.status, FilterStatus::kFullyApplied);
  ASSERT_EQ(c.sql_filters.size(), 1u);
  EXPECT_EQ(c.sql_filters[0].role, FilterRole::kDeferred);
}

TEST(Match, OperatorClasses) {
  auto one_in = sql::normalize_filter(FilterTriple::make("r", FilterOp::kIn, {Value::string("a")}));
  EXPECT_TRUE(filters_match(one_in, sql::normalize_filter(eq("r", Value::string("A")))));
  auto in1 = FilterTriple::make("r", FilterOp::kIn, {Value::string("a"), Value::string("b")});
  auto in2 = FilterTriple::make("r", FilterOp::kIn, {Value::string("b"), Value::string("a")});
  EXPECT_TRUE(filters_match(in1, in2));
  auto like = FilterTriple::make("n", FilterOp::kLike, {Value::string("jo%")});
  auto ilike = FilterTriple::make("n", FilterOp::kILike, {Value::string("jo%")});
  EXPECT_TRUE(filters_match(like, ilike));
  EXPECT_FALSE(filters_match(eq("a", Value::number("1")), eq("b", Value::number("1"))));
}

TEST(Dimensions, ReferenceQuery) {
  QuestionSpec q;
  q.aggregations = {AggregationSpec::make(AggFunc::kSum, "spend")};
  q.group_by = {"country"};
  q.outputs = {"sum(spend)", "country"};
  auto spec = sql::parse_sql_spec(fixtures::kRequiredGroupBy);
  auto d = align_dimensions(q, spec, normalize::apply_all(q, spec));
  EXPECT_TRUE(d.projection);
  EXPECT_TRUE(d.aggregation);
  EXPECT_TRUE(d.grouping);
}

TEST(Dimensions, EmptyQuestionVacuous) {
  auto spec = sql::parse_sql_spec(fixtures::kRequiredGroupBy);
  auto d = align_dimensions({}, spec, normalize::apply_all({}, spec));
  EXPECT_TRUE(d.projection && d.aggregation && d.grouping);
}

TEST(Dimensions, GroupingMismatch) {
  QuestionSpec q;
  q.group_by = {"quarter"};
  auto spec = sql::parse_sql_spec("SELECT year, SUM(x) FROM t GROUP BY year");
  EXPECT_FALSE(align_dimensions(q, spec, normalize::apply_all(q, spec)).grouping);
}

TEST(Dimensions, UnexemptExtraGroupingFails) {
  QuestionSpec q;
  q.group_by = {"year"};
  q.aggregations = {AggregationSpec::make(AggFunc::kSum, "x")};
  // region is grouped but neither projected nor pinned by a filter.
  auto spec = sql::parse_sql_spec("SELECT year, SUM(x) FROM t GROUP BY year, region");
  EXPECT_FALSE(align_dimensions(q, spec, normalize::apply_all(q, spec)).grouping);
}

TEST(Record, CombinedQuery) {
  auto rules = fixtures::reference_rules();
  QuestionSpec q;
  q.aggregations = {AggregationSpec::make(AggFunc::kSum, "totalspendusd")};
  q.group_by = {"year", "country"};
  q.filters = {eq("country", Value::string("china"))};
  auto spec = sql::parse_sql_spec(
      "SELECT Year, Country, SUM(Spend) AS TotalSpend FROM spend_table WHERE Country ILIKE 'China' "
      "GROUP BY Year, Country ORDER BY SUM(Spend) DESC LIMIT 20000",
      rules);
  auto ann = normalize::apply_all(q, spec);
  auto r = build_alignment_record(q, spec, rules, ann);
  EXPECT_EQ(r.filter_status, FilterStatus::kFullyApplied);
  EXPECT_TRUE(r.projection_match && r.aggregation_match && r.grouping_match);
  EXPECT_EQ(r.rule_firings.size(), 4u);
}

TEST(Record, ListsEachFilterOnce) {
  auto r = build_alignment_record(
      with_filters({eq("year", Value::number("2023")), eq("country", Value::string("china"))}),
      sql_filters({eq("country", Value::string("china")), eq("status", Value::string("active"))}),
      fixtures::reference_rules(), {});
  EXPECT_EQ(r.question_filters.size(), 2u);
  EXPECT_EQ(r.sql_filters.size(), 2u);
  EXPECT_EQ(r.filter_status, FilterStatus::kPartiallyApplied);
}
