#pragma once

// Domain types shared by every evaluation stage.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stef {

/// Question or SQL text was blank after trimming.
class EmptyInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A value violated a construction-time invariant of the model.
class InvalidModel : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Signals a pipeline bug (an alignment record that breaks its own rules).
class InternalInvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------
// Text helpers
// ---------------------------------------------------------------------------

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

/// Case-folds an identifier and strips one layer of "", `` or [] quoting.
/// A quoted name that is not a plain identifier keeps double quotes; other
/// text (expressions) is only trimmed.
std::string fold_identifier(std::string_view s);

// ---------------------------------------------------------------------------
// Filters
// ---------------------------------------------------------------------------

enum class FilterOp {
  kEq,
  kNeq,
  kLt,
  kLte,
  kGt,
  kGte,
  kLike,
  kILike,
  kIn,
  kBetween,
  kIsNull,
  kIsNotNull,
  kComplex,
};

/// "EQ", "ILIKE", ...
std::string_view op_name(FilterOp op);
/// SQL spelling: "=", "ilike", "is not null", ...
std::string_view op_sql(FilterOp op);
std::optional<FilterOp> op_from_name(std::string_view name);

enum class ValueKind { kString, kNumber, kDate, kBoolean, kColumn, kExpression };

std::string_view value_kind_name(ValueKind k);
std::optional<ValueKind> value_kind_from_name(std::string_view name);

struct Value {
  ValueKind kind = ValueKind::kString;
  std::string text;

  static Value string(std::string s) { return {ValueKind::kString, std::move(s)}; }
  static Value number(std::string s) { return {ValueKind::kNumber, std::move(s)}; }
  static Value date(std::string s) { return {ValueKind::kDate, std::move(s)}; }
  static Value boolean(bool b) { return {ValueKind::kBoolean, b ? "true" : "false"}; }
  static Value column(std::string s) { return {ValueKind::kColumn, std::move(s)}; }
  static Value expression(std::string s) { return {ValueKind::kExpression, std::move(s)}; }

  bool is_literal() const {
    return kind != ValueKind::kColumn && kind != ValueKind::kExpression;
  }
  std::string to_sql() const;

  auto operator<=>(const Value&) const = default;
};

/// Literal equality used for alignment: numeric when both sides parse as
/// numbers ("2023" == 2023), otherwise case- and whitespace-insensitive text.
/// Column and expression values only match their own kind, textually.
bool values_equivalent(const Value& a, const Value& b);

struct FilterTriple {
  std::string lhs;
  FilterOp op = FilterOp::kEq;
  std::vector<Value> rhs;
  bool having = false;

  /// Validates arity per operator and folds a plain-identifier lhs.
  static FilterTriple make(std::string_view lhs, FilterOp op, std::vector<Value> rhs,
                           bool having = false);
  /// An undecomposable condition; lhs keeps the condition text.
  static FilterTriple complex(std::string text, bool having = false);

  bool is_literal_rhs() const;
  std::string to_sql() const;

  auto operator<=>(const FilterTriple&) const = default;
};

// ---------------------------------------------------------------------------
// Aggregations and the two specifications
// ---------------------------------------------------------------------------

enum class AggFunc { kSum, kAvg, kCount, kMin, kMax };

std::string_view agg_name(AggFunc f);  // "SUM", ...
std::optional<AggFunc> agg_from_name(std::string_view name);

inline constexpr std::string_view kStar = "*";

struct AggregationSpec {
  AggFunc func = AggFunc::kCount;
  std::string col;  // column reference or "*"
  bool distinct = false;

  static AggregationSpec make(AggFunc func, std::string_view col, bool distinct = false);

  /// Canonical expression form, e.g. "sum(spend)", "count(distinct cust)".
  std::string to_string() const;

  auto operator<=>(const AggregationSpec&) const = default;
};

struct QuestionSpec {
  std::vector<std::string> outputs;
  std::vector<AggregationSpec> aggregations;
  std::vector<FilterTriple> filters;
  std::vector<std::string> group_by;
  bool explicit_order = false;
  std::optional<int> topk_request;
  // Diagnostics: merge conflicts and named values no cue could place.
  std::vector<std::string> notes;
  std::vector<std::string> unresolved;

  /// Sorts and de-duplicates every set-valued field.
  void canonicalize();
  /// Throws InvalidModel if top-k is requested without ordering or aggregation.
  void check() const;

  bool operator==(const QuestionSpec&) const = default;
};

enum class SortDirection { kAsc, kDesc };

struct Projection {
  std::string expr;  // canonical expression text; "*" for star
  std::optional<std::string> alias;
  std::optional<AggregationSpec> aggregate;  // set when expr is a single aggregate call
  bool has_aggregate = false;
  bool is_constant = false;
  std::vector<std::string> output_names;  // filled by resolve_aliases

  bool operator==(const Projection&) const = default;
};

struct OrderItem {
  std::string expr;
  std::optional<AggregationSpec> aggregate;
  SortDirection direction = SortDirection::kAsc;

  bool operator==(const OrderItem&) const = default;
};

struct TableRef {
  std::string name;
  std::optional<std::string> alias;

  bool operator==(const TableRef&) const = default;
};

struct JoinClause {
  TableRef table;
  std::vector<std::pair<std::string, std::string>> on;  // qualified column equalities

  bool operator==(const JoinClause&) const = default;
};

struct SqlSpec {
  bool distinct = false;
  std::vector<Projection> projections;
  std::vector<TableRef> from;
  std::vector<JoinClause> joins;
  std::vector<AggregationSpec> aggregations;  // sorted, unique
  std::vector<FilterTriple> filters;          // WHERE conjuncts, then HAVING conjuncts
  std::vector<std::string> group_by;
  std::vector<OrderItem> order_by;
  std::optional<std::uint64_t> limit;
  std::optional<std::uint64_t> offset;

  bool operator==(const SqlSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Application rules
// ---------------------------------------------------------------------------

struct AppRules {
  // Folded natural-language alias -> canonical column name (original spelling).
  std::map<std::string, std::string> column_mappings;
  std::vector<FilterTriple> benign_filters;
  std::vector<std::string> benign_sources;  // the condition strings as configured
  std::vector<std::string> ignore_filters;  // folded
  std::optional<std::uint64_t> lambda_min;

  /// Builds a profile, parsing each benign condition with the SQL reader.
  /// Throws InvalidModel on duplicate mapping keys or a benign condition that
  /// is not a single comparison.
  static AppRules make(const std::vector<std::pair<std::string, std::string>>& mappings,
                       const std::vector<std::string>& benign,
                       const std::vector<std::string>& ignore,
                       std::optional<std::uint64_t> lambda_min = std::nullopt);

  /// Folds `name` and substitutes the mapped canonical column when one exists.
  std::string map_column(std::string_view name) const;
  bool is_ignored(std::string_view folded_column) const;

  bool empty() const {
    return column_mappings.empty() && benign_filters.empty() && ignore_filters.empty();
  }
};

// ---------------------------------------------------------------------------
// Stage outputs
// ---------------------------------------------------------------------------

enum class FilterStatus {
  kFullyApplied,
  kFullyAppliedWithExtras,
  kPartiallyApplied,
  kNotApplied,
};

std::string_view status_name(FilterStatus s);  // "fully_applied", ...
std::optional<FilterStatus> status_from_name(std::string_view name);

enum class Verdict { kCorrect, kLikelyCorrect, kPotentiallyIncorrect, kIncorrect };

std::string_view verdict_name(Verdict v);  // "Correct", "Likely Correct", ...
/// Case-insensitive; spaces, underscores and hyphens are interchangeable.
std::optional<Verdict> verdict_from_name(std::string_view name);

enum class RuleId { kRequiredGroupBy, kBenignGroupBy, kSensibleOrderBy, kSafetyLimit };

std::string_view rule_name(RuleId r);
std::optional<RuleId> rule_from_name(std::string_view name);

struct NormalizationAnnotation {
  RuleId rule = RuleId::kRequiredGroupBy;
  std::string target;
  bool exempt = false;
  std::vector<std::string> subjects;  // exempted columns / expressions

  bool operator==(const NormalizationAnnotation&) const = default;
};

enum class FilterRole { kMatched, kMissing, kMismatched, kExtra, kDeferred, kIgnored };

std::string_view role_name(FilterRole r);
std::optional<FilterRole> role_from_name(std::string_view name);

struct ClassifiedFilter {
  FilterTriple filter;
  FilterRole role = FilterRole::kMatched;
  bool benign = false;  // meaningful for extras

  bool operator==(const ClassifiedFilter&) const = default;
};

struct AlignmentRecord {
  FilterStatus filter_status = FilterStatus::kFullyApplied;
  std::vector<FilterTriple> required;  // question filters after ignore removal
  std::vector<FilterTriple> matched;
  std::vector<FilterTriple> missing;
  std::vector<FilterTriple> mismatched;
  std::vector<FilterTriple> extra;
  bool extras_all_benign = true;
  bool projection_match = true;
  bool aggregation_match = true;
  bool grouping_match = true;
  std::vector<NormalizationAnnotation> rule_firings;
  // Every filter of both specifications, each listed once with its role.
  std::vector<ClassifiedFilter> question_filters;
  std::vector<ClassifiedFilter> sql_filters;

  bool operator==(const AlignmentRecord&) const = default;
};

/// Throws InternalInvariantViolation when the status disagrees with the sets.
void check_invariants(const AlignmentRecord& record);

struct JudgeOutput {
  Verdict verdict = Verdict::kIncorrect;
  double confidence = 0.0;
  std::string rationale;
  std::optional<FilterStatus> filters_applied_status;
  std::vector<std::string> warnings;

  bool operator==(const JudgeOutput&) const = default;
};

enum class QualityTier { kExcellent, kGood, kMarginal, kPoor };

std::string_view tier_name(QualityTier t);

struct ScoreBreakdown {
  int sigma_filters = 0;
  int sigma_verdict = 0;
  int delta_lenient = 0;
  int base = 0;
  double gamma = 0.0;
  double multiplier = 0.0;
  double phi = 0.0;
  QualityTier tier = QualityTier::kPoor;

  bool operator==(const ScoreBreakdown&) const = default;
};

// ---------------------------------------------------------------------------
// Evaluation request
// ---------------------------------------------------------------------------

struct EvalInstance {
  std::string id;
  std::string user_question;
  std::optional<std::string> enriched_question;
  std::string sql;
  AppRules rules;
};

/// Rejects blank question or SQL; defaults the enriched question to the user
/// question.
EvalInstance validate_instance(EvalInstance inst);

}  // namespace stef
