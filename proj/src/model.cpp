#include "stef/model.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <utility>

namespace stef {

namespace {

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

bool is_plain_identifier(std::string_view s) {
  if (s.empty() || !is_ident_start(static_cast<unsigned char>(s.front()))) return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return is_ident_char(static_cast<unsigned char>(c)); });
}

std::optional<double> parse_number(std::string_view s) {
  std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) return std::nullopt;
  return v;
}

std::string collapse_spaces(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : trim(s)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  return out;
}

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::pair<Enum, std::string_view>, N>& table,
                           std::string_view name) {
  for (const auto& [e, n] : table) {
    if (n == name) return e;
  }
  return std::nullopt;
}

template <typename Enum, std::size_t N>
std::string_view name_of(const std::array<std::pair<Enum, std::string_view>, N>& table, Enum e) {
  for (const auto& [k, n] : table) {
    if (k == e) return n;
  }
  return "?";
}

constexpr std::array<std::pair<FilterOp, std::string_view>, 13> kOpNames{{
    {FilterOp::kEq, "EQ"},
    {FilterOp::kNeq, "NEQ"},
    {FilterOp::kLt, "LT"},
    {FilterOp::kLte, "LTE"},
    {FilterOp::kGt, "GT"},
    {FilterOp::kGte, "GTE"},
    {FilterOp::kLike, "LIKE"},
    {FilterOp::kILike, "ILIKE"},
    {FilterOp::kIn, "IN"},
    {FilterOp::kBetween, "BETWEEN"},
    {FilterOp::kIsNull, "IS_NULL"},
    {FilterOp::kIsNotNull, "IS_NOT_NULL"},
    {FilterOp::kComplex, "COMPLEX"},
}};

constexpr std::array<std::pair<FilterOp, std::string_view>, 13> kOpSql{{
    {FilterOp::kEq, "="},
    {FilterOp::kNeq, "<>"},
    {FilterOp::kLt, "<"},
    {FilterOp::kLte, "<="},
    {FilterOp::kGt, ">"},
    {FilterOp::kGte, ">="},
    {FilterOp::kLike, "like"},
    {FilterOp::kILike, "ilike"},
    {FilterOp::kIn, "in"},
    {FilterOp::kBetween, "between"},
    {FilterOp::kIsNull, "is null"},
    {FilterOp::kIsNotNull, "is not null"},
    {FilterOp::kComplex, ""},
}};

constexpr std::array<std::pair<ValueKind, std::string_view>, 6> kValueKinds{{
    {ValueKind::kString, "string"},
    {ValueKind::kNumber, "number"},
    {ValueKind::kDate, "date"},
    {ValueKind::kBoolean, "boolean"},
    {ValueKind::kColumn, "column"},
    {ValueKind::kExpression, "expression"},
}};

constexpr std::array<std::pair<AggFunc, std::string_view>, 5> kAggNames{{
    {AggFunc::kSum, "SUM"},
    {AggFunc::kAvg, "AVG"},
    {AggFunc::kCount, "COUNT"},
    {AggFunc::kMin, "MIN"},
    {AggFunc::kMax, "MAX"},
}};

constexpr std::array<std::pair<FilterStatus, std::string_view>, 4> kStatusNames{{
    {FilterStatus::kFullyApplied, "fully_applied"},
    {FilterStatus::kFullyAppliedWithExtras, "fully_applied_with_extras"},
    {FilterStatus::kPartiallyApplied, "partially_applied"},
    {FilterStatus::kNotApplied, "not_applied"},
}};

constexpr std::array<std::pair<Verdict, std::string_view>, 4> kVerdictNames{{
    {Verdict::kCorrect, "Correct"},
    {Verdict::kLikelyCorrect, "Likely Correct"},
    {Verdict::kPotentiallyIncorrect, "Potentially Incorrect"},
    {Verdict::kIncorrect, "Incorrect"},
}};

constexpr std::array<std::pair<RuleId, std::string_view>, 4> kRuleNames{{
    {RuleId::kRequiredGroupBy, "REQUIRED_GROUP_BY"},
    {RuleId::kBenignGroupBy, "BENIGN_GROUP_BY"},
    {RuleId::kSensibleOrderBy, "SENSIBLE_ORDER_BY"},
    {RuleId::kSafetyLimit, "SAFETY_LIMIT"},
}};

constexpr std::array<std::pair<FilterRole, std::string_view>, 6> kRoleNames{{
    {FilterRole::kMatched, "matched"},
    {FilterRole::kMissing, "missing"},
    {FilterRole::kMismatched, "mismatched"},
    {FilterRole::kExtra, "extra"},
    {FilterRole::kDeferred, "deferred"},
    {FilterRole::kIgnored, "ignored"},
}};

constexpr std::array<std::pair<QualityTier, std::string_view>, 4> kTierNames{{
    {QualityTier::kExcellent, "Excellent"},
    {QualityTier::kGood, "Good"},
    {QualityTier::kMarginal, "Marginal"},
    {QualityTier::kPoor, "Poor"},
}};

template <typename T>
void sort_unique(std::vector<T>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r\n\f\v");
  return std::string(s.substr(first, last - first + 1));
}

std::string fold_identifier(std::string_view s) {
  std::string t = trim(s);
  if (t.size() >= 2) {
    char open = t.front(), close = t.back();
    if ((open == '"' && close == '"') || (open == '`' && close == '`') ||
        (open == '[' && close == ']')) {
      std::string inner = to_lower(t.substr(1, t.size() - 2));
      // Names that need quoting (spaces, punctuation) keep double quotes.
      if (is_plain_identifier(inner)) return inner;
      return "\"" + inner + "\"";
    }
  }
  if (is_plain_identifier(t)) return to_lower(t);
  return t;
}

std::string_view op_name(FilterOp op) { return name_of(kOpNames, op); }
std::string_view op_sql(FilterOp op) { return name_of(kOpSql, op); }
std::optional<FilterOp> op_from_name(std::string_view name) { return lookup(kOpNames, name); }

std::string_view value_kind_name(ValueKind k) { return name_of(kValueKinds, k); }
std::optional<ValueKind> value_kind_from_name(std::string_view name) {
  return lookup(kValueKinds, name);
}

std::string Value::to_sql() const {
  switch (kind) {
    case ValueKind::kString: {
      std::string out = "'";
      for (char c : text) {
        if (c == '\'') out.push_back('\'');
        out.push_back(c);
      }
      out.push_back('\'');
      return out;
    }
    case ValueKind::kDate:
      return "date '" + text + "'";
    default:
      return text;
  }
}

bool values_equivalent(const Value& a, const Value& b) {
  if (a.is_literal() != b.is_literal()) return false;
  if (!a.is_literal()) return a.kind == b.kind && a.text == b.text;
  auto na = parse_number(a.text);
  auto nb = parse_number(b.text);
  if (na && nb) return *na == *nb;
  return to_lower(collapse_spaces(a.text)) == to_lower(collapse_spaces(b.text));
}

FilterTriple FilterTriple::make(std::string_view lhs, FilterOp op, std::vector<Value> rhs,
                                bool having) {
  if (op == FilterOp::kComplex) return complex(std::string(lhs), having);
  FilterTriple f;
  f.lhs = fold_identifier(lhs);
  if (f.lhs.empty()) throw InvalidModel("filter has an empty left-hand side");
  f.op = op;
  switch (op) {
    case FilterOp::kIsNull:
    case FilterOp::kIsNotNull:
      if (!rhs.empty()) throw InvalidModel("null test carries no right-hand side");
      break;
    case FilterOp::kIn:
      if (rhs.empty()) throw InvalidModel("IN requires a non-empty value list");
      break;
    case FilterOp::kBetween:
      if (rhs.size() != 2) throw InvalidModel("BETWEEN requires exactly two values");
      break;
    default:
      if (rhs.size() != 1) throw InvalidModel("comparison requires exactly one value");
  }
  f.rhs = std::move(rhs);
  f.having = having;
  return f;
}

FilterTriple FilterTriple::complex(std::string text, bool having) {
  FilterTriple f;
  f.lhs = trim(text);
  if (f.lhs.empty()) throw InvalidModel("complex filter has no text");
  f.op = FilterOp::kComplex;
  f.having = having;
  return f;
}

bool FilterTriple::is_literal_rhs() const {
  return !rhs.empty() &&
         std::all_of(rhs.begin(), rhs.end(), [](const Value& v) { return v.is_literal(); });
}

std::string FilterTriple::to_sql() const {
  switch (op) {
    case FilterOp::kComplex:
      return "(" + lhs + ")";
    case FilterOp::kIsNull:
    case FilterOp::kIsNotNull:
      return lhs + " " + std::string(op_sql(op));
    case FilterOp::kIn: {
      std::string out = lhs + " in (";
      for (std::size_t i = 0; i < rhs.size(); ++i) {
        if (i) out += ", ";
        out += rhs[i].to_sql();
      }
      return out + ")";
    }
    case FilterOp::kBetween:
      return lhs + " between " + rhs[0].to_sql() + " and " + rhs[1].to_sql();
    default:
      return lhs + " " + std::string(op_sql(op)) + " " + rhs.front().to_sql();
  }
}

std::string_view agg_name(AggFunc f) { return name_of(kAggNames, f); }
std::optional<AggFunc> agg_from_name(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return lookup(kAggNames, upper);
}

AggregationSpec AggregationSpec::make(AggFunc func, std::string_view col, bool distinct) {
  AggregationSpec a;
  a.func = func;
  a.col = col == kStar ? std::string(kStar) : fold_identifier(col);
  a.distinct = distinct;
  if (a.col.empty()) throw InvalidModel("aggregation has no argument");
  if (a.col == kStar && func != AggFunc::kCount) {
    throw InvalidModel("* is only legal as a COUNT argument");
  }
  if (a.col == kStar && distinct) throw InvalidModel("COUNT(DISTINCT *) is not legal");
  return a;
}

std::string AggregationSpec::to_string() const {
  return to_lower(agg_name(func)) + "(" + (distinct ? "distinct " : "") + col + ")";
}

void QuestionSpec::canonicalize() {
  sort_unique(outputs);
  sort_unique(aggregations);
  sort_unique(filters);
  sort_unique(group_by);
  sort_unique(notes);
  sort_unique(unresolved);
}

void QuestionSpec::check() const {
  if (topk_request) {
    if (*topk_request <= 0) throw InvalidModel("top-k request must be positive");
    if (!explicit_order && aggregations.empty()) {
      throw InvalidModel("top-k request without ordering or aggregation");
    }
  }
}

std::string AppRules::map_column(std::string_view name) const {
  std::string folded = fold_identifier(name);
  auto it = column_mappings.find(folded);
  if (it == column_mappings.end()) return folded;
  return fold_identifier(it->second);
}

bool AppRules::is_ignored(std::string_view folded_column) const {
  for (const auto& ig : ignore_filters) {
    if (ig == folded_column || map_column(ig) == folded_column) return true;
  }
  return false;
}

std::string_view status_name(FilterStatus s) { return name_of(kStatusNames, s); }
std::optional<FilterStatus> status_from_name(std::string_view name) {
  return lookup(kStatusNames, to_lower(trim(name)));
}

std::string_view verdict_name(Verdict v) { return name_of(kVerdictNames, v); }
std::optional<Verdict> verdict_from_name(std::string_view name) {
  auto key = [](std::string_view s) {
    std::string out;
    for (char c : s) {
      if (c == ' ' || c == '_' || c == '-') continue;
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
  };
  std::string want = key(trim(name));
  for (const auto& [v, n] : kVerdictNames) {
    if (key(n) == want) return v;
  }
  return std::nullopt;
}

std::string_view rule_name(RuleId r) { return name_of(kRuleNames, r); }
std::optional<RuleId> rule_from_name(std::string_view name) { return lookup(kRuleNames, name); }

std::string_view role_name(FilterRole r) { return name_of(kRoleNames, r); }
std::optional<FilterRole> role_from_name(std::string_view name) {
  return lookup(kRoleNames, name);
}

std::string_view tier_name(QualityTier t) { return name_of(kTierNames, t); }

void check_invariants(const AlignmentRecord& r) {
  auto fail = [](const char* what) { throw InternalInvariantViolation(what); };
  switch (r.filter_status) {
    case FilterStatus::kFullyApplied:
      if (!r.missing.empty() || !r.mismatched.empty() || !r.extra.empty()) {
        fail("fully_applied record carries missing, mismatched or extra filters");
      }
      break;
    case FilterStatus::kFullyAppliedWithExtras:
      if (!r.missing.empty() || !r.mismatched.empty()) {
        fail("fully_applied_with_extras record carries missing or mismatched filters");
      }
      if (r.extra.empty()) fail("fully_applied_with_extras record has no extras");
      break;
    case FilterStatus::kPartiallyApplied:
      if (r.matched.empty() || (r.missing.empty() && r.mismatched.empty())) {
        fail("partially_applied needs a match and a missing or mismatched filter");
      }
      break;
    case FilterStatus::kNotApplied:
      if (!r.matched.empty()) fail("not_applied record has matched filters");
      if (r.required.empty()) fail("not_applied record has no required filters");
      break;
  }
  if (r.matched.size() + r.missing.size() + r.mismatched.size() != r.required.size()) {
    fail("matched, missing and mismatched do not partition the required filters");
  }
}

EvalInstance validate_instance(EvalInstance inst) {
  if (trim(inst.user_question).empty()) throw EmptyInput("user question is empty");
  if (trim(inst.sql).empty()) throw EmptyInput("sql is empty");
  if (!inst.enriched_question || trim(*inst.enriched_question).empty()) {
    inst.enriched_question = inst.user_question;
  }
  return inst;
}

}  // namespace stef
