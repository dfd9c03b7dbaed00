#include "stef/aligner.hpp"

#include <algorithm>

#include "stef/sql.hpp"

namespace stef::align {

namespace {

FilterOp op_class(const FilterTriple& f) {
  if (f.op == FilterOp::kILike) return FilterOp::kLike;
  if (f.op == FilterOp::kIn && f.rhs.size() == 1) return FilterOp::kEq;
  return f.op;
}

bool same_multiset(const std::vector<Value>& a, const std::vector<Value>& b) {
  if (a.size() != b.size()) return false;
  std::vector<bool> used(b.size(), false);
  for (const auto& v : a) {
    bool found = false;
    for (std::size_t i = 0; i < b.size() && !found; ++i) {
      if (!used[i] && values_equivalent(v, b[i])) {
        used[i] = true;
        found = true;
      }
    }
    if (!found) return false;
  }
  return true;
}

bool aggregation_covers(const AggregationSpec& wanted, const AggregationSpec& have) {
  if (wanted.func != have.func || wanted.distinct != have.distinct) return false;
  if (wanted.col == have.col) return true;
  // "number of orders" does not say which column is counted.
  return wanted.func == AggFunc::kCount && !wanted.distinct && wanted.col == kStar;
}

template <typename T>
void sort_unique(std::vector<T>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

bool filters_match(const FilterTriple& a, const FilterTriple& b) {
  if (a.op == FilterOp::kComplex || b.op == FilterOp::kComplex) return false;
  if (a.lhs != b.lhs || op_class(a) != op_class(b)) return false;
  if (a.op == FilterOp::kIn || b.op == FilterOp::kIn) return same_multiset(a.rhs, b.rhs);
  if (a.rhs.size() != b.rhs.size()) return false;
  for (std::size_t i = 0; i < a.rhs.size(); ++i) {
    if (!values_equivalent(a.rhs[i], b.rhs[i])) return false;
  }
  return true;
}

FilterClassification classify_filters(const QuestionSpec& qspec, const SqlSpec& spec,
                                      const AppRules& rules) {
  FilterClassification out;

  std::vector<FilterTriple> question;
  for (const auto& f : qspec.filters) question.push_back(sql::normalize_filter(f));
  sort_unique(question);
  for (const auto& f : question) {
    if (f.op != FilterOp::kComplex && rules.is_ignored(f.lhs)) {
      out.question_filters.push_back({f, FilterRole::kIgnored, false});
    } else {
      out.required.push_back(f);
    }
  }

  std::vector<FilterTriple> candidates;
  for (const auto& raw : spec.filters) {
    FilterTriple f = sql::normalize_filter(raw);
    if (f.op == FilterOp::kComplex) {
      out.sql_filters.push_back({f, FilterRole::kDeferred, false});
    } else if (rules.is_ignored(f.lhs)) {
      out.sql_filters.push_back({f, FilterRole::kIgnored, false});
    } else {
      candidates.push_back(std::move(f));
    }
  }

  std::vector<bool> used(candidates.size(), false);
  std::vector<std::string> mismatched_columns;
  for (const auto& r : out.required) {
    auto hit = std::find_if(candidates.begin(), candidates.end(), [&](const FilterTriple& c) {
      return !used[&c - candidates.data()] && filters_match(r, c);
    });
    if (hit != candidates.end()) {
      used[hit - candidates.begin()] = true;
      out.matched.push_back(r);
      out.question_filters.push_back({r, FilterRole::kMatched, false});
      out.sql_filters.push_back({*hit, FilterRole::kMatched, false});
      continue;
    }
    bool same_column = std::any_of(candidates.begin(), candidates.end(),
                                   [&](const FilterTriple& c) { return c.lhs == r.lhs; });
    if (same_column) {
      out.mismatched.push_back(r);
      mismatched_columns.push_back(r.lhs);
      out.question_filters.push_back({r, FilterRole::kMismatched, false});
    } else {
      out.missing.push_back(r);
      out.question_filters.push_back({r, FilterRole::kMissing, false});
    }
  }

  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (used[i]) continue;
    const auto& c = candidates[i];
    if (std::find(mismatched_columns.begin(), mismatched_columns.end(), c.lhs) !=
        mismatched_columns.end()) {
      out.sql_filters.push_back({c, FilterRole::kMismatched, false});
      continue;
    }
    bool benign = std::any_of(rules.benign_filters.begin(), rules.benign_filters.end(),
                              [&](const FilterTriple& b) { return filters_match(b, c); });
    out.extra.push_back(c);
    out.sql_filters.push_back({c, FilterRole::kExtra, benign});
    if (!benign) out.extras_all_benign = false;
  }

  if (out.matched.size() == out.required.size()) {
    out.status = out.extra.empty() ? FilterStatus::kFullyApplied
                                   : FilterStatus::kFullyAppliedWithExtras;
  } else if (!out.matched.empty()) {
    out.status = FilterStatus::kPartiallyApplied;
  } else {
    out.status = FilterStatus::kNotApplied;
  }
  return out;
}

DimensionMatch align_dimensions(const QuestionSpec& qspec, const SqlSpec& spec,
                                const std::vector<NormalizationAnnotation>& annotations) {
  DimensionMatch out;

  bool has_star = std::any_of(spec.projections.begin(), spec.projections.end(),
                              [](const Projection& p) { return p.expr == kStar; });
  for (const auto& output : qspec.outputs) {
    std::string key = sql::name_key(output);
    const AggregationSpec* wanted = nullptr;
    for (const auto& a : qspec.aggregations) {
      if (a.to_string() == output) wanted = &a;
    }
    bool found = std::any_of(spec.projections.begin(), spec.projections.end(), [&](const Projection& p) {
      if (wanted && p.aggregate && aggregation_covers(*wanted, *p.aggregate)) return true;
      return std::any_of(p.output_names.begin(), p.output_names.end(),
                         [&](const std::string& n) { return sql::name_key(n) == key; });
    });
    if (!found && !(has_star && !wanted)) {
      out.projection = false;
      break;
    }
  }

  for (const auto& a : qspec.aggregations) {
    bool covered = std::any_of(spec.aggregations.begin(), spec.aggregations.end(),
                               [&](const AggregationSpec& s) { return aggregation_covers(a, s); });
    if (!covered) {
      out.aggregation = false;
      break;
    }
  }

  auto in_spec = [&](const std::string& g) {
    return std::find(spec.group_by.begin(), spec.group_by.end(), g) != spec.group_by.end();
  };
  auto exempt = [&](const std::string& g) {
    return std::any_of(annotations.begin(), annotations.end(), [&](const NormalizationAnnotation& a) {
      return a.exempt &&
             (a.rule == RuleId::kRequiredGroupBy || a.rule == RuleId::kBenignGroupBy) &&
             std::find(a.subjects.begin(), a.subjects.end(), g) != a.subjects.end();
    });
  };
  out.grouping = std::all_of(qspec.group_by.begin(), qspec.group_by.end(), in_spec);
  for (const auto& g : spec.group_by) {
    bool requested = std::find(qspec.group_by.begin(), qspec.group_by.end(), g) != qspec.group_by.end();
    if (!requested && !exempt(g)) out.grouping = false;
  }
  return out;
}

AlignmentRecord build_alignment_record(const QuestionSpec& qspec, const SqlSpec& spec,
                                       const AppRules& rules,
                                       const std::vector<NormalizationAnnotation>& annotations) {
  FilterClassification fc = classify_filters(qspec, spec, rules);
  DimensionMatch dims = align_dimensions(qspec, spec, annotations);

  AlignmentRecord r;
  r.filter_status = fc.status;
  r.required = std::move(fc.required);
  r.matched = std::move(fc.matched);
  r.missing = std::move(fc.missing);
  r.mismatched = std::move(fc.mismatched);
  r.extra = std::move(fc.extra);
  r.extras_all_benign = fc.extras_all_benign;
  r.projection_match = dims.projection;
  r.aggregation_match = dims.aggregation;
  r.grouping_match = dims.grouping;
  r.rule_firings = annotations;
  r.question_filters = std::move(fc.question_filters);
  r.sql_filters = std::move(fc.sql_filters);
  check_invariants(r);
  return r;
}

}  // namespace stef::align
