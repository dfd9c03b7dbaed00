#include "stef/normalizer.hpp"

#include <algorithm>

#include "stef/sql.hpp"

namespace stef::normalize {

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) {
    if (!out.empty()) out += ", ";
    out += s;
  }
  return out;
}

// The literal constants a grouping column may be pinned to. Column-to-column
// comparisons and expressions do not count.
bool constant_literal(const Value& v) {
  return v.kind == ValueKind::kString || v.kind == ValueKind::kNumber || v.kind == ValueKind::kDate;
}

bool pins_to_constant(const FilterTriple& f, const std::string& column) {
  if (f.having || f.lhs != column || f.rhs.size() != 1 || !constant_literal(f.rhs[0])) return false;
  switch (f.op) {
    case FilterOp::kEq:
      return true;
    case FilterOp::kLike:
    case FilterOp::kILike:
      return !sql::has_wildcard(f.rhs[0].text);
    default:
      return false;
  }
}

}  // namespace

void NormalizerConfig::check() const {
  if (lambda_min < 1) throw InvalidModel("lambda_min must be at least 1");
}

std::optional<NormalizationAnnotation> rule1_required_group_by(const SqlSpec& spec) {
  std::vector<std::string> plain;
  bool any_aggregate = false;
  for (const auto& p : spec.projections) {
    if (p.has_aggregate) {
      any_aggregate = true;
    } else if (!p.is_constant) {
      plain.push_back(p.expr);
    }
  }
  if (!any_aggregate || plain.empty()) return std::nullopt;
  for (const auto& e : plain) {
    if (!contains(spec.group_by, e)) return std::nullopt;
  }
  return NormalizationAnnotation{RuleId::kRequiredGroupBy, "GROUP BY " + join(spec.group_by), true,
                                 plain};
}

std::vector<NormalizationAnnotation> rule2_benign_group_by(const SqlSpec& spec) {
  std::vector<NormalizationAnnotation> out;
  for (const auto& g : spec.group_by) {
    bool pinned = std::any_of(spec.filters.begin(), spec.filters.end(),
                              [&](const FilterTriple& f) { return pins_to_constant(f, g); });
    if (pinned) {
      out.push_back({RuleId::kBenignGroupBy, "GROUP BY " + g + " (constrained to a constant)", true,
                     {g}});
    }
  }
  return out;
}

std::vector<NormalizationAnnotation> rule3_sensible_order_by(const QuestionSpec& qspec,
                                                             const SqlSpec& spec) {
  std::vector<NormalizationAnnotation> out;
  if (qspec.explicit_order) return out;
  for (const auto& item : spec.order_by) {
    bool desc = item.direction == SortDirection::kDesc;
    bool on_aggregate =
        item.aggregate && std::binary_search(spec.aggregations.begin(), spec.aggregations.end(),
                                             *item.aggregate);
    bool on_dimension = contains(spec.group_by, item.expr);
    bool exempt = (desc && on_aggregate) || (!desc && on_dimension);
    std::string target = "ORDER BY " + item.expr + (desc ? " DESC" : " ASC");
    if (!exempt) target += " (ordering not requested by the question)";
    out.push_back({RuleId::kSensibleOrderBy, std::move(target), exempt, {item.expr}});
  }
  return out;
}

std::optional<NormalizationAnnotation> rule4_safety_limit(const QuestionSpec& qspec,
                                                          const SqlSpec& spec,
                                                          const NormalizerConfig& cfg) {
  if (!spec.limit || qspec.topk_request) return std::nullopt;
  std::string target = "LIMIT " + std::to_string(*spec.limit);
  if (*spec.limit >= cfg.lambda_min) {
    return NormalizationAnnotation{RuleId::kSafetyLimit, target + " (safety default)", true, {}};
  }
  return NormalizationAnnotation{RuleId::kSafetyLimit,
                                 target + " (potential unintended restriction)", false, {}};
}

std::vector<NormalizationAnnotation> apply_all(const QuestionSpec& qspec, const SqlSpec& spec,
                                               const NormalizerConfig& cfg) {
  cfg.check();
  std::vector<NormalizationAnnotation> out;
  if (auto a = rule1_required_group_by(spec)) out.push_back(std::move(*a));
  for (auto& a : rule2_benign_group_by(spec)) out.push_back(std::move(a));
  for (auto& a : rule3_sensible_order_by(qspec, spec)) out.push_back(std::move(a));
  if (auto a = rule4_safety_limit(qspec, spec, cfg)) out.push_back(std::move(*a));
  return out;
}

}  // namespace stef::normalize
