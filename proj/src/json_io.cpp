#include "stef/json_io.hpp"

#include <fstream>

namespace stef::io {

json to_json(const Value& v) {
  switch (v.kind) {
    case ValueKind::kNumber: {
      // Keep the literal text when it does not survive a double round trip.
      json parsed = json::parse(v.text, nullptr, false);
      if (!parsed.is_discarded() && parsed.is_number() && parsed.dump() == v.text) return parsed;
      return {{"number", v.text}};
    }
    case ValueKind::kBoolean:
      return v.text == "true";
    case ValueKind::kString:
      return v.text;
    default:
      return {{std::string(value_kind_name(v.kind)), v.text}};
  }
}

json to_json(const FilterTriple& f) {
  json j{{"lhs", f.lhs}, {"op", op_name(f.op)}};
  if (f.op != FilterOp::kComplex) {
    if (f.op == FilterOp::kIn || f.op == FilterOp::kBetween) {
      json values = json::array();
      for (const auto& v : f.rhs) values.push_back(to_json(v));
      j["rhs"] = std::move(values);
    } else if (!f.rhs.empty()) {
      j["rhs"] = to_json(f.rhs.front());
    }
  }
  if (f.having) j["having"] = true;
  j["sql"] = f.to_sql();
  return j;
}

json to_json(const AggregationSpec& a) { return a.to_string(); }

json to_json(const QuestionSpec& q) {
  json aggs = json::array(), filters = json::array();
  for (const auto& a : q.aggregations) aggs.push_back(to_json(a));
  for (const auto& f : q.filters) filters.push_back(to_json(f));
  json j{{"outputs", q.outputs},
         {"aggregations", std::move(aggs)},
         {"filters", std::move(filters)},
         {"group_by", q.group_by},
         {"explicit_order", q.explicit_order},
         {"topk_request", q.topk_request ? json(*q.topk_request) : json(nullptr)}};
  if (!q.notes.empty()) j["notes"] = q.notes;
  if (!q.unresolved.empty()) j["unresolved"] = q.unresolved;
  return j;
}

json to_json(const SqlSpec& s) {
  json projections = json::array(), aggs = json::array(), filters = json::array(),
       order = json::array(), from = json::array(), joins = json::array();
  for (const auto& p : s.projections) {
    json pj{{"expr", p.expr}};
    if (p.alias) pj["alias"] = *p.alias;
    if (p.aggregate) pj["aggregate"] = to_json(*p.aggregate);
    projections.push_back(std::move(pj));
  }
  for (const auto& t : s.from) {
    json tj{{"table", t.name}};
    if (t.alias) tj["alias"] = *t.alias;
    from.push_back(std::move(tj));
  }
  for (const auto& jn : s.joins) {
    json on = json::array();
    for (const auto& [l, r] : jn.on) on.push_back(l + " = " + r);
    json jj{{"table", jn.table.name}, {"on", std::move(on)}};
    if (jn.table.alias) jj["alias"] = *jn.table.alias;
    joins.push_back(std::move(jj));
  }
  for (const auto& a : s.aggregations) aggs.push_back(to_json(a));
  for (const auto& f : s.filters) filters.push_back(to_json(f));
  for (const auto& o : s.order_by) {
    order.push_back({{"expr", o.expr}, {"direction", o.direction == SortDirection::kDesc ? "DESC" : "ASC"}});
  }
  json j{{"distinct", s.distinct},
         {"projections", std::move(projections)},
         {"from", std::move(from)},
         {"aggregations", std::move(aggs)},
         {"filters", std::move(filters)},
         {"group_by", s.group_by},
         {"order_by", std::move(order)},
         {"limit", s.limit ? json(*s.limit) : json(nullptr)}};
  if (!s.joins.empty()) j["joins"] = std::move(joins);
  if (s.offset) j["offset"] = *s.offset;
  return j;
}

json to_json(const AppRules& r) {
  json mappings = json::object();
  for (const auto& [k, v] : r.column_mappings) mappings[k] = v;
  json j{{"column_mappings", std::move(mappings)},
         {"benign_filters", r.benign_sources},
         {"ignore_filters", r.ignore_filters}};
  if (r.lambda_min) j["lambda_min"] = *r.lambda_min;
  return j;
}

json to_json(const NormalizationAnnotation& a) {
  json j{{"rule", rule_name(a.rule)}, {"target", a.target}, {"exempt", a.exempt}};
  if (!a.subjects.empty()) j["subjects"] = a.subjects;
  return j;
}

json to_json(const ClassifiedFilter& f) {
  json j{{"filter", f.filter.to_sql()}, {"role", role_name(f.role)}};
  if (f.role == FilterRole::kExtra) j["benign"] = f.benign;
  return j;
}

json to_json(const AlignmentRecord& r) {
  auto list = [](const std::vector<FilterTriple>& fs) {
    json out = json::array();
    for (const auto& f : fs) out.push_back(f.to_sql());
    return out;
  };
  json firings = json::array(), qf = json::array(), sf = json::array();
  for (const auto& a : r.rule_firings) firings.push_back(to_json(a));
  for (const auto& f : r.question_filters) qf.push_back(to_json(f));
  for (const auto& f : r.sql_filters) sf.push_back(to_json(f));
  return {{"filter_status", status_name(r.filter_status)},
          {"matched", list(r.matched)},
          {"missing", list(r.missing)},
          {"mismatched", list(r.mismatched)},
          {"extra", list(r.extra)},
          {"extras_all_benign", r.extras_all_benign},
          {"projection_match", r.projection_match},
          {"aggregation_match", r.aggregation_match},
          {"grouping_match", r.grouping_match},
          {"rule_firings", std::move(firings)},
          {"question_filters", std::move(qf)},
          {"sql_filters", std::move(sf)}};
}

json to_json(const JudgeOutput& j) {
  json out{{"verdict", verdict_name(j.verdict)},
           {"confidence", j.confidence},
           {"rationale", j.rationale}};
  if (j.filters_applied_status) out["filters_applied_status"] = status_name(*j.filters_applied_status);
  if (!j.warnings.empty()) out["warnings"] = j.warnings;
  return out;
}

json to_json(const ScoreBreakdown& s) {
  return {{"sigma_filters", s.sigma_filters}, {"sigma_verdict", s.sigma_verdict},
          {"delta_lenient", s.delta_lenient}, {"base", s.base},
          {"gamma", s.gamma},                 {"multiplier", s.multiplier},
          {"phi", s.phi},                     {"tier", tier_name(s.tier)}};
}

AppRules rules_from_json(const json& j) {
  if (!j.is_object()) throw RuleParseError("<root>", "profile must be a JSON object");
  std::vector<std::pair<std::string, std::string>> mappings;
  std::vector<std::string> benign, ignore;
  std::optional<std::uint64_t> lambda_min;
  auto strings = [](const std::string& key, const json& v) {
    if (!v.is_array()) throw RuleParseError(key, "expected a list of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) throw RuleParseError(key, "expected a list of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "column_mappings") {
      if (!value.is_object()) throw RuleParseError(key, "expected an object of alias -> column");
      for (const auto& [alias, column] : value.items()) {
        if (!column.is_string()) throw RuleParseError(key, "mapping for '" + alias + "' is not a string");
        mappings.emplace_back(alias, column.get<std::string>());
      }
    } else if (key == "benign_filters") {
      benign = strings(key, value);
    } else if (key == "ignore_filters") {
      ignore = strings(key, value);
    } else if (key == "lambda_min") {
      if (!value.is_number_unsigned() || value.get<std::uint64_t>() < 1) {
        throw RuleParseError(key, "expected a positive integer");
      }
      lambda_min = value.get<std::uint64_t>();
    } else {
      throw RuleParseError(key, "unknown key");
    }
  }
  try {
    return AppRules::make(mappings, benign, ignore, lambda_min);
  } catch (const InvalidModel& e) {
    std::string what = e.what();
    std::string key = what.find("mapping") != std::string::npos ? "column_mappings"
                      : what.find("benign") != std::string::npos ? "benign_filters"
                                                                  : "ignore_filters";
    throw RuleParseError(key, what);
  }
}

AppRules load_rules(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RuleParseError("<file>", "cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw RuleParseError("<file>", path.string() + " is not valid JSON");
  return rules_from_json(j);
}

}  // namespace stef::io
