#include "stef/model.hpp"
#include "stef/sql.hpp"

namespace stef {

AppRules AppRules::make(const std::vector<std::pair<std::string, std::string>>& mappings,
                        const std::vector<std::string>& benign,
                        const std::vector<std::string>& ignore,
                        std::optional<std::uint64_t> lambda_min) {
  AppRules rules;
  for (const auto& [alias, column] : mappings) {
    std::string key = fold_identifier(alias);
    if (key.empty() || trim(column).empty()) {
      throw InvalidModel("column mapping entries must be non-empty");
    }
    if (!rules.column_mappings.emplace(key, trim(column)).second) {
      throw InvalidModel("duplicate column mapping key '" + key + "'");
    }
  }
  // Benign conditions are read with the mappings already in place so that
  // they compare against mapped SQL filters.
  for (const auto& condition : benign) {
    std::vector<FilterTriple> parsed;
    try {
      parsed = sql::parse_condition(condition, rules);
    } catch (const sql::SqlError& e) {
      throw InvalidModel("benign filter '" + condition + "': " + e.what());
    } catch (const sql::UnsupportedConstruct& e) {
      throw InvalidModel("benign filter '" + condition + "': " + e.what());
    }
    if (parsed.size() != 1 || parsed[0].op == FilterOp::kComplex) {
      throw InvalidModel("benign filter '" + condition + "' is not a single comparison");
    }
    rules.benign_filters.push_back(sql::normalize_filter(parsed[0]));
    rules.benign_sources.push_back(condition);
  }
  for (const auto& column : ignore) {
    std::string folded = fold_identifier(column);
    if (folded.empty()) throw InvalidModel("ignore_filters entries must be non-empty");
    rules.ignore_filters.push_back(std::move(folded));
  }
  if (lambda_min && *lambda_min < 1) throw InvalidModel("lambda_min must be at least 1");
  rules.lambda_min = lambda_min;
  return rules;
}

}  // namespace stef
