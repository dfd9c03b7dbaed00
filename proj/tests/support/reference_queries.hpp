#pragma once

// Reference queries for the four production idioms plus the combined form,
// and the reference rule profile.

#include <string>

#include "stef/json_io.hpp"
#include "stef/model.hpp"

namespace fixtures {

inline const std::string kRequiredGroupBy =
    "SELECT Year, Country, SUM(Spend) AS TotalSpend\n"
    "FROM spend_table\n"
    "WHERE Country ILIKE 'China'\n"
    "GROUP BY Year, Country   -- REQUIRED: non-aggregated SELECT columns\n";

inline const std::string kBenignGroupBy =
    "SELECT Country, SUM(Spend) AS TotalSpend\n"
    "FROM spend_table\n"
    "WHERE Country ILIKE 'China'\n"
    "GROUP BY Country   -- BENIGN: Country is constrained to a constant\n";

inline const std::string kSensibleOrderBy =
    "SELECT Year, Country, SUM(Spend) AS TotalSpend\n"
    "FROM spend_table\n"
    "WHERE Country ILIKE 'China'\n"
    "GROUP BY Year, Country\n"
    "ORDER BY SUM(Spend) DESC   -- SENSIBLE DEFAULT: descending aggregate metric\n";

inline const std::string kSafetyLimit =
    "SELECT Year, Country, SUM(Spend) AS TotalSpend\n"
    "FROM spend_table\n"
    "WHERE Country ILIKE 'China'\n"
    "GROUP BY Year, Country\n"
    "ORDER BY SUM(Spend) DESC\n"
    "LIMIT 20000   -- PRODUCTION SAFE: high-cardinality safety guardrail\n";

inline const std::string kAllRules =
    "SELECT Year, Country, SUM(Spend) AS TotalSpend\n"
    "FROM spend_table\n"
    "WHERE Country ILIKE 'China'\n"
    "GROUP BY Year, Country           -- Rule 1: Required GROUP BY (mixed SELECT)\n"
    "                                 -- Rule 2: Benign GROUP BY (Country constrained)\n"
    "ORDER BY SUM(Spend) DESC         -- Rule 3: Sensible default ORDER BY\n"
    "LIMIT 20000                      -- Rule 4: Production safety LIMIT\n";

// A question the combined query answers without asking for an order or a top-k.
inline const std::string kAllRulesQuestion = "Total spend per year and country for China";

inline const char* kRulesJson = R"({
  "column_mappings": {
    "region":   "RegionName",
    "spend":    "TotalSpendUSD",
    "customer": "CustomerAccountID"
  },
  "benign_filters": [
    "status = 'Active'",
    "is_deleted = 0"
  ],
  "ignore_filters": [
    "portfolio",
    "tenant_id"
  ]
})";

inline stef::AppRules reference_rules() {
  return stef::io::rules_from_json(nlohmann::json::parse(kRulesJson));
}

}  // namespace fixtures
