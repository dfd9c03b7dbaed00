#pragma once

// JSON forms of the model types, shared by the prompt builder and the CLI.

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "stef/model.hpp"

namespace stef::io {

using nlohmann::json;

json to_json(const Value& v);
json to_json(const FilterTriple& f);
json to_json(const AggregationSpec& a);
json to_json(const QuestionSpec& q);
json to_json(const SqlSpec& s);
json to_json(const AppRules& r);
json to_json(const NormalizationAnnotation& a);
json to_json(const ClassifiedFilter& f);
json to_json(const AlignmentRecord& r);
json to_json(const JudgeOutput& j);
json to_json(const ScoreBreakdown& s);

/// A rule profile key is unknown or its value has the wrong shape.
class RuleParseError : public std::runtime_error {
 public:
  RuleParseError(std::string key, const std::string& reason)
      : std::runtime_error("rule profile key '" + key + "': " + reason), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Reads a profile object: column_mappings, benign_filters, ignore_filters and
/// an optional lambda_min. Any other key is rejected.
AppRules rules_from_json(const json& j);
AppRules load_rules(const std::filesystem::path& path);

}  // namespace stef::io
