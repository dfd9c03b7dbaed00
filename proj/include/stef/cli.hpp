#pragma once

// `stef eval`: line-delimited instances in, scored reports and a summary out.

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stef/pipeline.hpp"

namespace stef::cli {

/// A fatal configuration problem (bad flag combination, missing credential).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input line that is not a usable instance record.
class InputFormatError : public std::runtime_error {
 public:
  InputFormatError(std::size_t line, const std::string& reason)
      : std::runtime_error("line " + std::to_string(line) + ": " + reason), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

nlohmann::json report_to_json(const pipeline::EvaluationReport& r, bool with_timings = true);
nlohmann::json outcome_to_json(const pipeline::Outcome& o, std::size_t line,
                               bool with_timings = true);
nlohmann::json summary_to_json(const pipeline::BatchSummary& s);

/// Exit status: 0 when every instance scored, 2 when any instance failed,
/// 1 on a fatal configuration error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stef::cli
