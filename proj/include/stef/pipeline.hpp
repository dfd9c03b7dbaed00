#pragma once

// validate -> extract -> parse -> normalize -> align -> judge -> score.

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stef/judge.hpp"
#include "stef/model.hpp"
#include "stef/normalizer.hpp"
#include "stef/question.hpp"

namespace stef::pipeline {

/// The judge failed and no stub fallback is allowed.
class JudgeUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode { kFull, kJudgeOnly };

std::string_view mode_name(Mode m);  // "FULL", "JUDGE_ONLY"

struct StageTiming {
  std::string stage;
  double ms = 0.0;
};

struct EvaluationReport {
  std::string id;
  Mode mode = Mode::kFull;
  QuestionSpec question_spec;
  std::optional<SqlSpec> sql_spec;            // absent in judge-only mode
  std::optional<AlignmentRecord> alignment;   // absent in judge-only mode
  std::optional<std::string> judge_only_reason;
  JudgeOutput judge;
  std::string judge_name;
  ScoreBreakdown score;
  std::string template_id;
  // Set when the judge and the deterministic alignment point different ways;
  // neither signal is overridden.
  std::optional<std::string> disagreement;
  std::vector<std::string> warnings;
  std::vector<StageTiming> timings;
};

struct PipelineConfig {
  normalize::NormalizerConfig normalizer;
  // A command-line threshold beats the profile's, which beats the default.
  std::optional<std::uint64_t> lambda_min_override;
  judge::PromptTemplate prompt = judge::PromptTemplate::builtin();
  question::CueTable cues = question::CueTable::builtin();
  bool stub_fallback = false;
};

EvaluationReport evaluate(const EvalInstance& inst, const PipelineConfig& cfg, judge::Judge& judge);

struct Outcome {
  std::string id;
  std::optional<EvaluationReport> report;
  std::string error_kind;  // empty when a report exists
  std::string error;
};

/// Runs instances on up to `parallelism` threads. Outcomes come back in input
/// order; an exception in one instance becomes that instance's error.
std::vector<Outcome> evaluate_batch(const std::vector<EvalInstance>& instances,
                                    const PipelineConfig& cfg, judge::Judge& judge,
                                    unsigned parallelism);

struct BatchSummary {
  std::size_t total = 0;
  std::size_t scored = 0;
  std::size_t errors = 0;
  double mean_phi = 0.0;
  double p90_phi = 0.0;
  double coverage = 0.0;  // scored / total
  std::map<std::string, std::size_t> tiers;
  std::map<std::string, std::size_t> statuses;
  std::map<std::string, std::size_t> verdicts;
  std::map<std::string, std::size_t> modes;
  std::map<std::string, std::size_t> error_kinds;
};

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value.
double percentile_nearest_rank(std::vector<double> values, double p);

BatchSummary summarize(const std::vector<Outcome>& outcomes);

}  // namespace stef::pipeline
