#include "stef/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "stef/aligner.hpp"
#include "stef/scorer.hpp"
#include "stef/sql.hpp"

namespace stef::pipeline {

namespace {

class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>& out) : out_(out) {}
  template <typename F>
  decltype(auto) run(const char* stage, F&& f) {
    auto start = std::chrono::steady_clock::now();
    struct Record {
      StageClock& c;
      const char* stage;
      std::chrono::steady_clock::time_point start;
      ~Record() {
        std::chrono::duration<double, std::milli> d = std::chrono::steady_clock::now() - start;
        c.out_.push_back({stage, d.count()});
      }
    } record{*this, stage, start};
    return f();
  }

 private:
  std::vector<StageTiming>& out_;
};

std::optional<std::string> find_disagreement(const AlignmentRecord& r, const JudgeOutput& j) {
  bool favourable = j.verdict == Verdict::kCorrect || j.verdict == Verdict::kLikelyCorrect;
  bool dims = r.projection_match && r.aggregation_match && r.grouping_match;
  if (favourable && r.filter_status == FilterStatus::kNotApplied) {
    return "judge verdict " + std::string(verdict_name(j.verdict)) +
           " although no required filter is applied";
  }
  if (j.verdict == Verdict::kIncorrect && dims && r.filter_status == FilterStatus::kFullyApplied) {
    return "judge verdict Incorrect although every filter and dimension matches";
  }
  if (j.filters_applied_status && *j.filters_applied_status != r.filter_status) {
    return "judge reports " + std::string(status_name(*j.filters_applied_status)) +
           ", alignment found " + std::string(status_name(r.filter_status));
  }
  return std::nullopt;
}

}  // namespace

std::string_view mode_name(Mode m) { return m == Mode::kFull ? "FULL" : "JUDGE_ONLY"; }

EvaluationReport evaluate(const EvalInstance& raw, const PipelineConfig& cfg, judge::Judge& judge) {
  EvaluationReport report;
  StageClock clock(report.timings);
  report.id = raw.id;
  report.judge_name = judge.name();
  report.template_id = cfg.prompt.id;

  EvalInstance inst = clock.run("validate", [&] { return validate_instance(raw); });
  report.question_spec = clock.run("extract", [&] {
    return question::extract_question_spec(inst.user_question, *inst.enriched_question, inst.rules,
                                           cfg.cues);
  });

  clock.run("parse", [&] {
    try {
      report.sql_spec = sql::parse_sql_spec(inst.sql, inst.rules);
    } catch (const sql::UnsupportedConstruct& e) {
      report.judge_only_reason = e.what();
    } catch (const sql::SqlError& e) {
      report.judge_only_reason = std::string("sql could not be parsed: ") + e.what();
    }
  });

  judge::PromptBundle bundle;
  if (report.sql_spec) {
    report.mode = Mode::kFull;
    normalize::NormalizerConfig ncfg = cfg.normalizer;
    if (cfg.lambda_min_override) {
      ncfg.lambda_min = *cfg.lambda_min_override;
    } else if (inst.rules.lambda_min) {
      ncfg.lambda_min = *inst.rules.lambda_min;
    }
    auto annotations = clock.run("normalize", [&] {
      return normalize::apply_all(report.question_spec, *report.sql_spec, ncfg);
    });
    report.alignment = clock.run("align", [&] {
      return align::build_alignment_record(report.question_spec, *report.sql_spec, inst.rules,
                                           annotations);
    });
    bundle = judge::render_prompt(inst, *report.alignment, cfg.prompt);
  } else {
    report.mode = Mode::kJudgeOnly;
    bundle = judge::render_judge_only_prompt(inst, *report.judge_only_reason, cfg.prompt);
  }

  const AlignmentRecord* record = report.alignment ? &*report.alignment : nullptr;
  report.judge = clock.run("judge", [&] {
    try {
      JudgeOutput out = judge.evaluate(bundle, record);
      if (!record && !out.filters_applied_status) {
        throw judge::MalformedJudgeOutput("judge-only answer lacks filters_applied_status",
                                          judge::serialize(out));
      }
      return out;
    } catch (const std::exception& e) {
      if (!cfg.stub_fallback) {
        throw JudgeUnavailable(std::string("judge ") + judge.name() + " failed: " + e.what());
      }
      report.warnings.push_back(std::string("judge failed, stub verdict used: ") + e.what());
      report.judge_name = "stub (fallback)";
      return record ? judge::stub_judge(*record) : judge::stub_judge_only();
    }
  });
  for (const auto& w : report.judge.warnings) report.warnings.push_back(w);

  report.score = clock.run("score", [&] {
    if (record) {
      return score::composite(record->filter_status, record->extras_all_benign,
                              report.judge.verdict, report.judge.confidence);
    }
    // Without a record nothing confirms the extras are benign.
    return score::composite(*report.judge.filters_applied_status, false, report.judge.verdict,
                            report.judge.confidence);
  });
  if (record) report.disagreement = find_disagreement(*record, report.judge);
  return report;
}

std::vector<Outcome> evaluate_batch(const std::vector<EvalInstance>& instances,
                                    const PipelineConfig& cfg, judge::Judge& judge,
                                    unsigned parallelism) {
  std::vector<Outcome> out(instances.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < instances.size(); i = next++) {
      Outcome& o = out[i];
      o.id = instances[i].id;
      try {
        o.report = evaluate(instances[i], cfg, judge);
      } catch (const EmptyInput& e) {
        o.error_kind = "EmptyInput";
        o.error = e.what();
      } catch (const JudgeUnavailable& e) {
        o.error_kind = "JudgeUnavailable";
        o.error = e.what();
      } catch (const InternalInvariantViolation& e) {
        o.error_kind = "InternalInvariantViolation";
        o.error = e.what();
      } catch (const std::exception& e) {
        o.error_kind = "Error";
        o.error = e.what();
      }
    }
  };
  unsigned n = std::max(1u, std::min<unsigned>(parallelism, static_cast<unsigned>(instances.size())));
  {
    std::vector<std::jthread> workers;
    for (unsigned t = 1; t < n; ++t) workers.emplace_back(work);
    work();
  }
  return out;
}

double percentile_nearest_rank(std::vector<double> values, double p) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

BatchSummary summarize(const std::vector<Outcome>& outcomes) {
  BatchSummary s;
  s.total = outcomes.size();
  std::vector<double> phis;
  for (const auto& o : outcomes) {
    if (!o.report) {
      ++s.errors;
      ++s.error_kinds[o.error_kind];
      continue;
    }
    const auto& r = *o.report;
    phis.push_back(r.score.phi);
    ++s.tiers[std::string(tier_name(r.score.tier))];
    FilterStatus status = r.alignment ? r.alignment->filter_status : *r.judge.filters_applied_status;
    ++s.statuses[std::string(status_name(status))];
    ++s.verdicts[std::string(verdict_name(r.judge.verdict))];
    ++s.modes[std::string(mode_name(r.mode))];
  }
  s.scored = phis.size();
  if (s.total) s.coverage = static_cast<double>(s.scored) / static_cast<double>(s.total);
  if (!phis.empty()) {
    double sum = 0.0;
    for (double p : phis) sum += p;
    s.mean_phi = score::round2(sum / static_cast<double>(phis.size()));
    s.p90_phi = percentile_nearest_rank(phis, 90.0);
  }
  return s;
}

}  // namespace stef::pipeline
