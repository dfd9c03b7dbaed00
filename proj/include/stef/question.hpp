#pragma once

// Heuristic question-side extraction driven by a cue table.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stef/model.hpp"

namespace stef::question {

enum class CueAction {
  kAgg,        // arg: SUM | AVG | COUNT | COUNT_DISTINCT
  kAggSingle,  // arg: MAX | MIN; an aggregate only for single-value questions
  kGroup,
  kGroupSoft,  // "by": grouping unless it follows an order or top-k cue
  kOrder,
  kTopK,
  kFilter,
  kDim,        // a known dimension word, e.g. "region"
  kValue,      // arg: the column a known value belongs to
  kDistinct,
  kCompare,    // arg: GT | GTE | LT | LTE
  kEquals,
};

std::string_view action_name(CueAction a);

struct Cue {
  std::vector<std::string> words;  // lower case
  CueAction action = CueAction::kDim;
  std::string arg;
};

class CueTableError : public std::runtime_error {
 public:
  CueTableError(const std::string& what, int line)
      : std::runtime_error("cue table line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Phrase -> action table. Text format, one cue per line:
///
///   # comment
///   broken down by => group
///   total          => agg SUM
///   china          => value country
class CueTable {
 public:
  static CueTable parse(std::string_view text);
  static CueTable load(const std::filesystem::path& path);
  /// The table shipped as data/cues.txt, compiled in.
  static const CueTable& builtin();

  /// Cues ordered longest phrase first.
  const std::vector<Cue>& cues() const { return cues_; }

 private:
  std::vector<Cue> cues_;
};

/// Extracts the spec of a single question text.
QuestionSpec extract_text(std::string_view text, const AppRules& rules,
                          const CueTable& cues = CueTable::builtin());

/// Extracts both questions and merges them.
QuestionSpec extract_question_spec(std::string_view q_user, std::string_view q_enriched,
                                   const AppRules& rules,
                                   const CueTable& cues = CueTable::builtin());

/// Union of both specs. When both sides filter the same column differently
/// the enriched side wins and a note records the conflict.
QuestionSpec merge_user_enriched(const QuestionSpec& user, const QuestionSpec& enriched);

/// Extension point for model-backed extraction; the heuristic extractor is
/// the default.
class QuestionExtractor {
 public:
  virtual ~QuestionExtractor() = default;
  virtual QuestionSpec extract(std::string_view q_user, std::string_view q_enriched,
                               const AppRules& rules) const = 0;
};

class HeuristicExtractor final : public QuestionExtractor {
 public:
  explicit HeuristicExtractor(CueTable cues = CueTable::builtin()) : cues_(std::move(cues)) {}
  QuestionSpec extract(std::string_view q_user, std::string_view q_enriched,
                       const AppRules& rules) const override {
    return extract_question_spec(q_user, q_enriched, rules, cues_);
  }

 private:
  CueTable cues_;
};

}  // namespace stef::question
