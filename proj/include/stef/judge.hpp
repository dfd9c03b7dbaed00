#pragma once

// Verdict elicitation: prompt rendering, output parsing, the offline stub and
// an HTTP client for chat-completion style endpoints.

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "stef/model.hpp"
#include "stef/scorer.hpp"

namespace stef::judge {

using score::ConfidenceOutOfRange;

class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedJudgeOutput : public std::runtime_error {
 public:
  MalformedJudgeOutput(const std::string& what, std::string raw)
      : std::runtime_error(what), raw_(std::move(raw)) {}
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

class UnknownVerdict : public std::runtime_error {
 public:
  explicit UnknownVerdict(std::string value)
      : std::runtime_error("unknown verdict '" + value + "'"), value_(std::move(value)) {}
  const std::string& value() const { return value_; }

 private:
  std::string value_;
};

class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& what, int status = 0)
      : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }  // HTTP status, 0 when no response

 private:
  int status_;
};

class TimeoutExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PromptTemplate {
  std::string text;  // without the template_id header line
  std::string id;

  /// Requires all five placeholders. The id comes from a leading
  /// "# template_id: <id>" line, or a hash of the text when absent.
  static PromptTemplate from_text(std::string_view text);
  static PromptTemplate load(const std::filesystem::path& path);
  /// data/eval_prompt.txt, compiled in.
  static const PromptTemplate& builtin();
};

struct PromptBundle {
  std::string rendered_prompt;
  std::string template_id;
  AppRules injected_rules;
  bool judge_only = false;
};

/// JSON text placed at {comparison_record}: statuses, match flags, rule
/// firings and every filter of both sides listed once with its role.
std::string comparison_record_text(const AlignmentRecord& record);

PromptBundle render_prompt(const EvalInstance& inst, const AlignmentRecord& record,
                           const PromptTemplate& tmpl = PromptTemplate::builtin());

/// Prompt for a query the SQL reader could not handle: the comparison record
/// is marked unavailable and the judge is asked for the filter status too.
PromptBundle render_judge_only_prompt(const EvalInstance& inst, std::string_view reason,
                                      const PromptTemplate& tmpl = PromptTemplate::builtin());

/// Strict JSON first, then one repair pass (code fences, surrounding prose).
JudgeOutput parse_judge_output(std::string_view raw);
std::string serialize(const JudgeOutput& out);

/// Deterministic verdict from the alignment record alone.
JudgeOutput stub_judge(const AlignmentRecord& record);
/// The stub's answer when no record exists.
JudgeOutput stub_judge_only();

/// The port the pipeline calls. `record` is null in judge-only mode.
class Judge {
 public:
  virtual ~Judge() = default;
  virtual JudgeOutput evaluate(const PromptBundle& bundle, const AlignmentRecord* record) = 0;
  virtual std::string name() const = 0;
};

class StubJudge final : public Judge {
 public:
  JudgeOutput evaluate(const PromptBundle& bundle, const AlignmentRecord* record) override;
  std::string name() const override { return "stub"; }
};

struct RemoteJudgeConfig {
  std::string endpoint;  // e.g. http://localhost:8080/v1/chat/completions
  std::string api_key;
  std::string model = "default";
  std::chrono::milliseconds timeout{30000};
  int max_attempts = 3;
  std::chrono::milliseconds backoff{200};  // doubled after each failed attempt
  int max_in_flight = 8;
};

class RemoteJudge final : public Judge {
 public:
  explicit RemoteJudge(RemoteJudgeConfig cfg);
  ~RemoteJudge() override;

  JudgeOutput evaluate(const PromptBundle& bundle, const AlignmentRecord* record) override;
  std::string name() const override { return "remote"; }

  /// One request with retries; returns the message content.
  std::string complete(const std::string& prompt);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

inline constexpr std::string_view kReminder =
    "\n\nReply again with only the JSON object described above and no other text.";

}  // namespace stef::judge
