#include "stef/judge.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "stef/embedded.hpp"
#include "stef/json_io.hpp"

namespace stef::judge {

namespace {

using io::json;

constexpr std::string_view kPlaceholders[] = {"{app_rules}", "{question}", "{enriched_question}",
                                              "{sql}", "{comparison_record}"};

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream out;
  out << "fnv1a-" << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

// Single pass, so placeholder-like text inside a substituted value (a
// question mentioning "{sql}") is left alone.
std::string substitute(std::string_view tmpl, const std::string (&values)[5]) {
  std::string out;
  out.reserve(tmpl.size() + 1024);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    bool replaced = false;
    if (tmpl[i] == '{') {
      for (std::size_t k = 0; k < std::size(kPlaceholders); ++k) {
        if (tmpl.substr(i, kPlaceholders[k].size()) == kPlaceholders[k]) {
          out += values[k];
          i += kPlaceholders[k].size();
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out.push_back(tmpl[i++]);
  }
  return out;
}

PromptBundle render(const EvalInstance& inst, const std::string& record_text,
                    const PromptTemplate& tmpl, bool judge_only) {
  const std::string values[5] = {
      io::to_json(inst.rules).dump(2),
      inst.user_question,
      inst.enriched_question.value_or(inst.user_question),
      inst.sql,
      record_text,
  };
  return {substitute(tmpl.text, values), tmpl.id, inst.rules, judge_only};
}

std::optional<json> try_parse(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  return j;
}

std::optional<json> repair(std::string_view raw) {
  std::string_view body = raw;
  // Fenced block: take what is between the first fence line and the next fence.
  if (auto fence = body.find("```"); fence != std::string_view::npos) {
    auto line_end = body.find('\n', fence);
    auto close = line_end == std::string_view::npos ? std::string_view::npos : body.find("```", line_end);
    if (close != std::string_view::npos) {
      if (auto j = try_parse(body.substr(line_end + 1, close - line_end - 1))) return j;
    }
  }
  auto open = body.find('{');
  auto close = body.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    return std::nullopt;
  }
  return try_parse(body.substr(open, close - open + 1));
}

}  // namespace

PromptTemplate PromptTemplate::from_text(std::string_view text) {
  PromptTemplate t;
  std::string_view body = text;
  constexpr std::string_view kHeader = "# template_id:";
  if (body.starts_with(kHeader)) {
    auto nl = body.find('\n');
    t.id = trim(body.substr(kHeader.size(), nl == std::string_view::npos ? std::string_view::npos
                                                                        : nl - kHeader.size()));
    body = nl == std::string_view::npos ? std::string_view{} : body.substr(nl + 1);
    if (t.id.empty()) throw TemplateError("template_id header is empty");
  }
  for (auto p : kPlaceholders) {
    if (body.find(p) == std::string_view::npos) {
      throw TemplateError("template is missing the " + std::string(p) + " placeholder");
    }
  }
  t.text = std::string(body);
  if (t.id.empty()) t.id = fnv1a_hex(t.text);
  return t;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TemplateError("cannot open template " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

const PromptTemplate& PromptTemplate::builtin() {
  static const PromptTemplate t = from_text(embedded::kEvalPrompt);
  return t;
}

std::string comparison_record_text(const AlignmentRecord& record) {
  json j = io::to_json(record);
  // The role lists carry every filter once; the per-class lists would repeat them.
  for (auto key : {"matched", "missing", "mismatched", "extra"}) j.erase(key);
  json counts{{"required", record.required.size()}, {"matched", record.matched.size()},
              {"missing", record.missing.size()},   {"mismatched", record.mismatched.size()},
              {"extra", record.extra.size()}};
  j["filter_counts"] = std::move(counts);
  j["available"] = true;
  return j.dump(2);
}

PromptBundle render_prompt(const EvalInstance& inst, const AlignmentRecord& record,
                           const PromptTemplate& tmpl) {
  return render(inst, comparison_record_text(record), tmpl, false);
}

PromptBundle render_judge_only_prompt(const EvalInstance& inst, std::string_view reason,
                                      const PromptTemplate& tmpl) {
  json j{{"available", false},
         {"reason", std::string(reason)},
         {"request",
          "No deterministic comparison could be made. Work out from the SQL yourself how the "
          "question's filters were applied and report it in filters_applied_status."}};
  return render(inst, j.dump(2), tmpl, true);
}

JudgeOutput parse_judge_output(std::string_view raw) {
  std::optional<json> j = try_parse(raw);
  if (!j || !j->is_object()) j = repair(raw);
  if (!j || !j->is_object()) {
    throw MalformedJudgeOutput("judge output is not a JSON object", std::string(raw));
  }

  JudgeOutput out;
  const json* verdict = nullptr;
  for (auto key : {"verdict", "overall_verdict"}) {
    if (j->contains(key)) {
      verdict = &(*j)[key];
      break;
    }
  }
  if (!verdict || !verdict->is_string()) {
    throw MalformedJudgeOutput("judge output has no verdict string", std::string(raw));
  }
  auto v = verdict_from_name(verdict->get<std::string>());
  if (!v) throw UnknownVerdict(verdict->get<std::string>());
  out.verdict = *v;

  if (!j->contains("confidence") || !(*j)["confidence"].is_number()) {
    throw MalformedJudgeOutput("judge output has no numeric confidence", std::string(raw));
  }
  double gamma = (*j)["confidence"].get<double>();
  if (!std::isfinite(gamma) || gamma < -0.01 || gamma > 1.01) throw ConfidenceOutOfRange(gamma);
  if (gamma < 0.0 || gamma > 1.0) {
    double clamped = gamma < 0.0 ? 0.0 : 1.0;
    std::ostringstream w;
    w << "confidence " << gamma << " clamped to " << clamped;
    out.warnings.push_back(w.str());
    gamma = clamped;
  }
  out.confidence = gamma;

  if (j->contains("rationale")) {
    const json& r = (*j)["rationale"];
    out.rationale = r.is_string() ? r.get<std::string>() : r.dump();
  }
  if (j->contains("filters_applied_status") && !(*j)["filters_applied_status"].is_null()) {
    const json& s = (*j)["filters_applied_status"];
    auto status = s.is_string() ? status_from_name(s.get<std::string>()) : std::nullopt;
    if (!status) {
      throw MalformedJudgeOutput("filters_applied_status is not one of the four classes",
                                 std::string(raw));
    }
    out.filters_applied_status = status;
  }
  return out;
}

std::string serialize(const JudgeOutput& out) {
  JudgeOutput copy = out;
  copy.warnings.clear();
  return io::to_json(copy).dump();
}

JudgeOutput stub_judge(const AlignmentRecord& r) {
  bool dims = r.projection_match && r.aggregation_match && r.grouping_match;
  JudgeOutput out;
  out.filters_applied_status = r.filter_status;
  if (!dims || r.filter_status == FilterStatus::kNotApplied) {
    out.verdict = Verdict::kIncorrect;
    out.confidence = 0.90;
    out.rationale = !dims ? "projection, aggregation or grouping does not match the question"
                          : "none of the question's filters are applied";
    return out;
  }
  switch (r.filter_status) {
    case FilterStatus::kFullyApplied:
      out.verdict = Verdict::kCorrect;
      out.confidence = 0.95;
      out.rationale = "all dimensions match and every filter is applied";
      break;
    case FilterStatus::kFullyAppliedWithExtras:
      if (r.extras_all_benign) {
        out.verdict = Verdict::kCorrect;
        out.confidence = 0.90;
        out.rationale = "all dimensions match; extra filters are benign defaults";
      } else {
        out.verdict = Verdict::kLikelyCorrect;
        out.confidence = 0.80;
        out.rationale = "all dimensions match; some extra filters are not known defaults";
      }
      break;
    case FilterStatus::kPartiallyApplied:
      out.verdict = Verdict::kPotentiallyIncorrect;
      out.confidence = 0.70;
      out.rationale = "some filters are missing or differ from the question";
      break;
    case FilterStatus::kNotApplied:
      break;  // handled above
  }
  return out;
}

JudgeOutput stub_judge_only() {
  JudgeOutput out;
  out.verdict = Verdict::kPotentiallyIncorrect;
  out.confidence = 0.50;
  out.rationale = "query is outside the supported SQL subset; no deterministic comparison";
  out.filters_applied_status = FilterStatus::kPartiallyApplied;
  return out;
}

JudgeOutput StubJudge::evaluate(const PromptBundle&, const AlignmentRecord* record) {
  return record ? stub_judge(*record) : stub_judge_only();
}

}  // namespace stef::judge
