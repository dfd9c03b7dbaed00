#include <gtest/gtest.h>

#include "fake_endpoint.hpp"
#include "reference_queries.hpp"
#include "stef/aligner.hpp"
#include "stef/judge.hpp"
#include "stef/normalizer.hpp"
#include "stef/question.hpp"
#include "stef/sql.hpp"

using namespace stef;
using namespace stef::judge;

namespace {

EvalInstance combined_instance() {
  return validate_instance({"l5", fixtures::kAllRulesQuestion, std::nullopt, fixtures::kAllRules,
                            fixtures::reference_rules()});
}

AlignmentRecord record_for(const EvalInstance& inst) {
  auto q = question::extract_question_spec(inst.user_question, *inst.enriched_question, inst.rules);
  auto s = sql::parse_sql_spec(inst.sql, inst.rules);
  return align::build_alignment_record(q, s, inst.rules, normalize::apply_all(q, s));
}

RemoteJudgeConfig fast_config(const std::string& url) {
  RemoteJudgeConfig c;
  c.endpoint = url;
  c.api_key = "test-key";
  c.timeout = std::chrono::milliseconds(5000);
  c.backoff = std::chrono::milliseconds(1);
  return c;
}

const char* kClean =
    R"({"verdict":"Correct","confidence":0.92,"rationale":"ok","filters_applied_status":"fully_applied"})";

}  // namespace

TEST(Prompt, InjectsRuleMappings) {
  auto inst = combined_instance();
  auto b = render_prompt(inst, record_for(inst));
  EXPECT_NE(b.rendered_prompt.find("RegionName"), std::string::npos);
  EXPECT_NE(b.rendered_prompt.find("LIMIT 20000"), std::string::npos);
  EXPECT_EQ(b.template_id, "stef-eval-v1");
  EXPECT_EQ(b.rendered_prompt.find("{sql}"), std::string::npos);
  EXPECT_FALSE(b.judge_only);
}

TEST(Prompt, EmptyRulesStillRender) {
  auto inst = validate_instance({"x", "total spend", std::nullopt, "SELECT SUM(spend) FROM t", {}});
  auto b = render_prompt(inst, record_for(inst));
  EXPECT_EQ(b.rendered_prompt.find("{app_rules}"), std::string::npos);
  EXPECT_NE(b.rendered_prompt.find("SELECT SUM(spend) FROM t"), std::string::npos);
}

TEST(Prompt, EveryFilterOnce) {
  auto inst = validate_instance({"x", "spend for China in 2023", std::nullopt,
                                 "SELECT SUM(spend) FROM t WHERE country = 'China' AND status = 'Active'",
                                 fixtures::reference_rules()});
  auto text = comparison_record_text(record_for(inst));
  auto count = [&](const std::string& needle) {
    std::size_t n = 0;
    for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
    return n;
  };
  EXPECT_EQ(count("status = 'active'"), 1u);
  EXPECT_EQ(count("year = 2023"), 1u);
  EXPECT_EQ(count("country = 'china'"), 2u);  // once per side
}

TEST(Prompt, TemplateErrors) {
  EXPECT_THROW(PromptTemplate::from_text("{question} {enriched_question} {comparison_record} {app_rules}"),
               TemplateError);
  auto t = PromptTemplate::from_text("{question} {enriched_question} {sql} {comparison_record} {app_rules}");
  EXPECT_EQ(t.id.rfind("fnv1a-", 0), 0u);
  EXPECT_THROW(PromptTemplate::load("/nonexistent/template.txt"), TemplateError);
}

TEST(Prompt, JudgeOnly) {
  auto inst = validate_instance({"w", "rank customers", std::nullopt,
                                 "SELECT a, RANK() OVER (ORDER BY a) FROM t", {}});
  auto b = render_judge_only_prompt(inst, "window function");
  EXPECT_TRUE(b.judge_only);
  EXPECT_NE(b.rendered_prompt.find("window function"), std::string::npos);
}

TEST(Parse, Clean) {
  auto o = parse_judge_output(kClean);
  EXPECT_EQ(o.verdict, Verdict::kCorrect);
  EXPECT_DOUBLE_EQ(o.confidence, 0.92);
  EXPECT_EQ(o.filters_applied_status, FilterStatus::kFullyApplied);
}

TEST(Parse, FencedAndProse) {
  EXPECT_EQ(parse_judge_output(std::string("```json\n") + kClean + "\n```"), parse_judge_output(kClean));
  EXPECT_EQ(parse_judge_output(std::string("Here you go: ") + kClean + " Thanks."), parse_judge_output(kClean));
}

TEST(Parse, Errors) {
  EXPECT_THROW(parse_judge_output(R"({"verdict":"Maybe","confidence":0.5})"), UnknownVerdict);
  EXPECT_THROW(parse_judge_output("no json here"), MalformedJudgeOutput);
  EXPECT_THROW(parse_judge_output(R"({"verdict":"Correct"})"), MalformedJudgeOutput);
  EXPECT_THROW(parse_judge_output(R"({"verdict":"Correct","confidence":1.5})"), ConfidenceOutOfRange);
}

TEST(Parse, ClampWithWarning) {
  auto o = parse_judge_output(R"({"verdict":"correct","confidence":1.005,"rationale":""})");
  EXPECT_EQ(o.confidence, 1.0);
  EXPECT_FALSE(o.warnings.empty());
  auto low = parse_judge_output(R"({"verdict":"Incorrect","confidence":-0.005,"rationale":""})");
  EXPECT_EQ(low.confidence, 0.0);
}

TEST(Parse, SerializeIdentity) {
  for (auto v : {Verdict::kCorrect, Verdict::kLikelyCorrect, Verdict::kPotentiallyIncorrect,
                 Verdict::kIncorrect}) {
    for (double g : {0.0, 0.65, 0.85, 1.0}) {
      JudgeOutput o{v, g, "because", FilterStatus::kPartiallyApplied, {}};
      EXPECT_EQ(parse_judge_output(serialize(o)), o);
      o.filters_applied_status.reset();
      EXPECT_EQ(parse_judge_output(serialize(o)), o);
    }
  }
}

TEST(Stub, Table) {
  AlignmentRecord r;
  EXPECT_EQ(stub_judge(r).verdict, Verdict::kCorrect);
  EXPECT_EQ(stub_judge(r).confidence, 0.95);
  r.filter_status = FilterStatus::kFullyAppliedWithExtras;
  r.extras_all_benign = true;
  EXPECT_EQ(stub_judge(r).confidence, 0.90);
  EXPECT_EQ(stub_judge(r).verdict, Verdict::kCorrect);
  r.extras_all_benign = false;
  EXPECT_EQ(stub_judge(r).verdict, Verdict::kLikelyCorrect);
  EXPECT_EQ(stub_judge(r).confidence, 0.80);
  r.filter_status = FilterStatus::kPartiallyApplied;
  EXPECT_EQ(stub_judge(r).verdict, Verdict::kPotentiallyIncorrect);
  EXPECT_EQ(stub_judge(r).confidence, 0.70);
  r.filter_status = FilterStatus::kNotApplied;
  EXPECT_EQ(stub_judge(r).verdict, Verdict::kIncorrect);
  EXPECT_EQ(stub_judge(r).confidence, 0.90);
  r.filter_status = FilterStatus::kFullyApplied;
  r.grouping_match = false;
  EXPECT_EQ(stub_judge(r).verdict, Verdict::kIncorrect);
}

TEST(Stub, CombinedQuery) {
  auto inst = combined_instance();
  auto o = stub_judge(record_for(inst));
  EXPECT_EQ(o.verdict, Verdict::kCorrect);
  EXPECT_EQ(o.confidence, 0.95);
}

TEST(Remote, CleanOutput) {
  fixtures::FakeEndpoint ep;
  ep.script({{200, kClean}});
  RemoteJudge j(fast_config(ep.url()));
  auto inst = combined_instance();
  auto r = record_for(inst);
  auto o = j.evaluate(render_prompt(inst, r), &r);
  EXPECT_EQ(o.verdict, Verdict::kCorrect);
  ASSERT_EQ(ep.requests().size(), 1u);
  auto body = nlohmann::json::parse(ep.requests()[0]);
  EXPECT_EQ(body["temperature"], 0);
  EXPECT_EQ(ep.auth_headers()[0], "Bearer test-key");
}

TEST(Remote, FencedOutput) {
  fixtures::FakeEndpoint ep;
  ep.script({{200, std::string("```json\n") + kClean + "\n```"}});
  RemoteJudge j(fast_config(ep.url()));
  auto inst = combined_instance();
  auto r = record_for(inst);
  EXPECT_EQ(j.evaluate(render_prompt(inst, r), &r).verdict, Verdict::kCorrect);
  EXPECT_EQ(ep.requests().size(), 1u);
}

TEST(Remote, ProseThenRetry) {
  fixtures::FakeEndpoint ep;
  ep.script({{200, "I think the query is fine."}, {200, kClean}});
  RemoteJudge j(fast_config(ep.url()));
  auto inst = combined_instance();
  auto r = record_for(inst);
  EXPECT_EQ(j.evaluate(render_prompt(inst, r), &r).verdict, Verdict::kCorrect);
  auto reqs = ep.requests();
  ASSERT_EQ(reqs.size(), 2u);
  auto second = nlohmann::json::parse(reqs[1]).dump();
  EXPECT_NE(second.find("only the JSON object"), std::string::npos);
}

TEST(Remote, ServerErrorsExhaustRetries) {
  fixtures::FakeEndpoint ep;
  ep.script({{500, "boom"}, {500, "boom"}, {500, "boom"}, {200, kClean}});
  RemoteJudge j(fast_config(ep.url()));
  auto inst = combined_instance();
  auto r = record_for(inst);
  try {
    j.evaluate(render_prompt(inst, r), &r);
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.status(), 500);
  }
  EXPECT_EQ(ep.requests().size(), 3u);
}

TEST(Remote, ClientErrorNotRetried) {
  fixtures::FakeEndpoint ep;
  ep.script({{401, "no"}});
  RemoteJudge j(fast_config(ep.url()));
  EXPECT_THROW(j.complete("hi"), TransportError);
  EXPECT_EQ(ep.requests().size(), 1u);
}

TEST(Remote, UnreachableEndpoint) {
  auto cfg = fast_config("http://127.0.0.1:1/v1/chat/completions");
  cfg.max_attempts = 2;
  RemoteJudge j(cfg);
  EXPECT_THROW(j.complete("hi"), TransportError);
}
