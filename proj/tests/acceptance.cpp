// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "fake_endpoint.hpp"
#include "reference_queries.hpp"
#include "scoring_oracle.hpp"
#include "stef/aligner.hpp"
#include "stef/cli.hpp"
#include "stef/judge.hpp"
#include "stef/normalizer.hpp"
#include "stef/pipeline.hpp"
#include "stef/scorer.hpp"
#include "stef/sql.hpp"

using namespace stef;
namespace fs = std::filesystem;

namespace {

// Collects failures for one criterion; the first few are printed.
struct Check {
  std::vector<std::string> failures;
  std::string detail;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

const std::vector<FilterStatus> kStatuses{FilterStatus::kFullyApplied, FilterStatus::kFullyAppliedWithExtras,
                                          FilterStatus::kPartiallyApplied, FilterStatus::kNotApplied};
const std::vector<Verdict> kVerdicts{Verdict::kCorrect, Verdict::kLikelyCorrect, Verdict::kPotentiallyIncorrect,
                                     Verdict::kIncorrect};

std::string str(std::string_view s) { return std::string(s); }

std::string num(double x) {
  std::ostringstream o;
  o << x;
  return o.str();
}

// 1. Composite score against the integer oracle over the full lattice.
void scoring_lattice(Check& c) {
  auto start = std::chrono::steady_clock::now();
  int cases = 0;
  for (auto st : kStatuses) {
    for (bool benign : {false, true}) {
      for (auto v : kVerdicts) {
        for (double g : {0.50, 0.64, 0.65, 0.84, 0.85, 1.00}) {
          ++cases;
          auto got = score::composite(st, benign, v, g);
          auto want = oracle::expected(str(status_name(st)), benign, str(verdict_name(v)), g);
          std::string tag = str(status_name(st)) + "/" + (benign ? "benign" : "plain") + "/" +
                            str(verdict_name(v)) + "/" + std::to_string(g);
          c.expect(got.base == want.base, tag + " base");
          c.expect(got.phi == static_cast<double>(want.phi), tag + " phi " + std::to_string(got.phi) +
                                                                 " want " + std::to_string(want.phi));
          c.expect(str(tier_name(got.tier)) == want.tier, tag + " tier");
          c.expect(std::lround(got.multiplier * 100) == want.multiplier_percent, tag + " multiplier");
        }
      }
    }
  }
  double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  c.expect(cases == 192, "case count " + std::to_string(cases));
  c.expect(ms < 1000.0, "lattice took " + std::to_string(ms) + " ms");

  auto max = score::composite(FilterStatus::kFullyApplied, false, Verdict::kCorrect, 0.90);
  c.expect(max.base == 10 && max.phi == 100.0 && max.tier == QualityTier::kExcellent, "max anchor");
  auto min = score::composite(FilterStatus::kNotApplied, false, Verdict::kPotentiallyIncorrect, 0.50);
  c.expect(min.base == 2 && min.phi == 10.0 && min.tier == QualityTier::kPoor, "min anchor");
  c.detail = std::to_string(cases) + " cases in " + std::to_string(static_cast<int>(ms)) + " ms";
}

// 2. Multiplier tier boundaries and random membership.
void confidence_boundaries(Check& c) {
  c.expect(score::confidence_multiplier(0.85) == 1.0, "0.85");
  c.expect(score::confidence_multiplier(0.65) == 0.8, "0.65");
  c.expect(score::confidence_multiplier(0.64) == 0.5, "0.64");
  std::mt19937 rng(20240611);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    double g = dist(rng);
    double m = score::confidence_multiplier(g);
    double want = g >= 0.85 ? 1.0 : g >= 0.65 ? 0.8 : 0.5;
    c.expect(m == want, "gamma " + std::to_string(g));
  }
  c.detail = "10000 random draws";
}

std::multiset<RuleId> fired(const std::string& sql) {
  std::multiset<RuleId> out;
  for (const auto& a : normalize::apply_all({}, sql::parse_sql_spec(sql))) {
    if (a.exempt) out.insert(a.rule);
  }
  return out;
}

// 3. Rule firings on the reference queries; the combined one scores 100.
void normalization_rules(Check& c) {
  using R = RuleId;
  auto l2 = fired(fixtures::kRequiredGroupBy);
  auto l3 = fired(fixtures::kBenignGroupBy);
  auto l4 = fired(fixtures::kSensibleOrderBy);
  auto l5 = fired(fixtures::kAllRules);
  c.expect(l2.count(R::kRequiredGroupBy) == 1, "required GROUP BY on its query");
  c.expect(l3.count(R::kBenignGroupBy) == 1, "benign GROUP BY on its query");
  c.expect(l4.count(R::kSensibleOrderBy) == 1, "sensible ORDER BY on its query");
  c.expect(l2 == std::multiset<R>{R::kRequiredGroupBy, R::kBenignGroupBy}, "full set, required GROUP BY query");
  c.expect(l3 == std::multiset<R>{R::kRequiredGroupBy, R::kBenignGroupBy}, "full set, benign GROUP BY query");
  c.expect(l4 == std::multiset<R>{R::kRequiredGroupBy, R::kBenignGroupBy, R::kSensibleOrderBy},
           "full set, ORDER BY query");
  c.expect(l5 == std::multiset<R>{R::kRequiredGroupBy, R::kBenignGroupBy, R::kSensibleOrderBy, R::kSafetyLimit},
           "full set, combined query");
  auto safety = fired(fixtures::kSafetyLimit);
  c.expect(safety.count(R::kSafetyLimit) == 1, "safety LIMIT on its query");

  judge::StubJudge stub;
  auto r = pipeline::evaluate({"combined", fixtures::kAllRulesQuestion, std::nullopt, fixtures::kAllRules,
                               fixtures::reference_rules()},
                              {}, stub);
  c.expect(r.mode == pipeline::Mode::kFull, "combined query mode");
  c.expect(r.score.phi == 100.0, "combined query phi " + std::to_string(r.score.phi));
  c.detail = "combined query phi " + num(r.score.phi);
}

// Random EQ filter sets over a small universe; the oracle works on (column, value) pairs.
struct Pair {
  std::string col;
  int value;
  bool operator<(const Pair& o) const { return std::tie(col, value) < std::tie(o.col, o.value); }
  bool operator==(const Pair& o) const { return col == o.col && value == o.value; }
};

const std::vector<std::string> kColumns{"a", "b", "c", "d", "tenant_id"};

std::vector<Pair> random_pairs(std::mt19937& rng, int max_n) {
  std::uniform_int_distribution<int> n(0, max_n), col(0, static_cast<int>(kColumns.size()) - 1), val(0, 3);
  std::set<Pair> s;
  for (int i = n(rng); i > 0; --i) s.insert({kColumns[col(rng)], val(rng)});
  return {s.begin(), s.end()};
}

FilterTriple to_filter(const Pair& p, bool as_string) {
  auto v = as_string ? Value::string(std::to_string(p.value)) : Value::number(std::to_string(p.value));
  return FilterTriple::make(p.col, FilterOp::kEq, {v});
}

struct OracleResult {
  std::set<Pair> matched, missing, mismatched, extra;
  FilterStatus status;
};

OracleResult oracle_classify(const std::vector<Pair>& req_all, const std::vector<Pair>& sql_all,
                             const std::set<std::string>& ignored) {
  std::vector<Pair> req, sql;
  for (const auto& p : req_all) if (!ignored.count(p.col)) req.push_back(p);
  for (const auto& p : sql_all) if (!ignored.count(p.col)) sql.push_back(p);
  OracleResult o;
  std::set<std::string> mismatch_cols;
  for (const auto& r : req) {
    bool exact = std::find(sql.begin(), sql.end(), r) != sql.end();
    bool col = std::any_of(sql.begin(), sql.end(), [&](const Pair& s) { return s.col == r.col; });
    if (exact) o.matched.insert(r);
    else if (col) { o.mismatched.insert(r); mismatch_cols.insert(r.col); }
    else o.missing.insert(r);
  }
  for (const auto& s : sql) {
    if (std::find(req.begin(), req.end(), s) == req.end() && !mismatch_cols.count(s.col)) o.extra.insert(s);
  }
  if (o.matched.size() == req.size()) {
    o.status = o.extra.empty() ? FilterStatus::kFullyApplied : FilterStatus::kFullyAppliedWithExtras;
  } else {
    o.status = o.matched.empty() ? FilterStatus::kNotApplied : FilterStatus::kPartiallyApplied;
  }
  return o;
}

std::set<Pair> as_pairs(const std::vector<FilterTriple>& fs) {
  std::set<Pair> out;
  for (const auto& f : fs) out.insert({f.lhs, std::stoi(f.rhs.at(0).text)});
  return out;
}

bool same_classification(const align::FilterClassification& x, const align::FilterClassification& y) {
  return x.status == y.status && x.required == y.required && x.matched == y.matched && x.missing == y.missing &&
         x.mismatched == y.mismatched && x.extra == y.extra && x.extras_all_benign == y.extras_all_benign;
}

// 4. Partition, benign monotonicity and ignore symmetry on random pairs.
void filter_partition(Check& c) {
  std::mt19937 rng(7);
  std::bernoulli_distribution coin(0.5);
  auto rules = AppRules::make({}, {}, {"tenant_id"});
  for (int i = 0; i < 1000; ++i) {
    auto req = random_pairs(rng, 4), sql = random_pairs(rng, 5);
    QuestionSpec q;
    SqlSpec s;
    for (const auto& p : req) q.filters.push_back(to_filter(p, coin(rng)));
    for (const auto& p : sql) s.filters.push_back(to_filter(p, coin(rng)));
    auto got = align::classify_filters(q, s, rules);
    auto want = oracle_classify(req, sql, {"tenant_id"});
    std::string tag = "pair " + std::to_string(i);

    auto m = as_pairs(got.matched), mi = as_pairs(got.missing), mm = as_pairs(got.mismatched);
    std::set<Pair> uni;
    uni.insert(m.begin(), m.end());
    uni.insert(mi.begin(), mi.end());
    uni.insert(mm.begin(), mm.end());
    c.expect(uni == as_pairs(got.required), tag + " union");
    c.expect(m.size() + mi.size() + mm.size() == got.required.size(), tag + " disjoint");
    c.expect(got.matched.size() + got.missing.size() + got.mismatched.size() == got.required.size(),
             tag + " cardinality");
    c.expect(m == want.matched && mi == want.missing && mm == want.mismatched, tag + " sets vs oracle");
    c.expect(as_pairs(got.extra) == want.extra, tag + " extras vs oracle");
    c.expect(got.status == want.status, tag + " status vs oracle");
  }

  // Benign monotonicity: growing the benign list never worsens status or benign-ness.
  std::vector<std::string> conditions;
  for (const auto& col : {"a", "b", "c", "d"}) {
    for (int v = 0; v < 4; ++v) conditions.push_back(std::string(col) + " = " + std::to_string(v));
  }
  for (int i = 0; i < 1000; ++i) {
    auto req = random_pairs(rng, 3), sql = random_pairs(rng, 5);
    QuestionSpec q;
    SqlSpec s;
    for (const auto& p : req) q.filters.push_back(to_filter(p, false));
    for (const auto& p : sql) s.filters.push_back(to_filter(p, false));
    std::vector<std::string> small, large;
    for (const auto& cond : conditions) {
      bool in_small = coin(rng);
      if (in_small) small.push_back(cond);
      if (in_small || coin(rng)) large.push_back(cond);
    }
    auto lo = align::classify_filters(q, s, AppRules::make({}, small, {}));
    auto hi = align::classify_filters(q, s, AppRules::make({}, large, {}));
    std::string tag = "benign " + std::to_string(i);
    c.expect(lo.status == hi.status, tag + " status moved");
    c.expect(!lo.extras_all_benign || hi.extras_all_benign, tag + " benign flipped off");
  }

  // Ignore symmetry: ignored-column filters on either side change nothing.
  for (int i = 0; i < 1000; ++i) {
    auto req = random_pairs(rng, 4), sql = random_pairs(rng, 5);
    QuestionSpec q;
    SqlSpec s;
    for (const auto& p : req) if (p.col != "tenant_id") q.filters.push_back(to_filter(p, false));
    for (const auto& p : sql) if (p.col != "tenant_id") s.filters.push_back(to_filter(p, false));
    auto base = align::classify_filters(q, s, rules);
    auto q2 = q;
    auto s2 = s;
    std::uniform_int_distribution<int> val(0, 9);
    if (coin(rng)) q2.filters.push_back(to_filter({"tenant_id", val(rng)}, false));
    if (coin(rng)) s2.filters.push_back(to_filter({"tenant_id", val(rng)}, false));
    auto perturbed = align::classify_filters(q2, s2, rules);
    auto swapped = align::classify_filters(q2, s, rules);
    std::string tag = "ignore " + std::to_string(i);
    c.expect(same_classification(base, perturbed), tag + " both sides");
    c.expect(same_classification(base, swapped), tag + " question side");
  }
  c.detail = "1000 partition pairs, 1000 benign pairs, 1000 ignore pairs";
}

// 5. Benign extra recovers the full base score.
void leniency_recovery(Check& c) {
  judge::StubJudge stub;
  auto r = pipeline::evaluate(
      {"benign", "Total spend per country for China", std::nullopt,
       "SELECT Country, SUM(Spend) AS TotalSpend FROM spend_table WHERE Country ILIKE 'China' "
       "AND status = 'Active' GROUP BY Country",
       fixtures::reference_rules()},
      {}, stub);
  c.expect(r.alignment && r.alignment->filter_status == FilterStatus::kFullyAppliedWithExtras, "status");
  c.expect(r.alignment && r.alignment->extras_all_benign, "extras benign");
  c.expect(r.score.delta_lenient == 1, "leniency");
  c.expect(r.score.base == 10, "base " + std::to_string(r.score.base));
  c.expect(r.score.gamma >= 0.85, "gamma");
  c.expect(r.score.phi == 100.0, "phi " + std::to_string(r.score.phi));
  auto direct = score::composite(FilterStatus::kFullyAppliedWithExtras, true, Verdict::kCorrect, 0.85);
  c.expect(direct.base == 10 && direct.phi == 100.0, "direct composite");
  c.detail = "base " + std::to_string(r.score.base) + ", phi " + num(r.score.phi);
}

// 6. Golden-corpus round trip and unsupported-construct routing.
void parser_round_trip(Check& c) {
  std::ifstream in(STEF_TEST_DATA_DIR "/golden_queries.sql");
  int n = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line.rfind("--", 0) == 0) continue;
    ++n;
    try {
      auto first = sql::parse_sql_spec(line);
      auto text = sql::render_canonical(first);
      c.expect(sql::parse_sql_spec(text) == first, "round trip: " + line);
    } catch (const std::exception& e) {
      c.expect(false, line + ": " + e.what());
    }
  }
  c.expect(n == 50, "corpus size " + std::to_string(n));

  const std::vector<std::pair<std::string, std::string>> unsupported{
      {"WITH x AS (SELECT 1) SELECT * FROM x", "CTE"},
      {"SELECT a FROM t UNION SELECT a FROM u", "UNION"},
      {"SELECT a FROM t INTERSECT SELECT a FROM u", "INTERSECT"},
      {"SELECT a FROM t EXCEPT SELECT a FROM u", "EXCEPT"},
      {"SELECT a, SUM(b) OVER (PARTITION BY a) FROM t", "window function"},
      {"SELECT a FROM t WHERE b IN (SELECT b FROM u)", "subquery"},
      {"SELECT a FROM t LEFT JOIN u ON t.id = u.id", "outer join"},
      {"SELECT a FROM t CROSS JOIN u", "cross join"},
      {"SELECT a FROM t NATURAL JOIN u", "natural join"},
      {"SELECT a FROM t JOIN u USING (id)", "JOIN USING"},
      {"SELECT a FROM t JOIN u ON t.id < u.id", "complex join condition"},
      {"SELECT DISTINCT ON (a) a FROM t", "DISTINCT ON"},
      {"SELECT a FROM t FETCH FIRST 3 ROWS ONLY", "FETCH FIRST"},
      {"SELECT TOP 3 a FROM t", "TOP"},
  };
  judge::StubJudge stub;
  for (const auto& [q, construct] : unsupported) {
    try {
      sql::parse_sql_spec(q);
      c.expect(false, "accepted: " + q);
    } catch (const sql::UnsupportedConstruct& e) {
      c.expect(e.construct() == construct, q + " named " + e.construct());
    }
    auto r = pipeline::evaluate({"u", "list a", std::nullopt, q, {}}, {}, stub);
    c.expect(r.mode == pipeline::Mode::kJudgeOnly, q + " not judge-only");
    c.expect(r.judge_only_reason && r.judge_only_reason->find(construct) != std::string::npos,
             q + " reason");
  }
  c.detail = std::to_string(n) + " queries, " + std::to_string(unsupported.size()) + " unsupported constructs";
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

int run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

// 7. Deterministic batch; one malformed line is isolated.
void determinism(Check& c) {
  fs::path dir = fs::temp_directory_path() / ("stef-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "rules.json") << fixtures::kRulesJson;

  const std::vector<std::string> questions{
      "Total spend per country for China in 2023", "Total spend per year and country for China",
      "Number of orders by region in 2022", "Average spend per customer", "top 5 customers by spend",
      "Total spend by region for APAC", "Count of active customers by country"};
  const std::vector<std::string> queries{
      fixtures::kAllRules, fixtures::kBenignGroupBy,
      "SELECT region, COUNT(*) FROM orders WHERE year = 2022 GROUP BY region",
      "SELECT customer, AVG(spend) FROM t GROUP BY customer",
      "SELECT customer, SUM(spend) FROM t GROUP BY customer ORDER BY SUM(spend) DESC LIMIT 5",
      "SELECT region, SUM(spend) FROM t WHERE region = 'APAC' AND is_deleted = 0 GROUP BY region",
      "SELECT country, COUNT(DISTINCT customer) FROM t WHERE status = 'Active' GROUP BY country",
      "SELECT a, RANK() OVER (ORDER BY b) FROM t",
      "SELECT country, SUM(spend) FROM t WHERE year = 2021 OR year = 2022 GROUP BY country"};
  std::vector<std::string> lines;
  for (int i = 0; i < 100; ++i) {
    lines.push_back(nlohmann::json{{"id", "inst-" + std::to_string(i)},
                                   {"question", questions[i % questions.size()]},
                                   {"sql", queries[(i * 7) % queries.size()]}}
                        .dump());
  }
  auto write = [&](const fs::path& p, const std::vector<std::string>& ls) {
    std::ofstream out(p);
    for (const auto& l : ls) out << l << '\n';
  };
  write(dir / "batch.jsonl", lines);
  auto args = [&](const std::string& input, const std::string& output) {
    return std::vector<std::string>{"eval", "--input", (dir / input).string(), "--output",
                                    (dir / output).string(), "--rules", (dir / "rules.json").string(),
                                    "--judge", "stub", "--parallelism", "4", "--no-timings"};
  };
  int rc1 = run_cli(args("batch.jsonl", "run1.jsonl"));
  int rc2 = run_cli(args("batch.jsonl", "run2.jsonl"));
  c.expect(rc1 == 0 && rc2 == 0, "clean runs exit " + std::to_string(rc1) + "/" + std::to_string(rc2));
  auto r1 = read_lines(dir / "run1.jsonl"), r2 = read_lines(dir / "run2.jsonl");
  c.expect(r1.size() == 100 && r2.size() == 100, "record counts");
  for (std::size_t i = 0; i < std::min(r1.size(), r2.size()); ++i) {
    auto a = nlohmann::json::parse(r1[i]), b = nlohmann::json::parse(r2[i]);
    c.expect(a["report"]["score"].dump() == b["report"]["score"].dump(), "score field differs at " + std::to_string(i));
    c.expect(r1[i] == r2[i], "record differs at " + std::to_string(i));
  }

  auto broken = lines;
  broken[42] = "{\"id\": \"inst-42\", \"question\": ";
  write(dir / "broken.jsonl", broken);
  int rc3 = run_cli(args("broken.jsonl", "run3.jsonl"));
  c.expect(rc3 == 2, "malformed run exit " + std::to_string(rc3));
  auto r3 = read_lines(dir / "run3.jsonl");
  c.expect(r3.size() == 100, "malformed run record count");
  for (std::size_t i = 0; i < std::min(r1.size(), r3.size()); ++i) {
    if (i == 42) {
      auto bad = nlohmann::json::parse(r3[i]);
      c.expect(!bad["ok"].get<bool>() && bad["error"]["kind"] == "InputFormatError", "malformed record");
    } else {
      c.expect(r1[i] == r3[i], "record " + std::to_string(i) + " changed");
    }
  }
  auto summary = nlohmann::json::parse(std::ifstream(dir / "run3.summary.json"));
  double coverage = summary["coverage"].get<double>();
  c.expect(coverage == 0.99, "coverage " + std::to_string(coverage));
  fs::remove_all(dir);
  c.detail = "coverage with one malformed line " + num(coverage);
}

// 8. Remote judge against a local endpoint; parse/serialize identity.
void judge_contract(Check& c) {
  const std::string clean =
      R"({"verdict":"Likely Correct","confidence":0.8,"rationale":"close","filters_applied_status":"fully_applied"})";
  auto inst = validate_instance({"j", fixtures::kAllRulesQuestion, std::nullopt, fixtures::kAllRules,
                                 fixtures::reference_rules()});
  auto q = question::extract_question_spec(inst.user_question, *inst.enriched_question, inst.rules);
  auto s = sql::parse_sql_spec(inst.sql, inst.rules);
  auto record = align::build_alignment_record(q, s, inst.rules, normalize::apply_all(q, s));
  auto bundle = judge::render_prompt(inst, record);

  auto attempt = [&](std::vector<fixtures::CannedResponse> script, std::size_t want_requests,
                     const std::string& label) {
    fixtures::FakeEndpoint ep;
    ep.script(std::move(script));
    judge::RemoteJudgeConfig cfg;
    cfg.endpoint = ep.url();
    cfg.api_key = "k";
    cfg.backoff = std::chrono::milliseconds(1);
    judge::RemoteJudge j(cfg);
    try {
      auto out = j.evaluate(bundle, &record);
      c.expect(out.verdict == Verdict::kLikelyCorrect && out.confidence == 0.8, label + " output");
    } catch (const std::exception& e) {
      c.expect(false, label + ": " + e.what());
    }
    c.expect(ep.requests().size() == want_requests, label + " request count");
  };
  attempt({{200, clean}}, 1, "clean");
  attempt({{200, "```json\n" + clean + "\n```"}}, 1, "fenced");
  attempt({{200, "The query looks right to me."}, {200, clean}}, 2, "prose then retry");

  {
    fixtures::FakeEndpoint ep;
    ep.script({{500, "x"}, {500, "x"}, {500, "x"}});
    judge::RemoteJudgeConfig cfg;
    cfg.endpoint = ep.url();
    cfg.api_key = "k";
    cfg.backoff = std::chrono::milliseconds(1);
    judge::RemoteJudge j(cfg);
    bool transport = false;
    try {
      j.evaluate(bundle, &record);
    } catch (const judge::TransportError& e) {
      transport = e.status() == 500;
    } catch (...) {
    }
    c.expect(transport, "3x500 did not raise TransportError");
    c.expect(ep.requests().size() == 3, "3x500 request count");
  }

  for (auto v : kVerdicts) {
    for (double g : {0.0, 0.65, 0.85, 1.0}) {
      JudgeOutput o{v, g, "r", std::nullopt, {}};
      c.expect(judge::parse_judge_output(judge::serialize(o)) == o,
               "identity " + str(verdict_name(v)) + " " + std::to_string(g));
    }
  }
  c.detail = "clean, fenced, retry, 3x500, 16 identity cases";
}

pipeline::Outcome scored(double phi) {
  pipeline::Outcome o;
  o.report.emplace();
  o.report->score.phi = phi;
  return o;
}

pipeline::Outcome failed() {
  pipeline::Outcome o;
  o.error_kind = "JudgeUnavailable";
  return o;
}

// 9. Summary arithmetic on hand-computable batches.
void summary_arithmetic(Check& c) {
  auto two = pipeline::summarize({scored(100), scored(40)});
  c.expect(two.mean_phi == 70.0, "{100, 40} mean " + std::to_string(two.mean_phi));
  c.expect(two.p90_phi == 100.0, "{100, 40} p90");
  c.expect(two.coverage == 1.0, "{100, 40} coverage");

  auto flat = pipeline::summarize({scored(100), scored(100), scored(100)});
  c.expect(flat.mean_phi == 100.0 && flat.p90_phi == 100.0 && flat.coverage == 1.0, "constant batch");

  auto partial = pipeline::summarize({scored(100), scored(80), scored(40), failed()});
  c.expect(partial.coverage == 0.75, "coverage with one failure");
  c.expect(partial.mean_phi == 73.33, "mean over scored " + std::to_string(partial.mean_phi));
  c.expect(partial.total == 4 && partial.scored == 3 && partial.errors == 1, "counts");

  std::mt19937 rng(99);
  std::uniform_int_distribution<int> len(1, 60), val(0, 10000);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> xs(len(rng));
    for (auto& x : xs) x = val(rng) / 100.0;
    auto sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    std::size_t n = sorted.size();
    std::size_t rank = (9 * n + 9) / 10;  // ceil(0.9 n) for integer n
    c.expect(pipeline::percentile_nearest_rank(xs, 90) == sorted[rank - 1], "p90 draw " + std::to_string(i));
    std::vector<pipeline::Outcome> batch;
    for (double x : xs) batch.push_back(scored(x));
    c.expect(pipeline::summarize(batch).p90_phi == sorted[rank - 1], "summary p90 draw " + std::to_string(i));
  }
  c.detail = "{100, 40} -> mean " + num(two.mean_phi);
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
      {"AC1 scoring lattice matches oracle", scoring_lattice},
      {"AC2 confidence multiplier boundaries", confidence_boundaries},
      {"AC3 normalization rule suite", normalization_rules},
      {"AC4 filter status partition", filter_partition},
      {"AC5 leniency recovery", leniency_recovery},
      {"AC6 parser round trip", parser_round_trip},
      {"AC7 determinism and isolation", determinism},
      {"AC8 judge contract", judge_contract},
      {"AC9 batch summary arithmetic", summary_arithmetic},
  };
  int failed_count = 0;
  for (const auto& [name, fn] : criteria) {
    Check c;
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    bool ok = c.failures.empty();
    if (!ok) ++failed_count;
    std::cout << (ok ? "PASS " : "FAIL ") << name;
    if (!c.detail.empty()) std::cout << " (" << c.detail << ")";
    std::cout << '\n';
    for (std::size_t i = 0; i < c.failures.size() && i < 5; ++i) std::cout << "    " << c.failures[i] << '\n';
    if (c.failures.size() > 5) std::cout << "    ... " << c.failures.size() - 5 << " more\n";
  }
  std::cout << (criteria.size() - failed_count) << "/" << criteria.size() << " criteria passed\n";
  return failed_count == 0 ? 0 : 1;
}
