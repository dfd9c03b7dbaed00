#include "stef/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>

#include <CLI11.hpp>

#include "stef/json_io.hpp"

namespace stef::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string input;
  std::string output;
  std::string rules;
  std::string tmpl;
  std::string judge = "stub";
  std::string endpoint;
  std::string model = "default";
  unsigned parallelism = 1;
  std::optional<std::uint64_t> lambda_min;
  std::string summary;
  std::string cues;
  std::string profiles_dir;
  int timeout_ms = 30000;
  bool stub_fallback = false;
  bool no_timings = false;
};

// One parsed input line: either an instance or the reason it is unusable.
struct InputRecord {
  std::size_t line = 0;
  std::optional<EvalInstance> instance;
  std::string id;
  std::string error_kind;
  std::string error;
};

std::string id_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  return v.dump();
}

class ProfileCache {
 public:
  ProfileCache(AppRules base, std::string dir) : base_(std::move(base)), dir_(std::move(dir)) {}

  const AppRules& get(const std::optional<std::string>& name) {
    if (!name) return base_;
    auto it = cache_.find(*name);
    if (it != cache_.end()) return it->second;
    if (dir_.empty()) throw ConfigError("rules_profile '" + *name + "' given but no --profiles-dir");
    if (name->find('/') != std::string::npos || name->find("..") != std::string::npos) {
      throw ConfigError("rules_profile '" + *name + "' is not a plain profile name");
    }
    fs::path p = fs::path(dir_) / (*name + ".json");
    return cache_.emplace(*name, io::load_rules(p)).first->second;
  }

 private:
  AppRules base_;
  std::string dir_;
  std::map<std::string, AppRules> cache_;
};

InputRecord read_record(const std::string& text, std::size_t line, ProfileCache& profiles) {
  InputRecord rec;
  rec.line = line;
  rec.id = "line-" + std::to_string(line);
  try {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw InputFormatError(line, "not valid JSON");
    if (!j.is_object()) throw InputFormatError(line, "record is not a JSON object");
    if (j.contains("id") && !j["id"].is_null()) rec.id = id_text(j["id"]);
    auto required_string = [&](const char* key) {
      if (!j.contains(key) || !j[key].is_string()) {
        throw InputFormatError(line, std::string("missing string field '") + key + "'");
      }
      return j[key].get<std::string>();
    };
    EvalInstance inst;
    inst.id = rec.id;
    inst.user_question = required_string("question");
    inst.sql = required_string("sql");
    if (j.contains("enriched_question") && !j["enriched_question"].is_null()) {
      if (!j["enriched_question"].is_string()) {
        throw InputFormatError(line, "enriched_question must be a string");
      }
      inst.enriched_question = j["enriched_question"].get<std::string>();
    }
    std::optional<std::string> profile;
    if (j.contains("rules_profile") && !j["rules_profile"].is_null()) {
      if (!j["rules_profile"].is_string()) throw InputFormatError(line, "rules_profile must be a string");
      profile = j["rules_profile"].get<std::string>();
    }
    inst.rules = profiles.get(profile);
    rec.instance = std::move(inst);
  } catch (const InputFormatError& e) {
    rec.error_kind = "InputFormatError";
    rec.error = e.what();
  } catch (const io::RuleParseError& e) {
    rec.error_kind = "RuleParseError";
    rec.error = e.what();
  } catch (const ConfigError& e) {
    rec.error_kind = "ConfigError";
    rec.error = e.what();
  }
  return rec;
}

std::string default_output(const std::string& input) {
  fs::path p(input);
  return (p.parent_path() / (p.stem().string() + ".scored.jsonl")).string();
}

std::string default_summary(const std::string& output) {
  fs::path p(output);
  std::string stem = p.stem().string();
  if (stem.ends_with(".scored")) stem.resize(stem.size() - 7);
  return (p.parent_path() / (stem + ".summary.json")).string();
}

int run_eval(const Options& opt, std::ostream& out) {
  AppRules rules = opt.rules.empty() ? AppRules{} : io::load_rules(opt.rules);

  pipeline::PipelineConfig cfg;
  if (!opt.tmpl.empty()) cfg.prompt = judge::PromptTemplate::load(opt.tmpl);
  if (!opt.cues.empty()) cfg.cues = question::CueTable::load(opt.cues);
  if (opt.lambda_min) {
    if (*opt.lambda_min < 1) throw ConfigError("--lambda-min must be at least 1");
    cfg.lambda_min_override = opt.lambda_min;
  }
  cfg.stub_fallback = opt.stub_fallback;
  if (opt.parallelism < 1) throw ConfigError("--parallelism must be at least 1");

  std::unique_ptr<judge::Judge> judge;
  if (opt.judge == "stub") {
    judge = std::make_unique<judge::StubJudge>();
  } else {
    if (opt.endpoint.empty()) throw ConfigError("--judge remote needs --endpoint");
    const char* key = std::getenv("STEF_JUDGE_API_KEY");
    if (!key || !*key) throw ConfigError("--judge remote needs STEF_JUDGE_API_KEY in the environment");
    judge::RemoteJudgeConfig rc;
    rc.endpoint = opt.endpoint;
    rc.api_key = key;
    rc.model = opt.model;
    rc.timeout = std::chrono::milliseconds(opt.timeout_ms);
    rc.max_in_flight = static_cast<int>(std::min(opt.parallelism, 1024u));
    judge = std::make_unique<judge::RemoteJudge>(rc);
  }

  std::ifstream in(opt.input);
  if (!in) throw ConfigError("cannot open input " + opt.input);
  ProfileCache profiles(rules, opt.profiles_dir);
  std::vector<InputRecord> records;
  std::string text;
  for (std::size_t line = 1; std::getline(in, text); ++line) {
    if (trim(text).empty()) continue;
    records.push_back(read_record(text, line, profiles));
  }

  std::vector<EvalInstance> instances;
  for (const auto& r : records) {
    if (r.instance) instances.push_back(*r.instance);
  }
  auto results = pipeline::evaluate_batch(instances, cfg, *judge, opt.parallelism);

  std::vector<pipeline::Outcome> outcomes;
  std::string output = opt.output.empty() ? default_output(opt.input) : opt.output;
  std::ofstream os(output);
  if (!os) throw ConfigError("cannot write " + output);
  std::size_t k = 0;
  for (const auto& r : records) {
    pipeline::Outcome o;
    if (r.instance) {
      o = std::move(results[k++]);
    } else {
      o.id = r.id;
      o.error_kind = r.error_kind;
      o.error = r.error;
    }
    os << outcome_to_json(o, r.line, !opt.no_timings).dump() << '\n';
    outcomes.push_back(std::move(o));
  }

  auto summary = pipeline::summarize(outcomes);
  json sj = summary_to_json(summary);
  sj["output"] = output;
  std::string summary_path = opt.summary.empty() ? default_summary(output) : opt.summary;
  std::ofstream ss(summary_path);
  if (!ss) throw ConfigError("cannot write " + summary_path);
  ss << sj.dump(2) << '\n';
  out << sj.dump(2) << '\n';
  return summary.errors == 0 ? 0 : 2;
}

}  // namespace

json report_to_json(const pipeline::EvaluationReport& r, bool with_timings) {
  json j{{"id", r.id},
         {"mode", pipeline::mode_name(r.mode)},
         {"template_id", r.template_id},
         {"question_spec", io::to_json(r.question_spec)},
         {"sql_spec", r.sql_spec ? io::to_json(*r.sql_spec) : json(nullptr)},
         {"alignment", r.alignment ? io::to_json(*r.alignment) : json(nullptr)},
         {"judge", io::to_json(r.judge)},
         {"score", io::to_json(r.score)}};
  j["judge"]["name"] = r.judge_name;
  if (r.judge_only_reason) j["judge_only_reason"] = *r.judge_only_reason;
  if (r.disagreement) j["disagreement"] = *r.disagreement;
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  if (with_timings) {
    json t = json::object();
    for (const auto& s : r.timings) t[s.stage] = s.ms;
    j["timings_ms"] = std::move(t);
  }
  return j;
}

json outcome_to_json(const pipeline::Outcome& o, std::size_t line, bool with_timings) {
  if (o.report) {
    return {{"line", line}, {"id", o.id}, {"ok", true}, {"report", report_to_json(*o.report, with_timings)}};
  }
  return {{"line", line},
          {"id", o.id},
          {"ok", false},
          {"error", {{"kind", o.error_kind}, {"message", o.error}}}};
}

json summary_to_json(const pipeline::BatchSummary& s) {
  return {{"total", s.total},       {"scored", s.scored},         {"errors", s.errors},
          {"coverage", s.coverage}, {"mean_phi", s.mean_phi},     {"p90_phi", s.p90_phi},
          {"tiers", s.tiers},       {"statuses", s.statuses},     {"verdicts", s.verdicts},
          {"modes", s.modes},       {"error_kinds", s.error_kinds}};
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Schema-free evaluation of generated SQL against the question it answers", "stef"};
  app.require_subcommand(1);
  Options opt;
  auto* eval = app.add_subcommand("eval", "Score a file of line-delimited instances");
  eval->add_option("--input", opt.input, "Instances, one JSON object per line")->required();
  eval->add_option("--output", opt.output, "Scored records (default <input>.scored.jsonl)");
  eval->add_option("--rules", opt.rules, "Rule profile (JSON)");
  eval->add_option("--template", opt.tmpl, "Prompt template file");
  eval->add_option("--judge", opt.judge, "stub or remote")->check(CLI::IsMember({"stub", "remote"}));
  eval->add_option("--endpoint", opt.endpoint, "Judge endpoint URL");
  eval->add_option("--model", opt.model, "Model name sent to the endpoint");
  eval->add_option("--timeout-ms", opt.timeout_ms, "Per-request judge timeout")->check(CLI::PositiveNumber);
  eval->add_option("--parallelism", opt.parallelism, "Worker threads");
  eval->add_option("--lambda-min", opt.lambda_min, "Smallest LIMIT treated as a safety default");
  eval->add_option("--summary", opt.summary, "Summary file (default <input>.summary.json)");
  eval->add_option("--cues", opt.cues, "Question cue table");
  eval->add_option("--profiles-dir", opt.profiles_dir, "Directory of per-record rule profiles");
  eval->add_flag("--stub-fallback", opt.stub_fallback, "Use the stub verdict when the judge fails");
  eval->add_flag("--no-timings", opt.no_timings, "Omit stage timings from the output");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "stef: " << e.what() << '\n';
    return 1;
  }

  try {
    return run_eval(opt, out);
  } catch (const ConfigError& e) {
    err << "stef: configuration error: " << e.what() << '\n';
  } catch (const io::RuleParseError& e) {
    err << "stef: " << e.what() << '\n';
  } catch (const judge::TemplateError& e) {
    err << "stef: template: " << e.what() << '\n';
  } catch (const question::CueTableError& e) {
    err << "stef: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "stef: " << e.what() << '\n';
  }
  return 1;
}

}  // namespace stef::cli
