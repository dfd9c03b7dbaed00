#include "stef/question.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "stef/embedded.hpp"

namespace stef::question {

namespace {

const std::map<std::string_view, CueAction> kActions{
    {"agg", CueAction::kAgg},          {"agg_single", CueAction::kAggSingle},
    {"group", CueAction::kGroup},      {"group_soft", CueAction::kGroupSoft},
    {"order", CueAction::kOrder},      {"topk", CueAction::kTopK},
    {"filter", CueAction::kFilter},    {"dim", CueAction::kDim},
    {"value", CueAction::kValue},      {"distinct", CueAction::kDistinct},
    {"compare", CueAction::kCompare},  {"equals", CueAction::kEquals},
};

const std::set<std::string_view> kStopwords{
    "a",     "an",    "the",   "of",    "and",   "or",    "to",    "from",  "on",    "at",
    "as",    "is",    "are",   "was",   "were",  "be",    "been",  "what",  "which", "who",
    "whom",  "whose", "how",   "me",    "us",    "our",   "my",    "their", "its",   "this",
    "that",  "these", "those", "show",  "list",  "give",  "get",   "find",  "display",
    "return", "tell", "please", "all",  "did",   "does",  "do",    "has",   "have",  "had",
    "there", "than",  "then",  "so",    "can",   "could", "would", "should", "i",    "we",
    "you",   "it",    "they",  "them",  "about", "across", "between", "into",
    // Common verbs end a noun phrase ("customers placed orders").
    "placed", "made", "bought", "purchased", "spent", "sold", "generated", "earned",
    "received", "created", "signed", "joined", "visited", "used", "paid", "shipped",
    "returned", "booked", "ordered", "registered", "logged",
};

const std::map<std::string_view, int> kNumberWords{
    {"one", 1},     {"two", 2},       {"three", 3},    {"four", 4},     {"five", 5},
    {"six", 6},     {"seven", 7},     {"eight", 8},    {"nine", 9},     {"ten", 10},
    {"eleven", 11}, {"twelve", 12},   {"fifteen", 15}, {"twenty", 20},  {"twenty-five", 25},
    {"thirty", 30}, {"fifty", 50},    {"hundred", 100},
};

enum class WordKind { kWord, kNumber, kQuoted, kPunct };

struct Word {
  WordKind kind = WordKind::kWord;
  std::string text;   // as written (quotes stripped)
  std::string lower;
  bool capitalized = false;
};

std::vector<Word> split_words(std::string_view text) {
  std::vector<Word> out;
  std::size_t i = 0;
  auto push = [&](WordKind kind, std::string t) {
    Word w;
    w.kind = kind;
    w.lower = to_lower(t);
    w.capitalized = !t.empty() && std::isupper(static_cast<unsigned char>(t.front()));
    w.text = std::move(t);
    out.push_back(std::move(w));
  };
  while (i < text.size()) {
    auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (c == '\'' || c == '"') {
      // A quote opens a quoted value only at a word start and when it closes.
      auto end = text.find(static_cast<char>(c), i + 1);
      if (end != std::string_view::npos) {
        push(WordKind::kQuoted, std::string(text.substr(i + 1, end - i - 1)));
        i = end + 1;
        continue;
      }
      ++i;
      continue;
    }
    if (std::isdigit(c)) {
      std::size_t start = i;
      while (i < text.size() &&
             (std::isdigit(static_cast<unsigned char>(text[i])) || text[i] == '.' || text[i] == ',')) {
        ++i;
      }
      std::string num(text.substr(start, i - start));
      while (!num.empty() && (num.back() == '.' || num.back() == ',')) num.pop_back();
      num.erase(std::remove(num.begin(), num.end(), ','), num.end());
      // "10k" and similar stay plain numbers; the suffix is dropped with the word.
      push(WordKind::kNumber, num);
      while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) ++i;
      continue;
    }
    if (std::isalpha(c) || c >= 0x80 || c == '_') {
      std::size_t start = i;
      while (i < text.size()) {
        auto d = static_cast<unsigned char>(text[i]);
        if (std::isalnum(d) || d >= 0x80 || d == '_' || d == '-') {
          ++i;
        } else if (d == '\'' && i + 1 < text.size() &&
                   std::isalpha(static_cast<unsigned char>(text[i + 1]))) {
          ++i;  // possessive or contraction
        } else {
          break;
        }
      }
      std::string word(text.substr(start, i - start));
      if (word.size() > 2 && word.compare(word.size() - 2, 2, "'s") == 0) word.resize(word.size() - 2);
      push(WordKind::kWord, word);
      continue;
    }
    if (c == '=' || c == '>' || c == '<') {
      std::size_t start = i;
      while (i < text.size() && (text[i] == '=' || text[i] == '>' || text[i] == '<')) ++i;
      push(WordKind::kWord, std::string(text.substr(start, i - start)));
      continue;
    }
    push(WordKind::kPunct, std::string(1, static_cast<char>(c)));
    ++i;
  }
  return out;
}

bool is_year(const Word& w) {
  if (w.kind != WordKind::kNumber || w.text.size() != 4) return false;
  return w.text.starts_with("19") || w.text.starts_with("20");
}

std::optional<int> quarter_of(const Word& w) {
  if (w.kind != WordKind::kWord || w.lower.size() != 2 || w.lower[0] != 'q') return std::nullopt;
  if (w.lower[1] < '1' || w.lower[1] > '4') return std::nullopt;
  return w.lower[1] - '0';
}

std::optional<int> number_of(const Word& w) {
  if (w.kind == WordKind::kNumber) {
    if (w.text.find('.') != std::string::npos || w.text.size() > 9) return std::nullopt;
    return std::stoi(w.text);
  }
  if (w.kind == WordKind::kWord) {
    auto it = kNumberWords.find(w.lower);
    if (it != kNumberWords.end()) return it->second;
  }
  return std::nullopt;
}

std::string singular(const std::string& w) {
  if (w.size() > 4 && w.ends_with("ies")) return w.substr(0, w.size() - 3) + "y";
  if (w.size() > 3 && w.ends_with("s") && !w.ends_with("ss") && !w.ends_with("us")) {
    return w.substr(0, w.size() - 1);
  }
  return w;
}

struct Match {
  const Cue* cue = nullptr;
  std::size_t length = 0;
};

class Extractor {
 public:
  Extractor(std::string_view text, const AppRules& rules, const CueTable& cues)
      : words_(split_words(text)), rules_(rules), cues_(cues) {}

  QuestionSpec run();

 private:
  std::optional<Match> cue_at(std::size_t i) const;
  bool is_cue(std::size_t i) const { return cue_at(i).has_value(); }
  bool at_action(std::size_t i, CueAction a) const {
    auto m = cue_at(i);
    return m && m->cue->action == a;
  }
  bool noun_word(std::size_t i) const;
  std::size_t skip_fillers(std::size_t i) const;
  /// Reads up to three content words starting at i; returns the joined name.
  std::optional<std::string> noun_phrase(std::size_t& i) const;
  std::vector<std::string> noun_list(std::size_t& i) const;
  std::string column(const std::string& phrase) const;

  void on_agg(const Cue& cue, std::size_t& i);
  void on_filter(std::size_t& i);
  void add_filter(const std::string& col, FilterOp op, Value v) {
    spec_.filters.push_back(FilterTriple::make(col, op, {std::move(v)}));
  }
  void add_group(const std::string& col) { spec_.group_by.push_back(col); }

  std::vector<Word> words_;
  const AppRules& rules_;
  const CueTable& cues_;
  QuestionSpec spec_;
  struct Single {
    AggFunc func;
    std::string col;
  };
  std::vector<Single> singles_;
  bool grouping_cue_ = false;
  bool ranking_context_ = false;  // an order or top-k cue precedes in this clause
  std::optional<std::string> last_noun_;
};

std::optional<Match> Extractor::cue_at(std::size_t i) const {
  for (const auto& cue : cues_.cues()) {
    if (i + cue.words.size() > words_.size()) continue;
    bool ok = true;
    for (std::size_t k = 0; k < cue.words.size() && ok; ++k) {
      const Word& w = words_[i + k];
      ok = (w.kind == WordKind::kWord || w.kind == WordKind::kNumber) && w.lower == cue.words[k];
    }
    if (ok) return Match{&cue, cue.words.size()};
  }
  return std::nullopt;
}

bool Extractor::noun_word(std::size_t i) const {
  if (i >= words_.size()) return false;
  const Word& w = words_[i];
  if (w.kind != WordKind::kWord) return false;
  if (kStopwords.count(w.lower) || kNumberWords.count(w.lower) || quarter_of(w)) return false;
  auto m = cue_at(i);
  return !m || m->cue->action == CueAction::kDim;
}

std::size_t Extractor::skip_fillers(std::size_t i) const {
  while (i < words_.size() && words_[i].kind == WordKind::kWord &&
         (words_[i].lower == "the" || words_[i].lower == "a" || words_[i].lower == "an" ||
          words_[i].lower == "of" || words_[i].lower == "all")) {
    ++i;
  }
  return i;
}

std::optional<std::string> Extractor::noun_phrase(std::size_t& i) const {
  std::size_t j = skip_fillers(i);
  std::string out;
  std::size_t n = 0;
  while (n < 3 && noun_word(j)) {
    if (n) out += "_";
    out += words_[j].lower;
    ++j;
    ++n;
  }
  if (!n) return std::nullopt;
  i = j;
  return out;
}

std::vector<std::string> Extractor::noun_list(std::size_t& i) const {
  std::vector<std::string> out;
  for (;;) {
    std::size_t j = i;
    auto np = noun_phrase(j);
    if (!np) break;
    out.push_back(*np);
    i = j;
    if (i < words_.size() &&
        ((words_[i].kind == WordKind::kWord && words_[i].lower == "and") ||
         (words_[i].kind == WordKind::kPunct && words_[i].text == ","))) {
      std::size_t k = i + 1;
      if (k < words_.size() && words_[k].kind == WordKind::kWord && words_[k].lower == "and") ++k;
      if (noun_word(skip_fillers(k))) {
        i = k;
        continue;
      }
    }
    break;
  }
  return out;
}

std::string Extractor::column(const std::string& phrase) const {
  std::string folded = fold_identifier(phrase);
  if (rules_.column_mappings.count(folded)) return rules_.map_column(folded);
  std::string single = singular(folded);
  if (rules_.column_mappings.count(single)) return rules_.map_column(single);
  return folded;
}

void Extractor::on_agg(const Cue& cue, std::size_t& i) {
  bool distinct = cue.arg == "COUNT_DISTINCT";
  AggFunc func = distinct ? AggFunc::kCount : *agg_from_name(cue.arg);
  if (func == AggFunc::kCount && at_action(skip_fillers(i), CueAction::kDistinct)) {
    i = skip_fillers(i) + 1;
    distinct = true;
  }
  std::size_t j = i;
  auto np = noun_phrase(j);
  if (func == AggFunc::kCount && !distinct) {
    // A plain count counts rows: COUNT(*), whatever noun follows.
    if (np) i = j;
    spec_.aggregations.push_back(AggregationSpec::make(AggFunc::kCount, kStar));
    return;
  }
  if (!np) return;
  i = j;
  spec_.aggregations.push_back(AggregationSpec::make(func, column(*np), distinct));
  last_noun_ = column(*np);
}

void Extractor::on_filter(std::size_t& i) {
  std::size_t j = skip_fillers(i);
  if (j >= words_.size()) return;
  const Word& w = words_[j];
  // Years, quarters and known values are picked up by the main loop.
  if (is_year(w) || quarter_of(w) || at_action(j, CueAction::kValue)) {
    i = j;
    return;
  }
  // "<column> is <value>"
  std::size_t k = j;
  if (auto np = noun_phrase(k)) {
    if (k < words_.size() &&
        (at_action(k, CueAction::kEquals) || words_[k].text == "=" || words_[k].text == "==")) {
      std::size_t v = k + (at_action(k, CueAction::kEquals) ? cue_at(k)->length : 1);
      v = skip_fillers(v);
      if (v < words_.size() && words_[v].kind != WordKind::kPunct) {
        const Word& val = words_[v];
        Value value = val.kind == WordKind::kNumber ? Value::number(val.text)
                                                    : Value::string(to_lower(trim(val.text)));
        add_filter(column(*np), FilterOp::kEq, value);
        i = v + 1;
        return;
      }
    }
    // "<dim> <value>", e.g. "with status Active"
    if (at_action(j, CueAction::kDim) && k == j + 1 && k < words_.size() &&
        (words_[k].kind == WordKind::kQuoted ||
         (words_[k].kind == WordKind::kWord && words_[k].capitalized && !is_cue(k)))) {
      add_filter(column(words_[j].lower), FilterOp::kEq, Value::string(to_lower(words_[k].text)));
      i = k + 1;
      return;
    }
  }
  // A named value: quoted text or a run of capitalized words, optionally
  // followed by the dimension it belongs to ("the Western region").
  std::size_t v = j;
  std::string value;
  if (words_[v].kind == WordKind::kQuoted) {
    value = words_[v].text;
    ++v;
  } else {
    while (v < words_.size() && words_[v].kind == WordKind::kWord && words_[v].capitalized &&
           !kStopwords.count(words_[v].lower) && (!is_cue(v) || at_action(v, CueAction::kDim))) {
      if (!value.empty()) value += " ";
      value += words_[v].text;
      ++v;
    }
  }
  if (value.empty()) return;
  if (at_action(v, CueAction::kDim)) {
    add_filter(column(words_[v].lower), FilterOp::kEq, Value::string(to_lower(trim(value))));
    i = v + 1;
    return;
  }
  spec_.unresolved.push_back(value);
  i = v;
}

QuestionSpec Extractor::run() {
  std::size_t i = 0;
  while (i < words_.size()) {
    const Word& w = words_[i];
    if (w.kind == WordKind::kPunct) {
      if (w.text != ",") ranking_context_ = false;
      ++i;
      continue;
    }
    if (is_year(w)) {
      add_filter("year", FilterOp::kEq, Value::number(w.text));
      ++i;
      continue;
    }
    if (auto q = quarter_of(w)) {
      add_filter("quarter", FilterOp::kEq, Value::number(std::to_string(*q)));
      ++i;
      continue;
    }
    auto m = cue_at(i);
    if (!m) {
      std::size_t j = i;
      if (auto np = noun_phrase(j)) {
        last_noun_ = column(*np);
        i = j;
      } else {
        ++i;
      }
      continue;
    }
    const Cue& cue = *m->cue;
    i += m->length;
    switch (cue.action) {
      case CueAction::kAgg:
        on_agg(cue, i);
        break;
      case CueAction::kAggSingle: {
        std::size_t j = i;
        if (auto np = noun_phrase(j)) {
          singles_.push_back({*agg_from_name(cue.arg), column(*np)});
          i = j;
        } else {
          singles_.push_back({*agg_from_name(cue.arg), {}});
        }
        break;
      }
      case CueAction::kGroup:
      case CueAction::kGroupSoft: {
        auto dims = noun_list(i);
        if (cue.action == CueAction::kGroupSoft && ranking_context_) break;  // ranking metric
        for (const auto& d : dims) add_group(column(d));
        if (!dims.empty()) grouping_cue_ = true;
        break;
      }
      case CueAction::kOrder: {
        spec_.explicit_order = true;
        ranking_context_ = true;
        break;
      }
      case CueAction::kTopK: {
        if (i < words_.size()) {
          if (auto k = number_of(words_[i]); k && *k > 0 && !is_year(words_[i])) {
            spec_.topk_request = *k;
            spec_.explicit_order = true;
            ranking_context_ = true;
            ++i;
            noun_phrase(i);  // the ranked entity
          }
        }
        break;
      }
      case CueAction::kFilter:
        ranking_context_ = false;
        on_filter(i);
        break;
      case CueAction::kDim:
        last_noun_ = column(cue.words.front());
        break;
      case CueAction::kValue: {
        std::string value;
        for (std::size_t k = i - m->length; k < i; ++k) {
          if (!value.empty()) value += " ";
          value += words_[k].lower;
        }
        add_filter(column(cue.arg), FilterOp::kEq, Value::string(value));
        if (at_action(i, CueAction::kDim)) ++i;  // "the APAC region"
        break;
      }
      case CueAction::kDistinct: {
        std::size_t j = i;
        auto np = noun_phrase(j);
        auto after = cue_at(j);
        if (np && after && after->cue->action == CueAction::kAgg && after->cue->arg == "COUNT") {
          spec_.aggregations.push_back(AggregationSpec::make(AggFunc::kCount, column(*np), true));
          i = j + after->length;
        }
        break;
      }
      case CueAction::kCompare: {
        if (i < words_.size() && words_[i].kind == WordKind::kNumber && last_noun_) {
          auto op = op_from_name(cue.arg);
          if (op) add_filter(*last_noun_, *op, Value::number(words_[i].text));
          ++i;
        }
        break;
      }
      case CueAction::kEquals:
        break;
    }
  }

  bool asks_which = std::any_of(words_.begin(), words_.end(), [](const Word& w) {
    return w.kind == WordKind::kWord && (w.lower == "which" || w.lower == "who");
  });
  for (const auto& s : singles_) {
    if (grouping_cue_ || asks_which || s.col.empty()) {
      spec_.explicit_order = true;
    } else {
      spec_.aggregations.push_back(AggregationSpec::make(s.func, s.col));
    }
  }

  for (const auto& a : spec_.aggregations) spec_.outputs.push_back(a.to_string());
  for (const auto& g : spec_.group_by) spec_.outputs.push_back(g);
  spec_.canonicalize();
  if (spec_.topk_request && !spec_.explicit_order && spec_.aggregations.empty()) {
    spec_.topk_request.reset();
  }
  return spec_;
}

std::string filter_text(const std::vector<FilterTriple>& fs) {
  std::string out;
  for (const auto& f : fs) {
    if (!out.empty()) out += " and ";
    out += f.to_sql();
  }
  return out;
}

}  // namespace

std::string_view action_name(CueAction a) {
  for (const auto& [name, action] : kActions) {
    if (action == a) return name;
  }
  return "?";
}

CueTable CueTable::parse(std::string_view text) {
  CueTable table;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto arrow = t.find("=>");
    if (arrow == std::string::npos) throw CueTableError("expected 'phrase => action'", line_no);
    std::string phrase = to_lower(trim(t.substr(0, arrow)));
    std::istringstream rhs(t.substr(arrow + 2));
    std::string action, arg, extra;
    rhs >> action >> arg >> extra;
    if (phrase.empty()) throw CueTableError("empty phrase", line_no);
    auto it = kActions.find(action);
    if (it == kActions.end()) throw CueTableError("unknown action '" + action + "'", line_no);
    if (!extra.empty()) throw CueTableError("trailing text after argument", line_no);

    Cue cue;
    cue.action = it->second;
    cue.arg = arg;
    std::istringstream words(phrase);
    for (std::string w; words >> w;) cue.words.push_back(w);

    auto require = [&](std::initializer_list<std::string_view> allowed) {
      if (std::find(allowed.begin(), allowed.end(), arg) == allowed.end()) {
        throw CueTableError("bad argument '" + arg + "' for " + action, line_no);
      }
    };
    switch (cue.action) {
      case CueAction::kAgg: require({"SUM", "AVG", "COUNT", "COUNT_DISTINCT"}); break;
      case CueAction::kAggSingle: require({"MAX", "MIN"}); break;
      case CueAction::kCompare: require({"GT", "GTE", "LT", "LTE"}); break;
      case CueAction::kValue:
        if (arg.empty()) throw CueTableError("value needs a column", line_no);
        break;
      default:
        if (!arg.empty()) throw CueTableError(action + " takes no argument", line_no);
    }
    table.cues_.push_back(std::move(cue));
  }
  std::stable_sort(table.cues_.begin(), table.cues_.end(),
                   [](const Cue& a, const Cue& b) { return a.words.size() > b.words.size(); });
  return table;
}

CueTable CueTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CueTableError("cannot open " + path.string(), 0);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const CueTable& CueTable::builtin() {
  static const CueTable table = parse(embedded::kCueTable);
  return table;
}

QuestionSpec extract_text(std::string_view text, const AppRules& rules, const CueTable& cues) {
  return Extractor(text, rules, cues).run();
}

QuestionSpec extract_question_spec(std::string_view q_user, std::string_view q_enriched,
                                   const AppRules& rules, const CueTable& cues) {
  return merge_user_enriched(extract_text(q_user, rules, cues),
                             extract_text(q_enriched, rules, cues));
}

QuestionSpec merge_user_enriched(const QuestionSpec& user, const QuestionSpec& enriched) {
  QuestionSpec out;
  auto append = [](auto& dst, const auto& a, const auto& b) {
    dst = a;
    dst.insert(dst.end(), b.begin(), b.end());
  };
  append(out.outputs, user.outputs, enriched.outputs);
  append(out.aggregations, user.aggregations, enriched.aggregations);
  append(out.group_by, user.group_by, enriched.group_by);
  append(out.notes, user.notes, enriched.notes);
  append(out.unresolved, user.unresolved, enriched.unresolved);
  out.explicit_order = user.explicit_order || enriched.explicit_order;

  std::map<std::string, std::vector<FilterTriple>> by_lhs_user, by_lhs_enriched;
  for (const auto& f : user.filters) by_lhs_user[f.lhs].push_back(f);
  for (const auto& f : enriched.filters) by_lhs_enriched[f.lhs].push_back(f);
  out.filters = enriched.filters;
  for (auto& [lhs, fs] : by_lhs_user) {
    auto it = by_lhs_enriched.find(lhs);
    if (it == by_lhs_enriched.end()) {
      out.filters.insert(out.filters.end(), fs.begin(), fs.end());
      continue;
    }
    std::sort(fs.begin(), fs.end());
    std::vector<FilterTriple> theirs = it->second;
    std::sort(theirs.begin(), theirs.end());
    theirs.erase(std::unique(theirs.begin(), theirs.end()), theirs.end());
    fs.erase(std::unique(fs.begin(), fs.end()), fs.end());
    if (fs != theirs) {
      out.notes.push_back("conflict on " + lhs + ": enriched question (" + filter_text(theirs) +
                          ") overrides user question (" + filter_text(fs) + ")");
    }
  }

  if (user.topk_request && enriched.topk_request && *user.topk_request != *enriched.topk_request) {
    out.notes.push_back("conflict on top-k: enriched question asks for " +
                        std::to_string(*enriched.topk_request) + ", user question for " +
                        std::to_string(*user.topk_request));
  }
  out.topk_request = enriched.topk_request ? enriched.topk_request : user.topk_request;
  out.canonicalize();
  return out;
}

}  // namespace stef::question
