#include <algorithm>
#include <cctype>
#include <memory>
#include <set>
#include <utility>

#include "stef/sql.hpp"

namespace stef::sql {

namespace {

// ---------------------------------------------------------------------------
// Expression tree
// ---------------------------------------------------------------------------

enum class ExprKind {
  kColumn,
  kLiteral,
  kNull,
  kStar,
  kFunc,
  kBinary,
  kUnary,
  kIsNull,
  kInList,
  kBetween,
  kCase,
  kCast,
  kExtract,
  kTyped,
};

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
  ExprKind kind;
  std::string name;       // column, function, operator, cast type, extract field, type tag
  std::string qualifier;  // column / star qualifier
  Value literal;
  bool distinct = false;
  bool negated = false;
  bool has_operand = false;  // CASE x WHEN ...
  bool has_else = false;
  std::vector<ExprPtr> args;

  explicit Expr(ExprKind k) : kind(k) {}
};

ExprPtr make_expr(ExprKind k) { return std::make_unique<Expr>(k); }

const std::set<std::string, std::less<>> kAggregateLike{
    "sum",         "avg",           "count",      "min",         "max",
    "stddev",      "stddev_pop",    "stddev_samp", "variance",   "var_pop",
    "var_samp",    "string_agg",    "array_agg",  "bool_and",    "bool_or",
    "every",       "median",        "percentile_cont", "percentile_disc", "count_if",
    "approx_count_distinct", "listagg", "group_concat", "mode", "json_agg",
};

bool is_plain_ident(std::string_view s) {
  if (s.empty()) return false;
  auto c0 = static_cast<unsigned char>(s.front());
  if (!(std::isalpha(c0) || c0 == '_' || c0 >= 0x80)) return false;
  return std::all_of(s.begin(), s.end(), [](char ch) {
    auto c = static_cast<unsigned char>(ch);
    return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80;
  });
}

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

/// SQL spelling of a folded identifier, quoting keywords and odd names.
std::string ident_sql(std::string_view folded) {
  if (!folded.empty() && folded.front() == '"') return std::string(folded);
  if (is_plain_ident(folded) && !is_keyword(upper(folded))) return std::string(folded);
  return "\"" + std::string(folded) + "\"";
}

// Precedence levels used by the renderer; larger binds tighter.
int precedence(const Expr& e) {
  switch (e.kind) {
    case ExprKind::kBinary:
      if (e.name == "or") return 1;
      if (e.name == "and") return 2;
      if (e.name == "||") return 5;
      if (e.name == "+" || e.name == "-") return 6;
      if (e.name == "*" || e.name == "/" || e.name == "%") return 7;
      return 4;  // comparisons and LIKE
    case ExprKind::kUnary:
      return e.name == "not" ? 3 : 8;
    case ExprKind::kIsNull:
    case ExprKind::kInList:
    case ExprKind::kBetween:
      return 4;
    default:
      return 10;
  }
}

bool is_comparison(std::string_view op) {
  return op == "=" || op == "<>" || op == "<" || op == "<=" || op == ">" || op == ">=";
}

std::string render(const Expr& e, bool qualified = false);

std::string render_child(const Expr& child, int min_prec, bool qualified) {
  std::string s = render(child, qualified);
  if (precedence(child) < min_prec) return "(" + s + ")";
  return s;
}

std::string render(const Expr& e, bool qualified) {
  switch (e.kind) {
    case ExprKind::kColumn: {
      std::string name = ident_sql(e.name);
      if (qualified && !e.qualifier.empty()) return ident_sql(e.qualifier) + "." + name;
      return name;
    }
    case ExprKind::kLiteral:
      return e.literal.to_sql();
    case ExprKind::kNull:
      return "null";
    case ExprKind::kStar:
      if (qualified && !e.qualifier.empty()) return ident_sql(e.qualifier) + ".*";
      return "*";
    case ExprKind::kFunc: {
      std::string out = e.name + "(";
      if (e.distinct) out += "distinct ";
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) out += ", ";
        out += render(*e.args[i], qualified);
      }
      return out + ")";
    }
    case ExprKind::kBinary: {
      int p = precedence(e);
      bool assoc = e.name == "and" || e.name == "or";
      // Comparisons are non-associative; arithmetic is left-associative.
      int left_min = p == 4 ? p + 1 : p;
      int right_min = assoc ? p : p + 1;
      return render_child(*e.args[0], left_min, qualified) + " " + e.name + " " +
             render_child(*e.args[1], right_min, qualified);
    }
    case ExprKind::kUnary: {
      if (e.name == "not") return "not " + render_child(*e.args[0], 3, qualified);
      std::string inner = render_child(*e.args[0], 8, qualified);
      if (!inner.empty() && (inner.front() == '-' || inner.front() == '+')) {
        inner = "(" + inner + ")";
      }
      return e.name + inner;
    }
    case ExprKind::kIsNull:
      return render_child(*e.args[0], 5, qualified) + (e.negated ? " is not null" : " is null");
    case ExprKind::kInList: {
      std::string out = render_child(*e.args[0], 5, qualified) + (e.negated ? " not in (" : " in (");
      for (std::size_t i = 1; i < e.args.size(); ++i) {
        if (i > 1) out += ", ";
        out += render(*e.args[i], qualified);
      }
      return out + ")";
    }
    case ExprKind::kBetween:
      return render_child(*e.args[0], 5, qualified) +
             (e.negated ? " not between " : " between ") +
             render_child(*e.args[1], 5, qualified) + " and " +
             render_child(*e.args[2], 5, qualified);
    case ExprKind::kCase: {
      std::string out = "case";
      std::size_t i = 0;
      if (e.has_operand) out += " " + render(*e.args[i++], qualified);
      std::size_t end = e.args.size() - (e.has_else ? 1 : 0);
      for (; i + 1 < end; i += 2) {
        out += " when " + render(*e.args[i], qualified) + " then " +
               render(*e.args[i + 1], qualified);
      }
      if (e.has_else) out += " else " + render(*e.args.back(), qualified);
      return out + " end";
    }
    case ExprKind::kCast:
      return "cast(" + render(*e.args[0], qualified) + " as " + e.name + ")";
    case ExprKind::kExtract:
      return "extract(" + e.name + " from " + render(*e.args[0], qualified) + ")";
    case ExprKind::kTyped:
      return e.name + " " + Value::string(e.literal.text).to_sql();
  }
  return {};
}

bool contains_aggregate(const Expr& e) {
  if (e.kind == ExprKind::kFunc && kAggregateLike.count(e.name)) return true;
  return std::any_of(e.args.begin(), e.args.end(),
                     [](const ExprPtr& a) { return contains_aggregate(*a); });
}

bool references_columns(const Expr& e) {
  if (e.kind == ExprKind::kColumn || e.kind == ExprKind::kStar) return true;
  return std::any_of(e.args.begin(), e.args.end(),
                     [](const ExprPtr& a) { return references_columns(*a); });
}

/// The AggregationSpec of a single SUM/AVG/COUNT/MIN/MAX call.
std::optional<AggregationSpec> as_aggregation(const Expr& e) {
  if (e.kind != ExprKind::kFunc) return std::nullopt;
  auto func = agg_from_name(e.name);
  if (!func) return std::nullopt;
  std::string col;
  if (e.args.size() == 1 && e.args[0]->kind == ExprKind::kStar) {
    col = std::string(kStar);
  } else {
    for (std::size_t i = 0; i < e.args.size(); ++i) {
      if (i) col += ", ";
      col += render(*e.args[i]);
    }
  }
  return AggregationSpec::make(*func, col, e.distinct);
}

void collect_aggregations(const Expr& e, std::vector<AggregationSpec>& out) {
  if (auto agg = as_aggregation(e)) {
    out.push_back(*agg);
    return;
  }
  for (const auto& a : e.args) collect_aggregations(*a, out);
}

void flatten_and(ExprPtr e, std::vector<ExprPtr>& out) {
  if (e->kind == ExprKind::kBinary && e->name == "and") {
    flatten_and(std::move(e->args[0]), out);
    flatten_and(std::move(e->args[1]), out);
    return;
  }
  out.push_back(std::move(e));
}

FilterOp flip(FilterOp op) {
  switch (op) {
    case FilterOp::kLt: return FilterOp::kGt;
    case FilterOp::kLte: return FilterOp::kGte;
    case FilterOp::kGt: return FilterOp::kLt;
    case FilterOp::kGte: return FilterOp::kLte;
    default: return op;
  }
}

FilterOp comparison_op(std::string_view op) {
  if (op == "=") return FilterOp::kEq;
  if (op == "<>") return FilterOp::kNeq;
  if (op == "<") return FilterOp::kLt;
  if (op == "<=") return FilterOp::kLte;
  if (op == ">") return FilterOp::kGt;
  return FilterOp::kGte;
}

Value operand_value(const Expr& e) {
  if (e.kind == ExprKind::kLiteral) return e.literal;
  if (e.kind == ExprKind::kColumn) return Value::column(render(e));
  return Value::expression(render(e));
}

/// Decomposes one conjunct into a triple; anything else becomes COMPLEX.
FilterTriple to_filter(const Expr& c, bool having) {
  auto complex = [&] { return FilterTriple::complex(render(c), having); };
  if (having || contains_aggregate(c)) return complex();
  auto literal = [](const Expr& e) { return e.kind == ExprKind::kLiteral; };
  auto usable_lhs = [&](const Expr& e) {
    return !literal(e) && e.kind != ExprKind::kNull && references_columns(e);
  };

  if (c.kind == ExprKind::kBinary && is_comparison(c.name)) {
    const Expr* l = c.args[0].get();
    const Expr* r = c.args[1].get();
    FilterOp op = comparison_op(c.name);
    if (literal(*l) && !literal(*r)) {
      std::swap(l, r);
      op = flip(op);
    }
    if (!usable_lhs(*l) || r->kind == ExprKind::kNull) return complex();
    return FilterTriple::make(render(*l), op, {operand_value(*r)});
  }
  if (c.kind == ExprKind::kBinary && (c.name == "like" || c.name == "ilike")) {
    if (!usable_lhs(*c.args[0])) return complex();
    return FilterTriple::make(render(*c.args[0]), c.name == "like" ? FilterOp::kLike : FilterOp::kILike,
                              {operand_value(*c.args[1])});
  }
  if (c.kind == ExprKind::kIsNull && usable_lhs(*c.args[0])) {
    return FilterTriple::make(render(*c.args[0]), c.negated ? FilterOp::kIsNotNull : FilterOp::kIsNull,
                              {});
  }
  if (c.kind == ExprKind::kInList && !c.negated && usable_lhs(*c.args[0])) {
    std::vector<Value> values;
    for (std::size_t i = 1; i < c.args.size(); ++i) {
      if (!literal(*c.args[i])) return complex();
      values.push_back(c.args[i]->literal);
    }
    return FilterTriple::make(render(*c.args[0]), FilterOp::kIn, std::move(values));
  }
  if (c.kind == ExprKind::kBetween && !c.negated && usable_lhs(*c.args[0]) && literal(*c.args[1]) &&
      literal(*c.args[2])) {
    return FilterTriple::make(render(*c.args[0]), FilterOp::kBetween,
                              {c.args[1]->literal, c.args[2]->literal});
  }
  return complex();
}

std::uint64_t parse_count(const Token& t) {
  if (t.kind != TokenKind::kNumber ||
      !std::all_of(t.text.begin(), t.text.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    throw ParseError("expected a non-negative integer", t.position);
  }
  try {
    return std::stoull(t.text);
  } catch (const std::out_of_range&) {
    throw ParseError("integer out of range", t.position);
  }
}

// ---------------------------------------------------------------------------
// Recursive-descent parser
// ---------------------------------------------------------------------------

class Parser {
 public:
  Parser(std::string_view sql, const AppRules& rules)
      : toks_(tokenize(sql)), rules_(rules), end_pos_(sql.size()) {
    reject_unsupported();
  }

  SqlSpec statement();
  std::vector<FilterTriple> condition();

 private:
  const Token* peek(std::size_t k = 0) const {
    return pos_ + k < toks_.size() ? &toks_[pos_ + k] : nullptr;
  }
  std::size_t here() const { return pos_ < toks_.size() ? toks_[pos_].position : end_pos_; }
  bool at_kw(std::string_view kw, std::size_t k = 0) const {
    const Token* t = peek(k);
    return t && t->kind == TokenKind::kKeyword && t->value == kw;
  }
  bool at_punct(char c, std::size_t k = 0) const {
    const Token* t = peek(k);
    return t && t->kind == TokenKind::kPunct && t->value.size() == 1 && t->value[0] == c;
  }
  bool at_op(std::string_view op, std::size_t k = 0) const {
    const Token* t = peek(k);
    return t && t->kind == TokenKind::kOperator && t->value == op;
  }
  bool at_kind(TokenKind kind, std::size_t k = 0) const {
    const Token* t = peek(k);
    return t && t->kind == kind;
  }
  bool at_ident(std::string_view lower_name, std::size_t k = 0) const {
    const Token* t = peek(k);
    return t && t->kind == TokenKind::kIdent && !t->quoted && to_lower(t->value) == lower_name;
  }
  bool accept_kw(std::string_view kw) {
    if (!at_kw(kw)) return false;
    ++pos_;
    return true;
  }
  bool accept_punct(char c) {
    if (!at_punct(c)) return false;
    ++pos_;
    return true;
  }
  void expect_kw(std::string_view kw) {
    if (!accept_kw(kw)) throw ParseError("expected " + std::string(kw), here());
  }
  void expect_punct(char c) {
    if (!accept_punct(c)) throw ParseError(std::string("expected '") + c + "'", here());
  }
  const Token& next() {
    if (pos_ >= toks_.size()) throw ParseError("unexpected end of input", end_pos_);
    return toks_[pos_++];
  }

  void reject_unsupported() const;

  std::string identifier();
  std::string column_name(const Token& t) const;
  TableRef table_ref();
  std::optional<std::string> alias();

  ExprPtr expr() { return or_expr(); }
  ExprPtr or_expr();
  ExprPtr and_expr();
  ExprPtr not_expr();
  ExprPtr cmp_expr();
  ExprPtr concat_expr();
  ExprPtr add_expr();
  ExprPtr mul_expr();
  ExprPtr unary_expr();
  ExprPtr postfix_expr();
  ExprPtr primary();
  std::string type_name();

  ExprPtr binary(std::string op, ExprPtr l, ExprPtr r) {
    auto e = make_expr(ExprKind::kBinary);
    e->name = std::move(op);
    e->args.push_back(std::move(l));
    e->args.push_back(std::move(r));
    return e;
  }

  std::vector<Token> toks_;
  const AppRules& rules_;
  std::size_t end_pos_;
  std::size_t pos_ = 0;
};

void Parser::reject_unsupported() const {
  if (!toks_.empty() && toks_[0].kind == TokenKind::kKeyword && toks_[0].value == "WITH") {
    throw UnsupportedConstruct("CTE");
  }
  for (const Token& t : toks_) {
    if (t.kind != TokenKind::kKeyword) continue;
    if (t.value == "UNION" || t.value == "INTERSECT" || t.value == "EXCEPT") {
      throw UnsupportedConstruct(t.value);
    }
    if (t.value == "OVER") throw UnsupportedConstruct("window function");
  }
  for (std::size_t i = 0; i < toks_.size(); ++i) {
    const Token& t = toks_[i];
    bool open = t.kind == TokenKind::kPunct && t.value == "(";
    if (open && i + 1 < toks_.size() && toks_[i + 1].kind == TokenKind::kKeyword &&
        (toks_[i + 1].value == "SELECT" || toks_[i + 1].value == "WITH")) {
      throw UnsupportedConstruct("subquery");
    }
    if (t.kind == TokenKind::kKeyword && t.value == "EXISTS") throw UnsupportedConstruct("subquery");
  }
}

std::string Parser::identifier() {
  const Token& t = next();
  if (t.kind != TokenKind::kIdent) throw ParseError("expected an identifier", t.position);
  return t.quoted ? fold_identifier("\"" + t.value + "\"") : to_lower(t.value);
}

std::string Parser::column_name(const Token& t) const {
  std::string folded = t.quoted ? fold_identifier("\"" + t.value + "\"") : to_lower(t.value);
  return rules_.map_column(folded);
}

std::optional<std::string> Parser::alias() {
  if (accept_kw("AS")) return identifier();
  if (at_kind(TokenKind::kIdent)) return identifier();
  return std::nullopt;
}

TableRef Parser::table_ref() {
  if (at_punct('(')) throw ParseError("derived tables are not supported", here());
  TableRef ref;
  ref.name = identifier();
  while (accept_punct('.')) ref.name += "." + identifier();
  ref.alias = alias();
  return ref;
}

ExprPtr Parser::or_expr() {
  auto l = and_expr();
  while (accept_kw("OR")) l = binary("or", std::move(l), and_expr());
  return l;
}

ExprPtr Parser::and_expr() {
  auto l = not_expr();
  while (accept_kw("AND")) l = binary("and", std::move(l), not_expr());
  return l;
}

ExprPtr Parser::not_expr() {
  if (accept_kw("NOT")) {
    auto e = make_expr(ExprKind::kUnary);
    e->name = "not";
    e->args.push_back(not_expr());
    return e;
  }
  return cmp_expr();
}

ExprPtr Parser::cmp_expr() {
  auto l = concat_expr();
  const Token* t = peek();
  if (!t) return l;
  if (t->kind == TokenKind::kOperator &&
      (t->value == "=" || t->value == "<>" || t->value == "<" || t->value == "<=" ||
       t->value == ">" || t->value == ">=")) {
    std::string op = next().value;
    return binary(op, std::move(l), concat_expr());
  }
  if (accept_kw("IS")) {
    auto e = make_expr(ExprKind::kIsNull);
    e->negated = accept_kw("NOT");
    expect_kw("NULL");
    e->args.push_back(std::move(l));
    return e;
  }
  bool negated = false;
  if (at_kw("NOT") && (at_kw("IN", 1) || at_kw("BETWEEN", 1) || at_kw("LIKE", 1) || at_kw("ILIKE", 1))) {
    ++pos_;
    negated = true;
  }
  if (accept_kw("IN")) {
    auto e = make_expr(ExprKind::kInList);
    e->negated = negated;
    e->args.push_back(std::move(l));
    expect_punct('(');
    do {
      e->args.push_back(expr());
    } while (accept_punct(','));
    expect_punct(')');
    return e;
  }
  if (accept_kw("BETWEEN")) {
    auto e = make_expr(ExprKind::kBetween);
    e->negated = negated;
    e->args.push_back(std::move(l));
    e->args.push_back(concat_expr());
    expect_kw("AND");
    e->args.push_back(concat_expr());
    return e;
  }
  if (at_kw("LIKE") || at_kw("ILIKE")) {
    std::string op = to_lower(next().value);
    if (negated) op = "not " + op;
    return binary(op, std::move(l), concat_expr());
  }
  if (negated) throw ParseError("dangling NOT", here());
  return l;
}

ExprPtr Parser::concat_expr() {
  auto l = add_expr();
  while (at_op("||")) {
    ++pos_;
    l = binary("||", std::move(l), add_expr());
  }
  return l;
}

ExprPtr Parser::add_expr() {
  auto l = mul_expr();
  while (at_op("+") || at_op("-")) {
    std::string op = next().value;
    l = binary(op, std::move(l), mul_expr());
  }
  return l;
}

ExprPtr Parser::mul_expr() {
  auto l = unary_expr();
  while (at_kind(TokenKind::kStar) || at_op("/") || at_op("%")) {
    std::string op = next().value;
    l = binary(op, std::move(l), unary_expr());
  }
  return l;
}

ExprPtr Parser::unary_expr() {
  if (at_op("-") || at_op("+")) {
    std::string op = next().value;
    auto inner = unary_expr();
    if (op == "+") return inner;
    if (inner->kind == ExprKind::kLiteral && inner->literal.kind == ValueKind::kNumber) {
      std::string& text = inner->literal.text;
      text = text.front() == '-' ? text.substr(1) : "-" + text;
      return inner;
    }
    auto e = make_expr(ExprKind::kUnary);
    e->name = "-";
    e->args.push_back(std::move(inner));
    return e;
  }
  return postfix_expr();
}

std::string Parser::type_name() {
  std::string out = identifier();
  while (at_kind(TokenKind::kIdent)) out += " " + identifier();
  if (accept_punct('(')) {
    out += "(";
    bool first = true;
    do {
      const Token& n = next();
      if (n.kind != TokenKind::kNumber) throw ParseError("expected a type modifier", n.position);
      if (!first) out += ", ";
      out += n.text;
      first = false;
    } while (accept_punct(','));
    expect_punct(')');
    out += ")";
  }
  return out;
}

ExprPtr Parser::postfix_expr() {
  auto e = primary();
  while (at_op("::")) {
    ++pos_;
    auto cast = make_expr(ExprKind::kCast);
    cast->name = type_name();
    cast->args.push_back(std::move(e));
    e = std::move(cast);
  }
  return e;
}

ExprPtr Parser::primary() {
  if (!peek()) throw ParseError("unexpected end of input", end_pos_);
  const Token& t = *peek();
  switch (t.kind) {
    case TokenKind::kNumber: {
      ++pos_;
      auto e = make_expr(ExprKind::kLiteral);
      e->literal = Value::number(t.text);
      return e;
    }
    case TokenKind::kString: {
      ++pos_;
      auto e = make_expr(ExprKind::kLiteral);
      e->literal = Value::string(t.value);
      return e;
    }
    case TokenKind::kStar: {
      ++pos_;
      return make_expr(ExprKind::kStar);
    }
    case TokenKind::kPunct:
      if (accept_punct('(')) {
        auto e = expr();
        expect_punct(')');
        return e;
      }
      break;
    case TokenKind::kKeyword: {
      if (accept_kw("TRUE") || accept_kw("FALSE")) {
        auto e = make_expr(ExprKind::kLiteral);
        e->literal = Value::boolean(t.value == "TRUE");
        return e;
      }
      if (accept_kw("NULL")) return make_expr(ExprKind::kNull);
      if (accept_kw("CAST")) {
        expect_punct('(');
        auto e = make_expr(ExprKind::kCast);
        e->args.push_back(expr());
        expect_kw("AS");
        e->name = type_name();
        expect_punct(')');
        return e;
      }
      if (accept_kw("CASE")) {
        auto e = make_expr(ExprKind::kCase);
        if (!at_kw("WHEN")) {
          e->has_operand = true;
          e->args.push_back(expr());
        }
        if (!at_kw("WHEN")) throw ParseError("expected WHEN", here());
        while (accept_kw("WHEN")) {
          e->args.push_back(expr());
          expect_kw("THEN");
          e->args.push_back(expr());
        }
        if (accept_kw("ELSE")) {
          e->has_else = true;
          e->args.push_back(expr());
        }
        expect_kw("END");
        return e;
      }
      break;
    }
    case TokenKind::kIdent: {
      std::string lower = to_lower(t.value);
      // DATE '2023-01-01' and friends.
      if (!t.quoted && at_kind(TokenKind::kString, 1)) {
        if (lower == "date") {
          pos_ += 2;
          auto e = make_expr(ExprKind::kLiteral);
          e->literal = Value::date(toks_[pos_ - 1].value);
          return e;
        }
        if (lower == "timestamp" || lower == "interval" || lower == "time") {
          pos_ += 2;
          auto e = make_expr(ExprKind::kTyped);
          e->name = lower;
          e->literal = Value::string(toks_[pos_ - 1].value);
          return e;
        }
      }
      if (!t.quoted && at_punct('(', 1)) {
        pos_ += 2;
        if (lower == "extract") {
          auto e = make_expr(ExprKind::kExtract);
          e->name = identifier();
          expect_kw("FROM");
          e->args.push_back(expr());
          expect_punct(')');
          return e;
        }
        auto e = make_expr(ExprKind::kFunc);
        e->name = lower;
        if (accept_punct(')')) return e;
        if (accept_kw("DISTINCT")) e->distinct = true;
        accept_kw("ALL");
        do {
          e->args.push_back(expr());
        } while (accept_punct(','));
        expect_punct(')');
        return e;
      }
      ++pos_;
      if (accept_punct('.')) {
        if (at_kind(TokenKind::kStar)) {
          ++pos_;
          auto e = make_expr(ExprKind::kStar);
          e->qualifier = t.quoted ? fold_identifier("\"" + t.value + "\"") : lower;
          return e;
        }
        std::string qualifier = t.quoted ? fold_identifier("\"" + t.value + "\"") : lower;
        const Token* col = &next();
        if (col->kind != TokenKind::kIdent) throw ParseError("expected a column name", col->position);
        // schema.table.column keeps only the last two parts.
        if (accept_punct('.')) {
          qualifier = col->quoted ? fold_identifier("\"" + col->value + "\"") : to_lower(col->value);
          col = &next();
          if (col->kind != TokenKind::kIdent) {
            throw ParseError("expected a column name", col->position);
          }
        }
        auto e = make_expr(ExprKind::kColumn);
        e->qualifier = qualifier;
        e->name = column_name(*col);
        return e;
      }
      auto e = make_expr(ExprKind::kColumn);
      e->name = column_name(t);
      return e;
    }
    default:
      break;
  }
  throw ParseError("unexpected token '" + t.text + "'", t.position);
}

SqlSpec Parser::statement() {
  SqlSpec spec;
  expect_kw("SELECT");
  if (at_kw("DISTINCT") && at_kw("ON", 1)) throw UnsupportedConstruct("DISTINCT ON");
  spec.distinct = accept_kw("DISTINCT");
  accept_kw("ALL");
  if (at_ident("top") && at_kind(TokenKind::kNumber, 1)) throw UnsupportedConstruct("TOP");

  std::vector<ExprPtr> select_exprs;
  do {
    auto e = expr();
    Projection p;
    p.expr = render(*e);
    p.alias = alias();
    p.aggregate = as_aggregation(*e);
    p.has_aggregate = contains_aggregate(*e);
    p.is_constant = !references_columns(*e);
    collect_aggregations(*e, spec.aggregations);
    spec.projections.push_back(std::move(p));
    select_exprs.push_back(std::move(e));
  } while (accept_punct(','));

  if (accept_kw("FROM")) {
    do {
      spec.from.push_back(table_ref());
    } while (accept_punct(','));
    for (;;) {
      if (at_kw("LEFT") || at_kw("RIGHT") || at_kw("FULL")) throw UnsupportedConstruct("outer join");
      if (at_kw("CROSS")) throw UnsupportedConstruct("cross join");
      if (at_kw("NATURAL")) throw UnsupportedConstruct("natural join");
      bool inner = accept_kw("INNER");
      if (!accept_kw("JOIN")) {
        if (inner) throw ParseError("expected JOIN", here());
        break;
      }
      JoinClause join;
      join.table = table_ref();
      if (at_kw("USING")) throw UnsupportedConstruct("JOIN USING");
      expect_kw("ON");
      std::vector<ExprPtr> conds;
      flatten_and(expr(), conds);
      for (const auto& c : conds) {
        if (c->kind != ExprKind::kBinary || c->name != "=" ||
            c->args[0]->kind != ExprKind::kColumn || c->args[1]->kind != ExprKind::kColumn) {
          throw UnsupportedConstruct("complex join condition");
        }
        join.on.emplace_back(render(*c->args[0], true), render(*c->args[1], true));
      }
      spec.joins.push_back(std::move(join));
    }
  }

  if (accept_kw("WHERE")) {
    std::vector<ExprPtr> conjuncts;
    flatten_and(expr(), conjuncts);
    for (const auto& c : conjuncts) spec.filters.push_back(to_filter(*c, false));
  }

  // Ordinals and output aliases in GROUP BY / ORDER BY resolve to the
  // projection they name.
  auto by_ordinal = [&](const Expr& e) -> const Projection* {
    if (e.kind != ExprKind::kLiteral || e.literal.kind != ValueKind::kNumber) return nullptr;
    const auto& text = e.literal.text;
    if (!std::all_of(text.begin(), text.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      return nullptr;
    }
    std::size_t n = std::stoul(text);
    if (n == 0 || n > spec.projections.size()) {
      throw ParseError("ordinal " + text + " is out of range", here());
    }
    return &spec.projections[n - 1];
  };
  auto by_alias = [&](const Expr& e) -> const Projection* {
    if (e.kind != ExprKind::kColumn || !e.qualifier.empty()) return nullptr;
    for (const auto& p : spec.projections) {
      if (p.alias && *p.alias == e.name && p.expr != e.name) return &p;
    }
    return nullptr;
  };

  if (accept_kw("GROUP")) {
    expect_kw("BY");
    do {
      std::size_t at = here();
      auto e = expr();
      const Projection* p = by_ordinal(*e);
      if (!p) {
        p = by_alias(*e);
        // GROUP BY prefers input columns; an alias only resolves when it
        // names a non-aggregate output.
        if (p && p->has_aggregate) p = nullptr;
      }
      std::string text;
      if (p) {
        if (p->has_aggregate || p->expr == kStar) {
          throw ParseError("GROUP BY refers to an aggregate or *", at);
        }
        text = p->expr;
      } else {
        if (contains_aggregate(*e)) throw ParseError("aggregate in GROUP BY", at);
        text = render(*e);
      }
      spec.group_by.push_back(std::move(text));
    } while (accept_punct(','));
  }

  if (accept_kw("HAVING")) {
    std::vector<ExprPtr> conjuncts;
    flatten_and(expr(), conjuncts);
    for (const auto& c : conjuncts) spec.filters.push_back(to_filter(*c, true));
  }

  if (accept_kw("ORDER")) {
    expect_kw("BY");
    do {
      auto e = expr();
      OrderItem item;
      const Projection* p = by_ordinal(*e);
      if (!p) p = by_alias(*e);
      if (p) {
        item.expr = p->expr;
        item.aggregate = p->aggregate;
      } else {
        item.expr = render(*e);
        item.aggregate = as_aggregation(*e);
        collect_aggregations(*e, spec.aggregations);
      }
      if (accept_kw("DESC")) {
        item.direction = SortDirection::kDesc;
      } else {
        accept_kw("ASC");
      }
      if (accept_kw("NULLS")) {
        if (!at_ident("first") && !at_ident("last")) throw ParseError("expected FIRST or LAST", here());
        ++pos_;
      }
      spec.order_by.push_back(std::move(item));
    } while (accept_punct(','));
  }

  for (;;) {
    if (!spec.limit && accept_kw("LIMIT")) {
      spec.limit = parse_count(next());
    } else if (!spec.offset && accept_kw("OFFSET")) {
      spec.offset = parse_count(next());
    } else {
      break;
    }
  }
  if (at_kw("FETCH")) throw UnsupportedConstruct("FETCH FIRST");
  accept_punct(';');
  if (peek()) throw ParseError("unexpected token '" + peek()->text + "'", here());

  std::sort(spec.aggregations.begin(), spec.aggregations.end());
  spec.aggregations.erase(std::unique(spec.aggregations.begin(), spec.aggregations.end()),
                          spec.aggregations.end());
  return spec;
}

std::vector<FilterTriple> Parser::condition() {
  std::vector<ExprPtr> conjuncts;
  flatten_and(expr(), conjuncts);
  if (peek()) throw ParseError("unexpected token '" + peek()->text + "'", here());
  std::vector<FilterTriple> out;
  for (const auto& c : conjuncts) out.push_back(to_filter(*c, false));
  return out;
}

std::string filter_sql(const FilterTriple& f) {
  if (f.op == FilterOp::kComplex || !is_plain_ident(f.lhs)) return f.to_sql();
  FilterTriple quoted = f;
  quoted.lhs = ident_sql(f.lhs);
  return quoted.to_sql();
}

}  // namespace

SqlSpec parse_sql_spec(std::string_view sql, const AppRules& rules) {
  Parser parser(sql, rules);
  try {
    return resolve_aliases(parser.statement());
  } catch (const InvalidModel& e) {
    throw ParseError(e.what(), 0);
  }
}

std::vector<FilterTriple> parse_condition(std::string_view condition, const AppRules& rules) {
  Parser parser(condition, rules);
  try {
    return parser.condition();
  } catch (const InvalidModel& e) {
    throw ParseError(e.what(), 0);
  }
}

bool has_wildcard(std::string_view pattern) {
  return pattern.find_first_of("%_") != std::string_view::npos;
}

FilterTriple normalize_filter(const FilterTriple& f) {
  FilterTriple out = f;
  for (auto& v : out.rhs) {
    if (v.kind == ValueKind::kString) v.text = to_lower(trim(v.text));
  }
  if ((out.op == FilterOp::kLike || out.op == FilterOp::kILike) && out.rhs.size() == 1 &&
      out.rhs[0].kind == ValueKind::kString && !has_wildcard(out.rhs[0].text)) {
    out.op = FilterOp::kEq;
  }
  return out;
}

SqlSpec resolve_aliases(SqlSpec spec) {
  for (auto& p : spec.projections) {
    p.output_names.clear();
    p.output_names.push_back(p.expr);
    if (p.alias && *p.alias != p.expr) p.output_names.push_back(*p.alias);
    std::sort(p.output_names.begin(), p.output_names.end());
  }
  return spec;
}

std::string name_key(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (c == ' ' || c == '_' || c == '"') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string render_canonical(const SqlSpec& spec) {
  std::string out = "SELECT ";
  if (spec.distinct) out += "DISTINCT ";
  for (std::size_t i = 0; i < spec.projections.size(); ++i) {
    if (i) out += ", ";
    out += spec.projections[i].expr;
    if (spec.projections[i].alias) out += " AS " + ident_sql(*spec.projections[i].alias);
  }
  auto table_sql = [](const TableRef& t) {
    std::string s;
    // Dotted names are rendered part by part.
    std::size_t start = 0;
    for (;;) {
      auto dot = t.name.find('.', start);
      if (start) s += ".";
      s += ident_sql(t.name.substr(start, dot == std::string::npos ? std::string::npos : dot - start));
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    if (t.alias) s += " " + ident_sql(*t.alias);
    return s;
  };
  if (!spec.from.empty()) {
    out += " FROM ";
    for (std::size_t i = 0; i < spec.from.size(); ++i) {
      if (i) out += ", ";
      out += table_sql(spec.from[i]);
    }
    for (const auto& j : spec.joins) {
      out += " JOIN " + table_sql(j.table) + " ON ";
      for (std::size_t i = 0; i < j.on.size(); ++i) {
        if (i) out += " AND ";
        out += j.on[i].first + " = " + j.on[i].second;
      }
    }
  }
  auto conjunction = [](const std::vector<const FilterTriple*>& fs) {
    std::string s;
    for (std::size_t i = 0; i < fs.size(); ++i) {
      if (i) s += " AND ";
      s += filter_sql(*fs[i]);
    }
    return s;
  };
  std::vector<const FilterTriple*> where, having;
  for (const auto& f : spec.filters) (f.having ? having : where).push_back(&f);
  if (!where.empty()) out += " WHERE " + conjunction(where);
  if (!spec.group_by.empty()) {
    out += " GROUP BY ";
    for (std::size_t i = 0; i < spec.group_by.size(); ++i) {
      if (i) out += ", ";
      out += spec.group_by[i];
    }
  }
  if (!having.empty()) out += " HAVING " + conjunction(having);
  if (!spec.order_by.empty()) {
    out += " ORDER BY ";
    for (std::size_t i = 0; i < spec.order_by.size(); ++i) {
      if (i) out += ", ";
      out += spec.order_by[i].expr;
      out += spec.order_by[i].direction == SortDirection::kDesc ? " DESC" : " ASC";
    }
  }
  if (spec.limit) out += " LIMIT " + std::to_string(*spec.limit);
  if (spec.offset) out += " OFFSET " + std::to_string(*spec.offset);
  return out;
}

}  // namespace stef::sql
