#include <algorithm>
#include <iterator>
#include <cctype>

#include "stef/sql.hpp"

namespace stef::sql {

namespace {

// PostgreSQL-flavoured reserved words. Type names, DATE, INTERVAL and
// function names stay identifiers so they remain usable as column names.
constexpr std::string_view kKeywords[] = {
    "ALL",    "AND",    "AS",       "ASC",     "BETWEEN", "BY",     "CASE",    "CAST",
    "CROSS",  "DESC",   "DISTINCT", "ELSE",    "END",     "EXCEPT", "EXISTS",  "FALSE",
    "FETCH",  "FROM",   "FULL",     "GROUP",   "HAVING",  "ILIKE",  "IN",      "INNER",
    "INTERSECT", "IS",  "JOIN",     "LEFT",    "LIKE",    "LIMIT",  "NATURAL", "NOT",
    "NULL",   "NULLS",  "OFFSET",   "ON",      "OR",      "ORDER",  "OUTER",   "OVER",
    "RIGHT",  "SELECT", "THEN",     "TRUE",    "UNION",   "USING",  "WHEN",    "WHERE",
    "WITH",
};

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

}  // namespace

bool is_keyword(std::string_view w) {
  return std::find(std::begin(kKeywords), std::end(kKeywords), w) != std::end(kKeywords);
}

std::string_view token_kind_name(TokenKind k) {
  switch (k) {
    case TokenKind::kIdent: return "IDENT";
    case TokenKind::kKeyword: return "KEYWORD";
    case TokenKind::kNumber: return "NUMBER";
    case TokenKind::kString: return "STRING";
    case TokenKind::kOperator: return "OPERATOR";
    case TokenKind::kPunct: return "PUNCT";
    case TokenKind::kStar: return "STAR";
  }
  return "?";
}

std::vector<Token> tokenize(std::string_view sql) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = sql.size();
  auto at = [&](std::size_t k) -> unsigned char { return k < n ? sql[k] : '\0'; };
  auto push = [&](TokenKind kind, std::size_t start, std::string value, bool quoted = false) {
    out.push_back(Token{kind, std::string(sql.substr(start, i - start)), std::move(value), start,
                        quoted});
  };

  while (i < n) {
    unsigned char c = at(i);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (c == '-' && at(i + 1) == '-') {
      while (i < n && sql[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && at(i + 1) == '*') {
      auto end = sql.find("*/", i + 2);
      if (end == std::string_view::npos) throw UnterminatedString("unterminated comment", i);
      i = end + 2;
      continue;
    }

    std::size_t start = i;
    if (c == '\'') {
      std::string value;
      ++i;
      for (;;) {
        if (i >= n) throw UnterminatedString("unterminated string literal", start);
        if (sql[i] == '\'') {
          if (at(i + 1) == '\'') {
            value.push_back('\'');
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        value.push_back(sql[i++]);
      }
      push(TokenKind::kString, start, std::move(value));
      continue;
    }
    if (c == '"' || c == '`' || c == '[') {
      char close = c == '[' ? ']' : static_cast<char>(c);
      auto end = sql.find(close, i + 1);
      if (end == std::string_view::npos) {
        throw UnterminatedString("unterminated quoted identifier", start);
      }
      std::string value(sql.substr(i + 1, end - i - 1));
      i = end + 1;
      push(TokenKind::kIdent, start, std::move(value), true);
      continue;
    }
    if (std::isdigit(c) || (c == '.' && std::isdigit(at(i + 1)))) {
      while (std::isdigit(at(i))) ++i;
      if (at(i) == '.') {
        ++i;
        while (std::isdigit(at(i))) ++i;
      }
      if ((at(i) == 'e' || at(i) == 'E') &&
          (std::isdigit(at(i + 1)) ||
           ((at(i + 1) == '+' || at(i + 1) == '-') && std::isdigit(at(i + 2))))) {
        i += 2;
        while (std::isdigit(at(i))) ++i;
      }
      push(TokenKind::kNumber, start, std::string(sql.substr(start, i - start)));
      continue;
    }
    if (ident_start(c)) {
      while (i < n && ident_char(at(i))) ++i;
      std::string word(sql.substr(start, i - start));
      std::string up = upper(word);
      if (is_keyword(up)) {
        push(TokenKind::kKeyword, start, std::move(up));
      } else {
        push(TokenKind::kIdent, start, std::move(word));
      }
      continue;
    }
    if (c == '*') {
      ++i;
      push(TokenKind::kStar, start, "*");
      continue;
    }
    if (c == '(' || c == ')' || c == ',' || c == ';' || c == '.') {
      ++i;
      push(TokenKind::kPunct, start, std::string(1, static_cast<char>(c)));
      continue;
    }
    // Two-character operators first.
    std::string_view two = sql.substr(i, 2);
    if (two == "<=" || two == ">=" || two == "<>" || two == "!=" || two == "||" || two == "::") {
      i += 2;
      push(TokenKind::kOperator, start, std::string(two == "!=" ? "<>" : two));
      continue;
    }
    if (c == '=' || c == '<' || c == '>' || c == '+' || c == '-' || c == '/' || c == '%') {
      ++i;
      push(TokenKind::kOperator, start, std::string(1, static_cast<char>(c)));
      continue;
    }
    throw IllegalCharacter(std::string("illegal character '") + static_cast<char>(c) + "'", i);
  }
  return out;
}

}  // namespace stef::sql
