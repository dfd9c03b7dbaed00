#pragma once

// Deterministic reader for the single-SELECT SQL subset: tokenizer, clause
// parser, extraction-time normalization and a canonical renderer.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stef/model.hpp"

namespace stef::sql {

class SqlError : public std::runtime_error {
 public:
  SqlError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at offset " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class UnterminatedString : public SqlError {
 public:
  using SqlError::SqlError;
};

class IllegalCharacter : public SqlError {
 public:
  using SqlError::SqlError;
};

class ParseError : public SqlError {
 public:
  using SqlError::SqlError;
};

/// The statement is outside the supported subset. `construct()` names it:
/// "CTE", "UNION", "INTERSECT", "EXCEPT", "window function", "subquery",
/// "outer join", "cross join", "natural join", "JOIN USING",
/// "complex join condition", "DISTINCT ON", "FETCH FIRST", "TOP".
class UnsupportedConstruct : public std::runtime_error {
 public:
  explicit UnsupportedConstruct(std::string construct)
      : std::runtime_error("unsupported construct: " + construct),
        construct_(std::move(construct)) {}
  const std::string& construct() const { return construct_; }

 private:
  std::string construct_;
};

enum class TokenKind { kIdent, kKeyword, kNumber, kString, kOperator, kPunct, kStar };

std::string_view token_kind_name(TokenKind k);

struct Token {
  TokenKind kind;
  std::string text;   // verbatim source slice
  std::string value;  // keyword: upper case; string: unquoted; ident: unquoted
  std::size_t position;
  bool quoted = false;  // quoted identifier
};

/// Splits `sql` into tokens; whitespace and comments are dropped but every
/// token keeps its source offset, so the input can be reproduced.
std::vector<Token> tokenize(std::string_view sql);

bool is_keyword(std::string_view upper_word);

/// Parses one SELECT statement. Column references pass through
/// `rules.map_column`; aliases are resolved before returning.
SqlSpec parse_sql_spec(std::string_view sql, const AppRules& rules = {});

/// Parses a WHERE-style boolean condition into conjunct filters.
std::vector<FilterTriple> parse_condition(std::string_view condition,
                                          const AppRules& rules = {});

/// Case-folds and trims string values; rewrites non-wildcarded LIKE/ILIKE to
/// equality.
FilterTriple normalize_filter(const FilterTriple& f);

/// True when the pattern contains % or _.
bool has_wildcard(std::string_view pattern);

/// Fills each projection's output names: its expression and, when present,
/// its alias.
SqlSpec resolve_aliases(SqlSpec spec);

/// Renders a spec back to SQL in canonical form; parsing the result yields an
/// identical spec.
std::string render_canonical(const SqlSpec& spec);

/// Lower-cases and removes spaces and underscores so "total spend",
/// "total_spend" and "TotalSpend" share one key.
std::string name_key(std::string_view name);

}  // namespace stef::sql
