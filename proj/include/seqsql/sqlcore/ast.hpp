/*
 * seqsql - multi-turn SQL interaction toolkit
 *
 * AST for the supported SQL dialect: a SQLite SELECT subset extended with
 * the cross-turn tokens PREV_QUERY{i} / PREV_RESULT{i}.
 */
#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace seqsql {

enum class TokenKind { Query, Result };

// One PREV_QUERY{i} / PREV_RESULT{i} occurrence. Indices are 1-based and
// always point at an earlier turn.
struct TokenRef {
  TokenKind kind;
  int turn_index;

  bool operator==(const TokenRef&) const = default;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;
struct SelectStmt;
using SelectPtr = std::shared_ptr<const SelectStmt>;

enum class LiteralType { Integer, Real, Text, Null };

struct Literal {
  LiteralType type = LiteralType::Null;
  std::string lexeme;  // unquoted for Text
};

struct ColumnRef {
  std::string qualifier;  // table name or alias; may be empty
  std::string column;
};

struct Star {};  // COUNT(*) argument / SELECT *

struct FuncCall {
  std::string name;  // stored uppercase
  bool distinct = false;
  bool star = false;
  std::vector<ExprPtr> args;
};

// fn() OVER ( ORDER BY expr [ASC|DESC] ), e.g. DENSE_RANK over COUNT(*).
struct WindowFunc {
  FuncCall func;
  ExprPtr order_expr;
  bool order_desc = true;
};

enum class BinaryOp { Add, Sub, Mul, Div, Eq, Ne, Lt, Le, Gt, Ge, And, Or };

struct Binary {
  BinaryOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};

struct Subquery {
  SelectPtr select;  // rendered parenthesized
};

// PREV_RESULT{i} used as a scalar value; rendered parenthesized.
struct TokenExpr {
  TokenRef ref;
};

struct InPred {
  ExprPtr lhs;
  bool negated = false;
  std::variant<std::vector<ExprPtr>, SelectPtr, TokenRef> rhs;
};

struct IsNullPred {
  ExprPtr operand;
  bool negated = false;  // IS NOT NULL
};

struct Expr {
  std::variant<Literal, ColumnRef, Star, FuncCall, WindowFunc, Binary,
               Subquery, TokenExpr, InPred, IsNullPred>
      node;
};

struct SelectItem {
  ExprPtr expr;
  std::optional<std::string> alias;
};

struct TableRef {
  std::string table;  // plain table name, empty when derived
  std::variant<std::monostate, SelectPtr, TokenRef> derived;
  std::string alias;  // required for derived tables

  bool is_derived() const { return !std::holds_alternative<std::monostate>(derived); }
};

struct JoinClause {
  TableRef table;
  ExprPtr on;
};

struct OrderItem {
  ExprPtr expr;
  bool desc = false;
};

struct SelectStmt {
  bool distinct = false;
  std::vector<SelectItem> items;
  std::optional<TableRef> from;
  std::vector<JoinClause> joins;
  ExprPtr where;  // null when absent
  std::vector<ExprPtr> group_by;
  ExprPtr having;
  std::vector<OrderItem> order_by;
  std::optional<long long> limit;
};

// A Stage-2 turn of the form `PREV_QUERY{i} <clause>`; the clause fuses
// into the referenced turn's statement when inlined or resolved.
enum class ExtClauseKind { AndPred, WherePred, HavingPred, OrderLimit };

struct PrevExtension {
  TokenRef base;  // always Query kind
  ExtClauseKind kind = ExtClauseKind::AndPred;
  ExprPtr pred;  // AndPred / WherePred / HavingPred
  std::vector<OrderItem> order_by;  // OrderLimit
  std::optional<long long> limit;
};

struct SqlAst {
  std::variant<SelectPtr, PrevExtension> stmt;

  bool is_extension() const { return std::holds_alternative<PrevExtension>(stmt); }
  const SelectPtr& select() const { return std::get<SelectPtr>(stmt); }
  const PrevExtension& extension() const { return std::get<PrevExtension>(stmt); }
};

inline ExprPtr make_expr(Expr e) { return std::make_shared<const Expr>(std::move(e)); }
inline SelectPtr make_select(SelectStmt s) { return std::make_shared<const SelectStmt>(std::move(s)); }

}  // namespace seqsql
