#pragma once

#include "seqsql/sqlcore/ast.hpp"

namespace seqsql {

using InRhs = std::variant<std::vector<ExprPtr>, SelectPtr, TokenRef>;
using DerivedBody = std::variant<std::monostate, SelectPtr, TokenRef>;

// Recursive copy-transform over statements. Override the position hooks to
// rewrite subqueries or cross-turn tokens; defaults recurse and keep.
class AstTransform {
 public:
  virtual ~AstTransform() = default;

  SqlAst apply(const SqlAst& ast);
  SelectPtr apply_select(const SelectPtr& sel);
  ExprPtr apply_expr(const ExprPtr& e);

 protected:
  // IN ( ... ) right-hand sides
  virtual InRhs on_in_select(const SelectPtr& s) { return apply_select(s); }
  virtual InRhs on_in_token(const TokenRef& t) { return t; }
  // parenthesized scalar positions
  virtual ExprPtr on_scalar_subquery(const SelectPtr& s) {
    return make_expr(Expr{Subquery{apply_select(s)}});
  }
  virtual ExprPtr on_scalar_token(const TokenRef& t) {
    return make_expr(Expr{TokenExpr{t}});
  }
  // FROM ( ... ) AS alias
  virtual DerivedBody on_derived_select(const SelectPtr& s) { return apply_select(s); }
  virtual DerivedBody on_derived_token(const TokenRef& t) { return t; }
  // extension bases (PREV_QUERY{i} <clause>)
  virtual TokenRef on_extension_base(const TokenRef& t) { return t; }

 private:
  TableRef apply_table(const TableRef& ref);
};

}  // namespace seqsql
