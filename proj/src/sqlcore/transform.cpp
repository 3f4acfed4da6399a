#include "seqsql/sqlcore/transform.hpp"

namespace seqsql {

SqlAst AstTransform::apply(const SqlAst& ast) {
  SqlAst out;
  if (ast.is_extension()) {
    PrevExtension ext = ast.extension();
    ext.base = on_extension_base(ext.base);
    if (ext.pred) ext.pred = apply_expr(ext.pred);
    for (auto& o : ext.order_by) o.expr = apply_expr(o.expr);
    out.stmt = std::move(ext);
  } else {
    out.stmt = apply_select(ast.select());
  }
  return out;
}

SelectPtr AstTransform::apply_select(const SelectPtr& sel) {
  SelectStmt s = *sel;
  for (auto& item : s.items) item.expr = apply_expr(item.expr);
  if (s.from) *s.from = apply_table(*s.from);
  for (auto& j : s.joins) {
    j.table = apply_table(j.table);
    j.on = apply_expr(j.on);
  }
  if (s.where) s.where = apply_expr(s.where);
  for (auto& g : s.group_by) g = apply_expr(g);
  if (s.having) s.having = apply_expr(s.having);
  for (auto& o : s.order_by) o.expr = apply_expr(o.expr);
  return make_select(std::move(s));
}

TableRef AstTransform::apply_table(const TableRef& ref) {
  TableRef out = ref;
  if (auto* sub = std::get_if<SelectPtr>(&ref.derived))
    out.derived = on_derived_select(*sub);
  else if (auto* tok = std::get_if<TokenRef>(&ref.derived))
    out.derived = on_derived_token(*tok);
  return out;
}

ExprPtr AstTransform::apply_expr(const ExprPtr& e) {
  if (!e) return e;
  return std::visit(
      [&](const auto& node) -> ExprPtr {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Subquery>) {
          return on_scalar_subquery(node.select);
        } else if constexpr (std::is_same_v<T, TokenExpr>) {
          return on_scalar_token(node.ref);
        } else if constexpr (std::is_same_v<T, FuncCall>) {
          FuncCall f = node;
          for (auto& a : f.args) a = apply_expr(a);
          return make_expr(Expr{std::move(f)});
        } else if constexpr (std::is_same_v<T, WindowFunc>) {
          WindowFunc w = node;
          for (auto& a : w.func.args) a = apply_expr(a);
          w.order_expr = apply_expr(w.order_expr);
          return make_expr(Expr{std::move(w)});
        } else if constexpr (std::is_same_v<T, Binary>) {
          Binary b = node;
          b.lhs = apply_expr(b.lhs);
          b.rhs = apply_expr(b.rhs);
          return make_expr(Expr{std::move(b)});
        } else if constexpr (std::is_same_v<T, InPred>) {
          InPred p = node;
          p.lhs = apply_expr(p.lhs);
          if (auto* list = std::get_if<std::vector<ExprPtr>>(&p.rhs)) {
            for (auto& el : *list) el = apply_expr(el);
          } else if (auto* sub = std::get_if<SelectPtr>(&p.rhs)) {
            p.rhs = on_in_select(*sub);
          } else {
            p.rhs = on_in_token(std::get<TokenRef>(p.rhs));
          }
          return make_expr(Expr{std::move(p)});
        } else if constexpr (std::is_same_v<T, IsNullPred>) {
          IsNullPred p = node;
          p.operand = apply_expr(p.operand);
          return make_expr(Expr{std::move(p)});
        } else {
          return make_expr(Expr{node});
        }
      },
      e->node);
}

}  // namespace seqsql
