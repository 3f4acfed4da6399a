#include "seqsql/sqlcore/render.hpp"

#include <functional>

namespace seqsql {
namespace {

const char* op_text(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Eq: return "=";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::And: return "AND";
    case BinaryOp::Or: return "OR";
  }
  return "?";
}

bool is_comparison(BinaryOp op) {
  switch (op) {
    case BinaryOp::Eq:
    case BinaryOp::Ne:
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge:
      return true;
    default:
      return false;
  }
}

void flatten_and(const ExprPtr& e, std::vector<ExprPtr>& out) {
  if (auto* b = std::get_if<Binary>(&e->node); b && b->op == BinaryOp::And) {
    flatten_and(b->lhs, out);
    flatten_and(b->rhs, out);
  } else {
    out.push_back(e);
  }
}

void walk_expr(const ExprPtr& e, const std::function<void(const Expr&)>& fn) {
  if (!e) return;
  fn(*e);
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, FuncCall>) {
          for (const auto& a : node.args) walk_expr(a, fn);
        } else if constexpr (std::is_same_v<T, WindowFunc>) {
          for (const auto& a : node.func.args) walk_expr(a, fn);
          walk_expr(node.order_expr, fn);
        } else if constexpr (std::is_same_v<T, Binary>) {
          walk_expr(node.lhs, fn);
          walk_expr(node.rhs, fn);
        } else if constexpr (std::is_same_v<T, InPred>) {
          walk_expr(node.lhs, fn);
          if (auto* list = std::get_if<std::vector<ExprPtr>>(&node.rhs))
            for (const auto& el : *list) walk_expr(el, fn);
        } else if constexpr (std::is_same_v<T, IsNullPred>) {
          walk_expr(node.operand, fn);
        }
      },
      e->node);
}

// A conjunct is a time filter if it touches only temporal columns and is
// anchored by something other than a plain column-to-column comparison
// (a literal, function call, or IS NULL).
bool is_temporal_conjunct(const ExprPtr& e, const MaskConfig& cfg) {
  bool has_column = false, all_temporal = true, has_anchor = false;
  bool has_subquery = false;
  walk_expr(e, [&](const Expr& node) {
    if (auto* c = std::get_if<ColumnRef>(&node.node)) {
      has_column = true;
      if (!cfg.temporal_columns.count(c->column)) all_temporal = false;
    } else if (std::holds_alternative<Literal>(node.node) ||
               std::holds_alternative<FuncCall>(node.node) ||
               std::holds_alternative<IsNullPred>(node.node)) {
      has_anchor = true;
    } else if (std::holds_alternative<Subquery>(node.node) ||
               std::holds_alternative<TokenExpr>(node.node) ||
               std::holds_alternative<InPred>(node.node)) {
      has_subquery = true;
    }
  });
  return has_column && all_temporal && has_anchor && !has_subquery;
}

bool order_by_is_temporal(const std::vector<OrderItem>& items, const MaskConfig& cfg) {
  if (items.empty()) return false;
  for (const auto& it : items) {
    auto* c = std::get_if<ColumnRef>(&it.expr->node);
    if (!c || !cfg.temporal_columns.count(c->column)) return false;
  }
  return true;
}

bool is_maskable_agg(const FuncCall& f) {
  return !f.star && !f.distinct && f.args.size() == 1 &&
         (f.name == "SUM" || f.name == "AVG" || f.name == "MIN" || f.name == "MAX");
}

class Renderer {
 public:
  Renderer(MaskPolicy policy, const MaskConfig& cfg) : policy_(policy), cfg_(cfg) {}

  std::string render(const SqlAst& ast) {
    if (ast.is_extension())
      render_extension(ast.extension());
    else
      render_select(*ast.select());
    return out_;
  }

  std::vector<Slot> take_slots() { return std::move(slots_); }

 private:
  MaskPolicy policy_;
  const MaskConfig& cfg_;
  std::string out_;
  std::vector<Slot> slots_;
  int val_count_ = 0;
  int time_global_count_ = 0;
  int time_exact_count_ = 0;
  std::vector<std::set<std::string>> alias_scopes_;

  bool masking() const { return policy_ != MaskPolicy::None; }
  bool nlq() const { return policy_ == MaskPolicy::NlqNorm; }
  bool comp_or_nlq() const {
    return policy_ == MaskPolicy::Composition || policy_ == MaskPolicy::NlqNorm;
  }

  void emit(const std::string& s) { out_ += s; }

  void emit_slot(SlotKind kind, const std::string& placeholder, const std::string& original) {
    slots_.push_back(Slot{kind, placeholder, original, out_.size()});
    out_ += placeholder;
  }

  std::string plain(const ExprPtr& e) const {
    Renderer r(MaskPolicy::None, cfg_);
    r.render_expr(e);
    return r.out_;
  }
  std::string plain_conjuncts(const std::vector<ExprPtr>& cs, size_t lo, size_t hi) const {
    Renderer r(MaskPolicy::None, cfg_);
    for (size_t i = lo; i < hi; ++i) {
      if (i > lo) r.emit(" AND ");
      r.render_expr(cs[i]);
    }
    return r.out_;
  }

  bool in_alias_scope(const std::string& q) const {
    for (const auto& scope : alias_scopes_)
      if (scope.count(q)) return true;
    return false;
  }

  static std::string quote_text(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
      out += c;
      if (c == '\'') out += '\'';
    }
    out += "'";
    return out;
  }

  void render_token(const TokenRef& ref) {
    std::string spelled =
        (ref.kind == TokenKind::Query ? "PREV_QUERY" : "PREV_RESULT") +
        std::to_string(ref.turn_index);
    if (nlq())
      emit_slot(SlotKind::Prev, "[PREV]", spelled);
    else
      emit(spelled);
  }

  void render_extension(const PrevExtension& ext) {
    render_token(ext.base);
    switch (ext.kind) {
      case ExtClauseKind::AndPred:
        emit(" AND ");
        render_conjunct_chain(ext.pred);
        break;
      case ExtClauseKind::WherePred:
        emit(" WHERE ");
        render_conjunct_chain(ext.pred);
        break;
      case ExtClauseKind::HavingPred:
        emit(" HAVING ");
        render_expr(ext.pred);
        break;
      case ExtClauseKind::OrderLimit:
        render_order_limit(ext.order_by, ext.limit, /*leading_space=*/true);
        break;
    }
  }

  void render_select(const SelectStmt& sel) {
    std::set<std::string> aliases;
    if (sel.from && sel.from->is_derived()) aliases.insert(sel.from->alias);
    for (const auto& j : sel.joins)
      if (j.table.is_derived()) aliases.insert(j.table.alias);
    alias_scopes_.push_back(std::move(aliases));

    emit("SELECT ");
    if (sel.distinct) emit("DISTINCT ");
    for (size_t i = 0; i < sel.items.size(); ++i) {
      if (i) emit(", ");
      render_select_item(sel.items[i]);
    }
    if (sel.from) {
      emit(" FROM ");
      render_table_ref(*sel.from);
      for (const auto& j : sel.joins) {
        emit(" JOIN ");
        render_table_ref(j.table);
        emit(" ON ");
        render_expr(j.on);
      }
    }
    if (sel.where) {
      emit(" WHERE ");
      render_conjunct_chain(sel.where);
    }
    if (!sel.group_by.empty()) {
      emit(" GROUP BY ");
      for (size_t i = 0; i < sel.group_by.size(); ++i) {
        if (i) emit(", ");
        render_expr(sel.group_by[i]);
      }
    }
    if (sel.having) {
      emit(" HAVING ");
      render_expr(sel.having);
    }
    render_order_limit(sel.order_by, sel.limit, /*leading_space=*/true);
    alias_scopes_.pop_back();
  }

  void render_order_limit(const std::vector<OrderItem>& items,
                          const std::optional<long long>& limit, bool leading_space) {
    if (items.empty() && !limit) return;
    std::string sep = leading_space ? " " : "";
    if (comp_or_nlq() && order_by_is_temporal(items, cfg_)) {
      Renderer r(MaskPolicy::None, cfg_);
      r.render_order_limit(items, limit, false);
      emit(sep);
      emit_slot(SlotKind::TimeFilter,
                "[time_filter_exact" + std::to_string(++time_exact_count_) + "]",
                r.out_);
      return;
    }
    if (!items.empty()) {
      emit(sep + "ORDER BY ");
      for (size_t i = 0; i < items.size(); ++i) {
        if (i) emit(", ");
        render_expr(items[i].expr);
        emit(items[i].desc ? " DESC" : " ASC");
      }
      sep = " ";
    }
    if (limit) emit(sep + "LIMIT " + std::to_string(*limit));
  }

  void render_select_item(const SelectItem& item) {
    if (auto* f = std::get_if<FuncCall>(&item.expr->node);
        f && comp_or_nlq() && is_maskable_agg(*f)) {
      emit_slot(SlotKind::Agg, "[agg_function]", f->name);
      emit("(");
      render_expr(f->args[0]);
      emit(")");
    } else {
      render_expr(item.expr);
    }
    if (item.alias) {
      emit(" AS ");
      if (nlq())
        emit_slot(SlotKind::Alias, "column", *item.alias);
      else
        emit(*item.alias);
    }
  }

  void render_table_ref(const TableRef& ref) {
    if (ref.is_derived()) {
      emit("( ");
      if (auto* tok = std::get_if<TokenRef>(&ref.derived))
        render_token(*tok);
      else
        render_select(*std::get<SelectPtr>(ref.derived));
      emit(" ) AS ");
      if (nlq())
        emit_slot(SlotKind::Alias, "table", ref.alias);
      else
        emit(ref.alias);
      return;
    }
    if (nlq())
      emit_slot(SlotKind::Table, "table", ref.table);
    else
      emit(ref.table);
    if (!ref.alias.empty()) {
      emit(" AS ");
      if (nlq())
        emit_slot(SlotKind::Alias, "table", ref.alias);
      else
        emit(ref.alias);
    }
  }

  // WHERE-level rendering: groups runs of temporal conjuncts into one
  // [time_filter_globalN] placeholder under Composition / NlqNorm.
  void render_conjunct_chain(const ExprPtr& pred) {
    if (!comp_or_nlq()) {
      render_expr(pred);
      return;
    }
    std::vector<ExprPtr> cs;
    flatten_and(pred, cs);
    bool first = true;
    size_t i = 0;
    while (i < cs.size()) {
      if (is_temporal_conjunct(cs[i], cfg_)) {
        size_t j = i;
        while (j < cs.size() && is_temporal_conjunct(cs[j], cfg_)) ++j;
        if (!first) emit(" AND ");
        emit_slot(SlotKind::TimeFilter,
                  "[time_filter_global" + std::to_string(++time_global_count_) + "]",
                  plain_conjuncts(cs, i, j));
        i = j;
      } else {
        if (!first) emit(" AND ");
        render_expr(cs[i]);
        ++i;
      }
      first = false;
    }
  }

  void render_literal(const Literal& lit) {
    emit(lit.type == LiteralType::Text ? quote_text(lit.lexeme) : lit.lexeme);
  }

  void render_masked_value(const ExprPtr& e) {
    auto* lit = std::get_if<Literal>(&e->node);
    if (!lit || lit->type == LiteralType::Null || !masking()) {
      render_expr(e);
      return;
    }
    std::string original =
        lit->type == LiteralType::Text ? quote_text(lit->lexeme) : lit->lexeme;
    if (nlq())
      emit_slot(SlotKind::Value, "[val_placeholder]", original);
    else
      emit_slot(SlotKind::Value, "{val" + std::to_string(val_count_++) + "}", original);
  }

  // Rank numerals: `alias.col <= N` against a derived-table alias.
  bool is_rank_comparison(const Binary& b) const {
    if (b.op != BinaryOp::Le && b.op != BinaryOp::Lt) return false;
    auto* col = std::get_if<ColumnRef>(&b.lhs->node);
    auto* lit = std::get_if<Literal>(&b.rhs->node);
    return col && lit && lit->type == LiteralType::Integer &&
           !col->qualifier.empty() && in_alias_scope(col->qualifier);
  }

  void render_expr(const ExprPtr& e) {
    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, Literal>) {
            render_literal(node);
          } else if constexpr (std::is_same_v<T, ColumnRef>) {
            std::string original =
                node.qualifier.empty() ? node.column : node.qualifier + "." + node.column;
            if (nlq())
              emit_slot(SlotKind::Column, "table.column", original);
            else
              emit(original);
          } else if constexpr (std::is_same_v<T, Star>) {
            emit("*");
          } else if constexpr (std::is_same_v<T, FuncCall>) {
            render_call(node);
          } else if constexpr (std::is_same_v<T, WindowFunc>) {
            render_call(node.func);
            emit(" OVER ( ORDER BY ");
            render_expr(node.order_expr);
            emit(node.order_desc ? " DESC )" : " ASC )");
          } else if constexpr (std::is_same_v<T, Binary>) {
            render_binary(node);
          } else if constexpr (std::is_same_v<T, Subquery>) {
            emit("( ");
            render_select(*node.select);
            emit(" )");
          } else if constexpr (std::is_same_v<T, TokenExpr>) {
            emit("( ");
            render_token(node.ref);
            emit(" )");
          } else if constexpr (std::is_same_v<T, InPred>) {
            render_in(node);
          } else if constexpr (std::is_same_v<T, IsNullPred>) {
            render_expr(node.operand);
            emit(node.negated ? " IS NOT NULL" : " IS NULL");
          }
        },
        e->node);
  }

  void render_call(const FuncCall& f) {
    emit(f.name);
    emit("(");
    if (f.star) {
      emit("*");
    } else {
      if (f.distinct) emit("DISTINCT ");
      for (size_t i = 0; i < f.args.size(); ++i) {
        if (i) emit(", ");
        render_expr(f.args[i]);
      }
    }
    emit(")");
  }

  void render_binary(const Binary& b) {
    if (is_comparison(b.op) && comp_or_nlq() && is_rank_comparison(b)) {
      render_expr(b.lhs);
      emit(std::string(" ") + op_text(b.op) + " ");
      emit_slot(SlotKind::Rank, "[n_rank]", std::get<Literal>(b.rhs->node).lexeme);
      return;
    }
    auto operand = [&](const ExprPtr& side) {
      // parenthesize when the child binds looser than the parent
      bool paren = false;
      if (auto* c = std::get_if<Binary>(&side->node)) {
        if (b.op == BinaryOp::And && c->op == BinaryOp::Or) paren = true;
        if ((b.op == BinaryOp::Mul || b.op == BinaryOp::Div) &&
            (c->op == BinaryOp::Add || c->op == BinaryOp::Sub))
          paren = true;
      }
      if (paren) emit("( ");
      if (is_comparison(b.op))
        render_masked_value(side);
      else
        render_expr(side);
      if (paren) emit(" )");
    };
    // literals paired with a non-literal side are condition values
    bool lhs_lit = std::holds_alternative<Literal>(b.lhs->node);
    bool rhs_lit = std::holds_alternative<Literal>(b.rhs->node);
    if (!is_comparison(b.op) || (lhs_lit && rhs_lit) || (!lhs_lit && !rhs_lit)) {
      render_nonvalue_operand(b, b.lhs);
      emit(std::string(" ") + op_text(b.op) + " ");
      render_nonvalue_operand(b, b.rhs);
    } else {
      operand(b.lhs);
      emit(std::string(" ") + op_text(b.op) + " ");
      operand(b.rhs);
    }
  }

  void render_nonvalue_operand(const Binary& parent, const ExprPtr& side) {
    bool paren = false;
    if (auto* c = std::get_if<Binary>(&side->node)) {
      if (parent.op == BinaryOp::And && c->op == BinaryOp::Or) paren = true;
      if ((parent.op == BinaryOp::Mul || parent.op == BinaryOp::Div) &&
          (c->op == BinaryOp::Add || c->op == BinaryOp::Sub))
        paren = true;
    }
    if (paren) emit("( ");
    render_expr(side);
    if (paren) emit(" )");
  }

  void render_in(const InPred& p) {
    render_expr(p.lhs);
    emit(p.negated ? " NOT IN ( " : " IN ( ");
    std::visit(
        [&](const auto& rhs) {
          using T = std::decay_t<decltype(rhs)>;
          if constexpr (std::is_same_v<T, std::vector<ExprPtr>>) {
            for (size_t i = 0; i < rhs.size(); ++i) {
              if (i) emit(", ");
              render_masked_value(rhs[i]);
            }
          } else if constexpr (std::is_same_v<T, SelectPtr>) {
            render_select(*rhs);
          } else {
            render_token(rhs);
          }
        },
        p.rhs);
    emit(" )");
  }
};

}  // namespace

const MaskConfig& default_mask_config() {
  static const MaskConfig cfg;
  return cfg;
}

std::string render_sql(const SqlAst& ast) {
  Renderer r(MaskPolicy::None, default_mask_config());
  return r.render(ast);
}

SqlTemplate mask_template(const SqlAst& ast, MaskPolicy policy, const MaskConfig& config) {
  Renderer r(policy, config);
  SqlTemplate tpl;
  tpl.masked_text = r.render(ast);
  tpl.policy = policy;
  tpl.slots = r.take_slots();
  return tpl;
}

std::string unmask(const SqlTemplate& tpl) {
  std::string out = tpl.masked_text;
  for (auto it = tpl.slots.rbegin(); it != tpl.slots.rend(); ++it)
    out.replace(it->offset, it->placeholder.size(), it->original);
  return out;
}

bool ast_equal(const SqlAst& a, const SqlAst& b) {
  return render_sql(a) == render_sql(b);
}

std::vector<TokenRef> extract_token_refs(const SqlAst& ast) {
  std::vector<TokenRef> out;
  std::function<void(const ExprPtr&)> walk_e;
  std::function<void(const SelectStmt&)> walk_s;
  auto walk_table = [&](const TableRef& t) {
    if (auto* tok = std::get_if<TokenRef>(&t.derived))
      out.push_back(*tok);
    else if (auto* sub = std::get_if<SelectPtr>(&t.derived))
      walk_s(**sub);
  };
  walk_e = [&](const ExprPtr& e) {
    if (!e) return;
    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, TokenExpr>) {
            out.push_back(node.ref);
          } else if constexpr (std::is_same_v<T, Subquery>) {
            walk_s(*node.select);
          } else if constexpr (std::is_same_v<T, FuncCall>) {
            for (const auto& a : node.args) walk_e(a);
          } else if constexpr (std::is_same_v<T, WindowFunc>) {
            for (const auto& a : node.func.args) walk_e(a);
            walk_e(node.order_expr);
          } else if constexpr (std::is_same_v<T, Binary>) {
            walk_e(node.lhs);
            walk_e(node.rhs);
          } else if constexpr (std::is_same_v<T, InPred>) {
            walk_e(node.lhs);
            if (auto* list = std::get_if<std::vector<ExprPtr>>(&node.rhs)) {
              for (const auto& el : *list) walk_e(el);
            } else if (auto* sub = std::get_if<SelectPtr>(&node.rhs)) {
              walk_s(**sub);
            } else {
              out.push_back(std::get<TokenRef>(node.rhs));
            }
          } else if constexpr (std::is_same_v<T, IsNullPred>) {
            walk_e(node.operand);
          }
        },
        e->node);
  };
  walk_s = [&](const SelectStmt& sel) {
    for (const auto& it : sel.items) walk_e(it.expr);
    if (sel.from) walk_table(*sel.from);
    for (const auto& j : sel.joins) {
      walk_table(j.table);
      walk_e(j.on);
    }
    walk_e(sel.where);
    for (const auto& g : sel.group_by) walk_e(g);
    walk_e(sel.having);
    for (const auto& o : sel.order_by) walk_e(o.expr);
  };
  if (ast.is_extension()) {
    const auto& ext = ast.extension();
    out.push_back(ext.base);
    walk_e(ext.pred);
    for (const auto& o : ext.order_by) walk_e(o.expr);
  } else {
    walk_s(*ast.select());
  }
  return out;
}

}  // namespace seqsql
