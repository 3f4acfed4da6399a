#include "seqsql/decomposer/decompose.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>

#include "seqsql/sqlcore/errors.hpp"
#include "seqsql/sqlcore/transform.hpp"

namespace seqsql {
namespace {

void flatten_and(const ExprPtr& e, std::vector<ExprPtr>& out) {
  if (auto* b = std::get_if<Binary>(&e->node); b && b->op == BinaryOp::And) {
    flatten_and(b->lhs, out);
    flatten_and(b->rhs, out);
  } else {
    out.push_back(e);
  }
}

ExprPtr conjoin(const std::vector<ExprPtr>& cs) {
  if (cs.empty()) return nullptr;
  ExprPtr acc = cs[0];
  for (size_t i = 1; i < cs.size(); ++i)
    acc = make_expr(Expr{Binary{BinaryOp::And, acc, cs[i]}});
  return acc;
}

void collect_columns(const ExprPtr& e, std::vector<ColumnRef>& out) {
  if (!e) return;
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, ColumnRef>) {
          out.push_back(node);
        } else if constexpr (std::is_same_v<T, FuncCall>) {
          for (const auto& a : node.args) collect_columns(a, out);
        } else if constexpr (std::is_same_v<T, WindowFunc>) {
          for (const auto& a : node.func.args) collect_columns(a, out);
          collect_columns(node.order_expr, out);
        } else if constexpr (std::is_same_v<T, Binary>) {
          collect_columns(node.lhs, out);
          collect_columns(node.rhs, out);
        } else if constexpr (std::is_same_v<T, InPred>) {
          collect_columns(node.lhs, out);
          if (auto* list = std::get_if<std::vector<ExprPtr>>(&node.rhs))
            for (const auto& el : *list) collect_columns(el, out);
        } else if constexpr (std::is_same_v<T, IsNullPred>) {
          collect_columns(node.operand, out);
        }
      },
      e->node);
}

bool contains_aggregate(const ExprPtr& e) {
  if (!e) return false;
  bool found = false;
  std::function<void(const ExprPtr&)> walk = [&](const ExprPtr& x) {
    if (!x || found) return;
    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, FuncCall>) {
            static const char* aggs[] = {"SUM", "AVG", "MIN", "MAX", "COUNT"};
            for (const char* a : aggs)
              if (node.name == a) found = true;
            for (const auto& arg : node.args) walk(arg);
          } else if constexpr (std::is_same_v<T, WindowFunc>) {
            found = true;
          } else if constexpr (std::is_same_v<T, Binary>) {
            walk(node.lhs);
            walk(node.rhs);
          } else if constexpr (std::is_same_v<T, InPred>) {
            walk(node.lhs);
          } else if constexpr (std::is_same_v<T, IsNullPred>) {
            walk(node.operand);
          }
        },
        x->node);
  };
  walk(e);
  return found;
}

// Rewrites token turn indices through `fn`.
class Renumber : public AstTransform {
 public:
  explicit Renumber(std::function<int(int)> fn) : fn_(std::move(fn)) {}

 protected:
  TokenRef map(const TokenRef& t) { return TokenRef{t.kind, fn_(t.turn_index)}; }
  InRhs on_in_token(const TokenRef& t) override { return map(t); }
  ExprPtr on_scalar_token(const TokenRef& t) override {
    return make_expr(Expr{TokenExpr{map(t)}});
  }
  DerivedBody on_derived_token(const TokenRef& t) override { return map(t); }
  TokenRef on_extension_base(const TokenRef& t) override { return map(t); }

 private:
  std::function<int(int)> fn_;
};

SqlAst renumber_refs(const SqlAst& ast, const std::function<int(int)>& fn) {
  return renumber_tokens(ast, fn);
}

class Stage1 : public AstTransform {
 public:
  std::vector<TurnSql> turns;

 protected:
  InRhs on_in_select(const SelectPtr& s) override {
    return TokenRef{TokenKind::Result, emit(s)};
  }
  ExprPtr on_scalar_subquery(const SelectPtr& s) override {
    return make_expr(Expr{TokenExpr{TokenRef{TokenKind::Result, emit(s)}}});
  }
  DerivedBody on_derived_select(const SelectPtr& s) override {
    return TokenRef{TokenKind::Query, emit(s)};
  }

 private:
  int emit(const SelectPtr& s) {
    SelectPtr stripped = apply_select(s);  // inner nesting first
    TurnSql t;
    t.index = static_cast<int>(turns.size()) + 1;
    t.ast.stmt = stripped;
    t.origin = TurnOrigin::Stage1;
    turns.push_back(std::move(t));
    return turns.back().index;
  }
};

bool is_plain_agg(const FuncCall& f) {
  static const char* aggs[] = {"SUM", "AVG", "MIN", "MAX", "COUNT"};
  bool known = false;
  for (const char* a : aggs)
    if (f.name == a) known = true;
  if (!known) return false;
  if (f.star) return f.args.empty();
  return f.args.size() == 1 && std::holds_alternative<ColumnRef>(f.args[0]->node);
}

std::string col_key(const ColumnRef& c) {
  return c.qualifier.empty() ? c.column : c.qualifier + "." + c.column;
}

}  // namespace

const DecomposeConfig& default_decompose_config() {
  static const DecomposeConfig cfg;
  return cfg;
}

std::vector<TurnSql> decompose_nesting(const SqlAst& ast) {
  if (!extract_token_refs(ast).empty())
    throw std::invalid_argument("decompose_nesting expects a token-free query");
  if (ast.is_extension())
    throw std::invalid_argument("decompose_nesting expects a SELECT statement");
  Stage1 s;
  SqlAst top = s.apply(ast);
  TurnSql last;
  last.index = static_cast<int>(s.turns.size()) + 1;
  last.ast = std::move(top);
  last.origin = TurnOrigin::Stage1;
  s.turns.push_back(std::move(last));
  return std::move(s.turns);
}

std::vector<TurnSql> decompose_clauses(const TurnSql& turn, int start_index,
                                       const DecomposeConfig& cfg) {
  auto unchanged = [&](TurnOrigin origin) {
    TurnSql t = turn;
    t.index = start_index;
    t.origin = origin;
    return std::vector<TurnSql>{t};
  };
  if (turn.ast.is_extension()) return unchanged(turn.origin);
  if (cfg.atomic_templates.count(turn_template_key(turn.ast, cfg.mask)))
    return unchanged(TurnOrigin::Atomic);

  const SelectStmt& sel = *turn.ast.select();

  std::set<std::string> derived_aliases;
  if (sel.from && sel.from->is_derived()) derived_aliases.insert(sel.from->alias);
  for (const auto& j : sel.joins)
    if (j.table.is_derived()) derived_aliases.insert(j.table.alias);

  std::set<std::string> selected_cols;
  for (const auto& item : sel.items) {
    std::vector<ColumnRef> cols;
    collect_columns(item.expr, cols);
    for (const auto& c : cols) selected_cols.insert(c.column);
  }

  std::vector<ExprPtr> conjuncts;
  if (sel.where) flatten_and(sel.where, conjuncts);

  std::vector<ExprPtr> base_where;
  std::vector<std::vector<ExprPtr>> peels;
  for (const auto& c : conjuncts) {
    std::vector<ColumnRef> cols;
    collect_columns(c, cols);
    bool alias_bound = std::any_of(cols.begin(), cols.end(), [&](const ColumnRef& col) {
      return derived_aliases.count(col.qualifier) > 0;
    });
    if (alias_bound) {
      base_where.push_back(c);
      continue;
    }
    // optional data-cleansing clause: IS NOT NULL on a selected column
    if (auto* isn = std::get_if<IsNullPred>(&c->node); isn && isn->negated) {
      if (auto* col = std::get_if<ColumnRef>(&isn->operand->node);
          col && selected_cols.count(col->column)) {
        base_where.push_back(c);
        continue;
      }
    }
    // schema-plumbing equality rides with the previous peeled condition
    bool plumbing = false;
    if (auto* b = std::get_if<Binary>(&c->node); b && b->op == BinaryOp::Eq) {
      if (auto* col = std::get_if<ColumnRef>(&b->lhs->node);
          col && cfg.plumbing_columns.count(col_key(*col)) &&
          std::holds_alternative<Literal>(b->rhs->node))
        plumbing = true;
    }
    if (plumbing) {
      if (!peels.empty())
        peels.back().push_back(c);
      else
        base_where.push_back(c);
      continue;
    }
    peels.push_back({c});
  }

  bool has_agg = false;
  for (const auto& item : sel.items) has_agg = has_agg || contains_aggregate(item.expr);

  bool agg_peel = false;
  std::vector<ColumnRef> base_cols;
  if (has_agg) {
    agg_peel = sel.joins.empty() && sel.from && !sel.from->is_derived() &&
               !sel.distinct && sel.order_by.empty() && !sel.limit;
    auto add_col = [&](const ColumnRef& c) {
      for (const auto& existing : base_cols)
        if (col_key(existing) == col_key(c)) return;
      base_cols.push_back(c);
    };
    if (agg_peel) {
      for (const auto& g : sel.group_by) {
        if (auto* c = std::get_if<ColumnRef>(&g->node))
          add_col(*c);
        else
          agg_peel = false;
      }
      for (const auto& item : sel.items) {
        if (auto* c = std::get_if<ColumnRef>(&item.expr->node)) {
          add_col(*c);
        } else if (auto* f = std::get_if<FuncCall>(&item.expr->node);
                   f && is_plain_agg(*f)) {
          if (!f->star) add_col(std::get<ColumnRef>(f->args[0]->node));
        } else {
          agg_peel = false;
        }
      }
    }
    if (agg_peel) {
      // derived-table columns are exposed by short name; require uniqueness
      std::set<std::string> shorts;
      for (const auto& c : base_cols)
        if (!shorts.insert(c.column).second) agg_peel = false;
      if (base_cols.empty()) agg_peel = false;
    }
    if (!agg_peel) return unchanged(turn.origin);
  }
  if (sel.having && !agg_peel) return unchanged(turn.origin);

  bool peel_order = !agg_peel && (!sel.order_by.empty() || sel.limit.has_value());
  if (peels.empty() && !peel_order && !agg_peel) return unchanged(turn.origin);

  std::vector<TurnSql> out;
  int idx = start_index;
  auto push = [&](SqlAst ast) {
    TurnSql t;
    t.index = idx++;
    t.ast = std::move(ast);
    t.origin = TurnOrigin::Stage2;
    out.push_back(std::move(t));
  };

  SelectStmt base = sel;
  base.where = conjoin(base_where);
  if (agg_peel) {
    base.items.clear();
    for (const auto& c : base_cols)
      base.items.push_back(SelectItem{make_expr(Expr{c}), std::nullopt});
    base.group_by.clear();
    base.having = nullptr;
  }
  if (peel_order) {
    base.order_by.clear();
    base.limit.reset();
  }
  push(SqlAst{make_select(std::move(base))});

  bool has_where = !base_where.empty();
  for (const auto& group : peels) {
    PrevExtension ext;
    ext.base = TokenRef{TokenKind::Query, idx - 1};
    ext.kind = has_where ? ExtClauseKind::AndPred : ExtClauseKind::WherePred;
    ext.pred = conjoin(group);
    has_where = true;
    push(SqlAst{std::move(ext)});
  }
  if (peel_order) {
    PrevExtension ext;
    ext.base = TokenRef{TokenKind::Query, idx - 1};
    ext.kind = ExtClauseKind::OrderLimit;
    ext.order_by = sel.order_by;
    ext.limit = sel.limit;
    push(SqlAst{std::move(ext)});
  }
  if (agg_peel) {
    const std::string alias = "t1";
    std::function<ExprPtr(const ExprPtr&)> rq = [&](const ExprPtr& e) -> ExprPtr {
      if (!e) return e;
      if (auto* c = std::get_if<ColumnRef>(&e->node))
        return make_expr(Expr{ColumnRef{alias, c->column}});
      if (auto* f = std::get_if<FuncCall>(&e->node)) {
        FuncCall out_f = *f;
        for (auto& a : out_f.args) a = rq(a);
        return make_expr(Expr{std::move(out_f)});
      }
      if (auto* b = std::get_if<Binary>(&e->node))
        return make_expr(Expr{Binary{b->op, rq(b->lhs), rq(b->rhs)}});
      return e;
    };
    SelectStmt agg;
    agg.from = TableRef{"", TokenRef{TokenKind::Query, idx - 1}, alias};
    for (const auto& item : sel.items)
      agg.items.push_back(SelectItem{rq(item.expr), item.alias});
    for (const auto& g : sel.group_by) agg.group_by.push_back(rq(g));
    push(SqlAst{make_select(std::move(agg))});
    if (sel.having) {
      PrevExtension ext;
      ext.base = TokenRef{TokenKind::Query, idx - 1};
      ext.kind = ExtClauseKind::HavingPred;
      ext.pred = rq(sel.having);
      push(SqlAst{std::move(ext)});
    }
  }

  if (out.size() == 1) return unchanged(turn.origin);
  return out;
}

DecompositionPlan decompose_pipeline(const SqlAst& ast, const DecomposeConfig& cfg) {
  DecompositionPlan plan;
  plan.source = ast;
  auto stage1 = decompose_nesting(ast);
  std::map<int, int> last_of;  // stage-1 index -> final index of its group
  for (const auto& s1_turn : stage1) {
    TurnSql t = s1_turn;
    t.ast = renumber_refs(t.ast, [&](int old) {
      auto it = last_of.find(old);
      if (it == last_of.end())
        throw ResolutionError("forward reference in stage-1 output");
      return it->second;
    });
    auto group = decompose_clauses(t, static_cast<int>(plan.turns.size()) + 1, cfg);
    for (auto& g : group) plan.turns.push_back(std::move(g));
    last_of[s1_turn.index] = plan.turns.back().index;
  }
  validate_plan(plan);
  return plan;
}

SelectPtr fuse_extension(const SelectPtr& base, const PrevExtension& ext) {
  SelectStmt s = *base;
  auto conj = [&](ExprPtr cur, ExprPtr add) {
    return cur ? make_expr(Expr{Binary{BinaryOp::And, cur, add}}) : add;
  };
  switch (ext.kind) {
    case ExtClauseKind::AndPred:
    case ExtClauseKind::WherePred:
      s.where = conj(s.where, ext.pred);
      break;
    case ExtClauseKind::HavingPred:
      s.having = conj(s.having, ext.pred);
      break;
    case ExtClauseKind::OrderLimit:
      if (!ext.order_by.empty()) s.order_by = ext.order_by;
      if (ext.limit) s.limit = ext.limit;
      break;
  }
  return make_select(std::move(s));
}

namespace {

class Inliner : public AstTransform {
 public:
  Inliner(const std::vector<TurnSql>& turns, int current)
      : turns_(turns), current_(current) {}

  SelectPtr inline_select(int target) {
    if (target < 1 || target >= current_ || target > static_cast<int>(turns_.size()))
      throw ResolutionError("dangling reference to turn " + std::to_string(target));
    const TurnSql& t = turns_[target - 1];
    if (t.ast.is_extension()) {
      const PrevExtension& ext = t.ast.extension();
      Inliner sub(turns_, target);
      SelectPtr base = sub.inline_select(ext.base.turn_index);
      PrevExtension inlined = ext;
      if (inlined.pred) inlined.pred = sub.apply_expr(inlined.pred);
      for (auto& o : inlined.order_by) o.expr = sub.apply_expr(o.expr);
      return fuse_extension(base, inlined);
    }
    Inliner sub(turns_, target);
    return sub.apply_select(t.ast.select());
  }

 protected:
  InRhs on_in_token(const TokenRef& t) override { return inline_select(t.turn_index); }
  ExprPtr on_scalar_token(const TokenRef& t) override {
    return make_expr(Expr{Subquery{inline_select(t.turn_index)}});
  }
  DerivedBody on_derived_token(const TokenRef& t) override {
    return inline_select(t.turn_index);
  }

 private:
  const std::vector<TurnSql>& turns_;
  int current_;
};

}  // namespace

SqlAst inline_all(const std::vector<TurnSql>& turns, int index) {
  if (index < 1 || index > static_cast<int>(turns.size()))
    throw ResolutionError("turn index out of range: " + std::to_string(index));
  Inliner inliner(turns, index + 1);
  return SqlAst{inliner.inline_select(index)};
}

void validate_plan(const DecompositionPlan& plan) {
  for (size_t i = 0; i < plan.turns.size(); ++i) {
    const TurnSql& t = plan.turns[i];
    if (t.index != static_cast<int>(i) + 1)
      throw std::logic_error("non-contiguous turn indices in plan");
    for (const TokenRef& ref : extract_token_refs(t.ast))
      if (ref.turn_index < 1 || ref.turn_index >= t.index)
        throw std::logic_error("turn " + std::to_string(t.index) +
                               " references turn " + std::to_string(ref.turn_index));
  }
}

SqlAst renumber_tokens(const SqlAst& ast, const std::function<int(int)>& fn) {
  Renumber r(fn);
  return r.apply(ast);
}

std::string turn_template_key(const SqlAst& ast, const MaskConfig& cfg) {
  std::string text = mask_template(ast, MaskPolicy::Bpe, cfg).masked_text;
  std::string out;
  size_t i = 0;
  while (i < text.size()) {
    out += text[i];
    ++i;
    for (const char* tok : {"PREV_QUERY", "PREV_RESULT"}) {
      size_t n = std::string(tok).size();
      if (out.size() >= n && out.compare(out.size() - n, n, tok) == 0) {
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
      }
    }
  }
  return out;
}

namespace {

struct PairInfo {
  bool mergeable = false;
  char cls = 0;  // '1' nesting pair, '2' clause pair
  std::string key;
  std::string concat;
};

PairInfo classify_pair(const DecompositionPlan& plan, size_t pos, const MaskConfig& mask) {
  PairInfo info;
  const TurnSql& a = plan.turns[pos];
  const TurnSql& b = plan.turns[pos + 1];
  if (b.ast.is_extension()) {
    const PrevExtension& ext = b.ast.extension();
    if (ext.base.turn_index != a.index) return info;
    if (a.ast.is_extension()) {
      const PrevExtension& ae = a.ast.extension();
      bool ok = ext.kind == ExtClauseKind::AndPred &&
                (ae.kind == ExtClauseKind::AndPred || ae.kind == ExtClauseKind::WherePred);
      if (!ok) return info;
    } else {
      const SelectStmt& as = *a.ast.select();
      if (ext.kind == ExtClauseKind::OrderLimit && (!as.order_by.empty() || as.limit))
        return info;
      if (ext.kind == ExtClauseKind::HavingPred && as.group_by.empty()) return info;
    }
    info.cls = '2';
  } else {
    if (a.ast.is_extension()) return info;
    bool b_refs_a = false;
    for (const TokenRef& r : extract_token_refs(b.ast))
      if (r.turn_index == a.index) b_refs_a = true;
    if (!b_refs_a) return info;
    for (const TurnSql& other : plan.turns) {
      if (other.index == b.index) continue;
      for (const TokenRef& r : extract_token_refs(other.ast))
        if (r.turn_index == a.index) return info;
    }
    info.cls = '1';
  }
  info.mergeable = true;
  std::string ka = turn_template_key(a.ast, mask);
  std::string kb = turn_template_key(b.ast, mask);
  info.concat = ka + " " + kb;
  info.key = std::string(1, info.cls) + '\x1f' + ka + '\x1f' + kb;
  return info;
}

// Merges turn pos+1 into turn pos; renumbers the rest of the plan.
void merge_pair(DecompositionPlan& plan, size_t pos) {
  TurnSql& a = plan.turns[pos];
  TurnSql& b = plan.turns[pos + 1];
  SqlAst merged;
  if (b.ast.is_extension()) {
    const PrevExtension& ext = b.ast.extension();
    if (a.ast.is_extension()) {
      PrevExtension ae = a.ast.extension();
      ae.pred = make_expr(Expr{Binary{BinaryOp::And, ae.pred, ext.pred}});
      merged.stmt = std::move(ae);
    } else {
      merged.stmt = fuse_extension(a.ast.select(), ext);
    }
  } else {
    // substitute a's query text at every token position referencing it
    class Subst : public AstTransform {
     public:
      Subst(int target, SelectPtr body) : target_(target), body_(std::move(body)) {}

     protected:
      InRhs on_in_token(const TokenRef& t) override {
        if (t.turn_index == target_) return body_;
        return t;
      }
      ExprPtr on_scalar_token(const TokenRef& t) override {
        if (t.turn_index == target_) return make_expr(Expr{Subquery{body_}});
        return make_expr(Expr{TokenExpr{t}});
      }
      DerivedBody on_derived_token(const TokenRef& t) override {
        if (t.turn_index == target_) return body_;
        return t;
      }

     private:
      int target_;
      SelectPtr body_;
    };
    Subst subst(a.index, a.ast.select());
    merged = subst.apply(b.ast);
  }
  int removed = a.index;
  TurnSql merged_turn;
  merged_turn.index = removed;
  merged_turn.ast = std::move(merged);
  merged_turn.origin = TurnOrigin::Merged;
  plan.turns[pos] = std::move(merged_turn);
  plan.turns.erase(plan.turns.begin() + pos + 1);
  for (size_t i = 0; i < plan.turns.size(); ++i) {
    plan.turns[i].index = static_cast<int>(i) + 1;
    plan.turns[i].ast = renumber_refs(plan.turns[i].ast, [&](int old) {
      return old > removed ? old - 1 : old;
    });
  }
}

}  // namespace

std::vector<DecompositionPlan> merge_frequent(std::vector<DecompositionPlan> corpus,
                                              const MergeOptions& opts,
                                              const DecomposeConfig& cfg) {
  std::mt19937_64 rng(opts.seed);
  for (;;) {
    struct Occ {
      size_t plan;
      size_t pos;
    };
    std::map<std::string, std::vector<Occ>> occs;
    std::map<std::string, std::string> concat_of;
    for (size_t p = 0; p < corpus.size(); ++p) {
      std::string prev_key;
      bool prev_used = false;
      for (size_t pos = 0; pos + 1 < corpus[p].turns.size(); ++pos) {
        PairInfo info = classify_pair(corpus[p], pos, cfg.mask);
        if (!info.mergeable) {
          prev_used = false;
          continue;
        }
        if (prev_used && info.key == prev_key) {  // skip overlapping occurrence
          prev_used = false;
          continue;
        }
        occs[info.key].push_back(Occ{p, pos});
        concat_of[info.key] = info.concat;
        prev_key = info.key;
        prev_used = true;
      }
    }
    std::string best;
    size_t best_count = 0;
    for (const auto& [key, list] : occs) {
      size_t threshold = key[0] == '1' ? opts.threshold_stage1 : opts.threshold_stage2;
      if (list.size() <= threshold) continue;
      if (best.empty() || list.size() > best_count ||
          (list.size() == best_count && concat_of[key] < concat_of[best])) {
        best = key;
        best_count = list.size();
      }
    }
    if (best.empty()) break;

    auto& list = occs[best];
    size_t k = static_cast<size_t>(std::llround(static_cast<double>(list.size()) *
                                                opts.sample_ratio));
    if (k == 0) k = 1;
    if (k > list.size()) k = list.size();
    std::vector<size_t> order(list.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(k);
    std::vector<Occ> chosen;
    for (size_t i : order) chosen.push_back(list[i]);
    // within a plan merge from the back so earlier positions stay valid
    std::sort(chosen.begin(), chosen.end(), [](const Occ& x, const Occ& y) {
      return x.plan != y.plan ? x.plan < y.plan : x.pos > y.pos;
    });
    for (const Occ& occ : chosen) merge_pair(corpus[occ.plan], occ.pos);
  }
  for (const auto& plan : corpus) validate_plan(plan);
  return corpus;
}

}  // namespace seqsql
