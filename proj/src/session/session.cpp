#include "seqsql/session/session.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "seqsql/sqlcore/errors.hpp"
#include "seqsql/sqlcore/parser.hpp"
#include "seqsql/sqlcore/render.hpp"
#include "seqsql/sqlcore/transform.hpp"

namespace seqsql {

std::string value_to_string(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "NULL";
        } else if constexpr (std::is_same_v<T, long long>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, double>) {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.17g", x);
          return buf;
        } else {
          return x;
        }
      },
      v);
}

Db::Db(const std::string& path) {
  if (sqlite3_open(path.c_str(), &db_) != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    if (db_) sqlite3_close(db_);
    db_ = nullptr;
    throw SessionError("cannot open database '" + path + "': " + msg);
  }
}

Db::~Db() {
  if (db_) sqlite3_close(db_);
}

Db::Db(Db&& o) noexcept : db_(o.db_), statements_(o.statements_) { o.db_ = nullptr; }

Db& Db::operator=(Db&& o) noexcept {
  if (this != &o) {
    if (db_) sqlite3_close(db_);
    db_ = o.db_;
    statements_ = o.statements_;
    o.db_ = nullptr;
  }
  return *this;
}

ResultTable Db::query(const std::string& sql) {
  sqlite3_stmt* stmt = nullptr;
  if (sqlite3_prepare_v2(db_, sql.c_str(), -1, &stmt, nullptr) != SQLITE_OK) {
    std::string msg = sqlite3_errmsg(db_);
    throw SessionError("prepare failed: " + msg + " in: " + sql);
  }
  ++statements_;
  ResultTable out;
  int ncol = sqlite3_column_count(stmt);
  for (int c = 0; c < ncol; ++c) {
    const char* name = sqlite3_column_name(stmt, c);
    out.columns.push_back(name ? name : "");
  }
  int rc;
  while ((rc = sqlite3_step(stmt)) == SQLITE_ROW) {
    std::vector<Value> row;
    row.reserve(ncol);
    for (int c = 0; c < ncol; ++c) {
      switch (sqlite3_column_type(stmt, c)) {
        case SQLITE_INTEGER:
          row.emplace_back(static_cast<long long>(sqlite3_column_int64(stmt, c)));
          break;
        case SQLITE_FLOAT:
          row.emplace_back(sqlite3_column_double(stmt, c));
          break;
        case SQLITE_NULL:
          row.emplace_back(std::monostate{});
          break;
        default:
          row.emplace_back(std::string(
              reinterpret_cast<const char*>(sqlite3_column_text(stmt, c))));
      }
    }
    out.rows.push_back(std::move(row));
  }
  if (rc != SQLITE_DONE) {
    std::string msg = sqlite3_errmsg(db_);
    sqlite3_finalize(stmt);
    throw SessionError("step failed: " + msg + " in: " + sql);
  }
  sqlite3_finalize(stmt);
  return out;
}

void Db::exec(const std::string& sql) {
  char* err = nullptr;
  if (sqlite3_exec(db_, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw SessionError("exec failed: " + msg);
  }
}

std::vector<std::string> Db::table_names() {
  ResultTable t = query("SELECT name FROM sqlite_master WHERE type = 'table'");
  --statements_;  // metadata lookup, not a session statement
  std::vector<std::string> out;
  for (const auto& row : t.rows)
    if (auto* s = std::get_if<std::string>(&row[0])) out.push_back(*s);
  return out;
}

namespace {

Literal value_to_literal(const Value& v) {
  return std::visit(
      [](const auto& x) -> Literal {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return Literal{LiteralType::Null, "NULL"};
        } else if constexpr (std::is_same_v<T, long long>) {
          return Literal{LiteralType::Integer, std::to_string(x)};
        } else if constexpr (std::is_same_v<T, double>) {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.17g", x);
          return Literal{LiteralType::Real, buf};
        } else {
          return Literal{LiteralType::Text, x};
        }
      },
      v);
}

// Replaces tokens with cached results / resolved prior statements.
class Resolver : public AstTransform {
 public:
  Resolver(const std::vector<SelectPtr>& resolved,
           const std::vector<TurnResult>& results, int current)
      : resolved_(resolved), results_(results), current_(current) {}

  const SelectPtr& prior(int i) {
    check(i);
    return resolved_[i - 1];
  }
  const ResultTable& table(int i) {
    check(i);
    return results_[i - 1].table;
  }

 protected:
  InRhs on_in_token(const TokenRef& t) override {
    const ResultTable& tab = table(t.turn_index);
    std::vector<ExprPtr> list;
    for (const auto& row : tab.rows) {
      if (row.empty()) continue;
      list.push_back(make_expr(Expr{value_to_literal(row[0])}));
    }
    if (list.empty()) list.push_back(make_expr(Expr{Literal{LiteralType::Null, "NULL"}}));
    return list;
  }
  ExprPtr on_scalar_token(const TokenRef& t) override {
    const ResultTable& tab = table(t.turn_index);
    if (tab.rows.size() != 1 || tab.rows[0].size() != 1)
      throw ResolutionError("PREV_RESULT" + std::to_string(t.turn_index) +
                            " used as a scalar but has " +
                            std::to_string(tab.rows.size()) + " rows");
    return make_expr(Expr{value_to_literal(tab.rows[0][0])});
  }
  DerivedBody on_derived_token(const TokenRef& t) override {
    return prior(t.turn_index);
  }

 private:
  void check(int i) {
    if (i < 1 || i >= current_)
      throw ResolutionError("reference to turn " + std::to_string(i) +
                            " from turn " + std::to_string(current_));
  }

  const std::vector<SelectPtr>& resolved_;
  const std::vector<TurnResult>& results_;
  int current_;
};

}  // namespace

SqlAst Session::resolve(const SqlAst& ast) const {
  Resolver r(resolved_, results_, turn_count() + 1);
  if (ast.is_extension()) {
    const PrevExtension& ext = ast.extension();
    SelectPtr base = r.prior(ext.base.turn_index);
    PrevExtension res = ext;
    if (res.pred) res.pred = r.apply_expr(res.pred);
    for (auto& o : res.order_by) o.expr = r.apply_expr(o.expr);
    return SqlAst{fuse_extension(base, res)};
  }
  return r.apply(ast);
}

const TurnResult& Session::run_turn(const SqlAst& ast) {
  SqlAst resolved = resolve(ast);
  TurnResult res;
  res.index = turn_count() + 1;
  res.turn_sql = render_sql(ast);
  res.resolved_sql = render_sql(resolved);
  auto start = std::chrono::steady_clock::now();
  res.table = db_->query(res.resolved_sql);
  auto end = std::chrono::steady_clock::now();
  res.exec_ms = std::chrono::duration<double, std::milli>(end - start).count();
  turns_.push_back(ast);
  resolved_.push_back(resolved.select());
  results_.push_back(std::move(res));
  return results_.back();
}

const TurnResult& Session::run_turn(const std::string& sql) {
  return run_turn(parse_sql(sql));
}

SqlAst Session::inline_turn(int i) const {
  std::vector<TurnSql> plan;
  for (size_t k = 0; k < turns_.size(); ++k)
    plan.push_back(TurnSql{static_cast<int>(k) + 1, turns_[k], TurnOrigin::Stage1});
  return inline_all(plan, i);
}

std::vector<TurnResult> replay_interaction(Db& db, const std::vector<TurnSql>& turns) {
  Session s(db);
  for (const auto& t : turns) s.run_turn(t.ast);
  return s.history();
}

std::vector<std::string> missing_tables(Db& db, const std::vector<std::string>& required) {
  auto present = db.table_names();
  std::vector<std::string> out;
  for (const auto& name : required)
    if (std::find(present.begin(), present.end(), name) == present.end())
      out.push_back(name);
  return out;
}

}  // namespace seqsql
