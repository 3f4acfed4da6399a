#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "seqsql/decomposer/decompose.hpp"
#include "seqsql/sqlcore/ast.hpp"

struct sqlite3;

namespace seqsql {

struct SessionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NULL, INTEGER, REAL or TEXT cell.
using Value = std::variant<std::monostate, long long, double, std::string>;

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;
};

std::string value_to_string(const Value& v);

// RAII SQLite connection with a statement counter.
class Db {
 public:
  explicit Db(const std::string& path);
  ~Db();
  Db(Db&&) noexcept;
  Db& operator=(Db&&) noexcept;
  Db(const Db&) = delete;
  Db& operator=(const Db&) = delete;

  static Db in_memory() { return Db(":memory:"); }

  sqlite3* handle() { return db_; }

  // Runs one statement and collects all rows. Counts toward
  // statements_executed().
  ResultTable query(const std::string& sql);
  // Runs DDL / DML without collecting rows.
  void exec(const std::string& sql);

  size_t statements_executed() const { return statements_; }
  std::vector<std::string> table_names();

 private:
  sqlite3* db_ = nullptr;
  size_t statements_ = 0;
};

struct TurnResult {
  int index = 0;
  std::string turn_sql;      // as issued, may carry tokens
  std::string resolved_sql;  // standard SQL actually executed
  ResultTable table;
  double exec_ms = 0.0;
};

// One multi-turn interaction against a database. Each turn is executed
// exactly once; PREV_RESULT tokens are served from the cached tables and
// PREV_QUERY tokens inline the referenced turn's resolved statement.
class Session {
 public:
  explicit Session(Db& db) : db_(&db) {}

  const TurnResult& run_turn(const SqlAst& ast);
  const TurnResult& run_turn(const std::string& sql);  // parses first

  // Token-free statement for a turn about to become index turn_count()+1.
  SqlAst resolve(const SqlAst& ast) const;

  const std::vector<TurnResult>& history() const { return results_; }
  const std::vector<SqlAst>& turns() const { return turns_; }
  int turn_count() const { return static_cast<int>(turns_.size()); }

  // Single-query equivalent of turn i, built from the issued turns.
  SqlAst inline_turn(int i) const;

 private:
  Db* db_;
  std::vector<SqlAst> turns_;
  std::vector<SelectPtr> resolved_;  // per turn, token-free
  std::vector<TurnResult> results_;
};

// Runs a whole plan in order on a fresh session.
std::vector<TurnResult> replay_interaction(Db& db, const std::vector<TurnSql>& turns);

// Names from `required` that the database lacks.
std::vector<std::string> missing_tables(Db& db, const std::vector<std::string>& required);

}  // namespace seqsql
