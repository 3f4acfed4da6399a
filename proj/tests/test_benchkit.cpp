#include "doctest.h"

#include <cstdio>

#include "seqsql/benchkit/bench.hpp"
#include "seqsql/benchkit/corpusgen.hpp"
#include "seqsql/evalkit/eval.hpp"
#include "seqsql/sqlcore/parser.hpp"

using namespace seqsql;

TEST_CASE("synthetic db fills every table with foreign-key closure") {
  Db db = Db::in_memory();
  SynthDbSpec spec;
  spec.n_patients = 1;
  spec.seed = 3;
  synth_db(spec, db);
  for (const auto& table : kSchemaTables) {
    auto t = db.query("SELECT COUNT(*) FROM " + table);
    CAPTURE(table);
    CHECK(std::get<long long>(t.rows[0][0]) > 0);
  }
  const char* fk_checks[] = {
      "SELECT COUNT(*) FROM icustays WHERE hadm_id NOT IN (SELECT hadm_id FROM admissions)",
      "SELECT COUNT(*) FROM chartevents WHERE icustay_id NOT IN (SELECT icustay_id FROM icustays)",
      "SELECT COUNT(*) FROM chartevents WHERE itemid NOT IN (SELECT itemid FROM d_items)",
      "SELECT COUNT(*) FROM labevents WHERE hadm_id NOT IN (SELECT hadm_id FROM admissions)",
      "SELECT COUNT(*) FROM labevents WHERE itemid NOT IN (SELECT itemid FROM d_labitems)",
      "SELECT COUNT(*) FROM prescriptions WHERE hadm_id NOT IN (SELECT hadm_id FROM admissions)",
      "SELECT COUNT(*) FROM cost WHERE hadm_id NOT IN (SELECT hadm_id FROM admissions)",
      "SELECT COUNT(*) FROM outputevents WHERE icustay_id NOT IN (SELECT icustay_id FROM icustays)",
  };
  for (const char* sql : fk_checks) {
    CAPTURE(sql);
    CHECK(std::get<long long>(db.query(sql).rows[0][0]) == 0);
  }
}

TEST_CASE("synthetic db scales linearly and deterministically") {
  auto count_events = [](size_t patients) {
    Db db = Db::in_memory();
    SynthDbSpec spec;
    spec.n_patients = patients;
    spec.seed = 7;
    synth_db(spec, db);
    return std::get<long long>(
        db.query("SELECT COUNT(*) FROM labevents").rows[0][0]);
  };
  long long small = count_events(50);
  long long large = count_events(500);
  double ratio = static_cast<double>(large) / static_cast<double>(small);
  CHECK(ratio > 7.0);
  CHECK(ratio < 13.0);

  // identical spec, identical logical content
  Db a = Db::in_memory();
  Db b = Db::in_memory();
  SynthDbSpec spec;
  spec.n_patients = 20;
  spec.seed = 11;
  synth_db(spec, a);
  synth_db(spec, b);
  for (const auto& table : kSchemaTables) {
    auto ra = a.query("SELECT * FROM " + table + " ORDER BY row_id");
    auto rb = b.query("SELECT * FROM " + table + " ORDER BY row_id");
    CHECK(ra.rows == rb.rows);
  }
}

TEST_CASE("generated corpus parses and decomposes into multi-turn plans") {
  CorpusGenOptions opts;
  opts.count = 60;
  opts.seed = 5;
  auto queries = generate_nested_queries(opts);
  REQUIRE(queries.size() == 60);
  for (const auto& q : queries) {
    CAPTURE(q);
    auto plan = decompose_pipeline(parse_sql(q));
    CHECK(plan.turns.size() >= 2);
  }
  auto again = generate_nested_queries(opts);
  CHECK(again == queries);
}

TEST_CASE("time_query records the requested number of samples") {
  std::string path = "/tmp/seqsql_bench_tiny.db";
  SynthDbSpec spec;
  spec.n_patients = 5;
  synth_db_file(spec, path);
  auto t = time_query(path, "SELECT COUNT(*) FROM admissions", 3);
  CHECK(t.samples.size() == 3);
  CHECK(t.avg_ms >= 0.0);
  CHECK(t.median_ms >= 0.0);
  std::remove(path.c_str());
}

TEST_CASE("compare_execution pairs tokenized and standard runs") {
  std::string path = "/tmp/seqsql_bench_cmp.db";
  SynthDbSpec spec;
  spec.n_patients = 40;
  spec.seed = 2;
  synth_db_file(spec, path);

  CorpusGenOptions copts;
  copts.count = 12;
  copts.seed = 21;
  copts.n_patients = 40;
  std::vector<InteractionRecord> corpus;
  int n = 0;
  for (const auto& q : generate_nested_queries(copts))
    corpus.push_back(record_from_plan(decompose_pipeline(parse_sql(q)),
                                      "q" + std::to_string(++n)));
  auto report = compare_execution(corpus, path, 0.0, 2);
  CHECK_FALSE(report.rows.empty());
  size_t accounted = 0;
  for (const auto& row : report.rows) {
    CHECK_FALSE(row.error);
    if (!row.error) ++accounted;
    CHECK(row.standard.samples.size() == 2);
  }
  CHECK(report.included + report.excluded == accounted);
  CHECK(compare_execution({}, path, 0.0, 1).rows.empty());
  std::remove(path.c_str());
}
