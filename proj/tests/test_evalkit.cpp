#include "doctest.h"

#include <algorithm>
#include <random>
#include <set>

#include "seqsql/evalkit/eval.hpp"
#include "seqsql/sqlcore/parser.hpp"

using namespace seqsql;

namespace {

Db small_db() {
  Db db = Db::in_memory();
  db.exec("CREATE TABLE admissions (subject_id INT, hadm_id INT);"
          "INSERT INTO admissions VALUES (1, 10), (1, 11), (2, 20);"
          "CREATE TABLE icustays (icustay_id INT, hadm_id INT);"
          "INSERT INTO icustays VALUES (5, 10), (6, 11), (7, 20);");
  return db;
}

InteractionRecord two_turn(const std::string& id) {
  InteractionRecord rec;
  rec.interaction_id = id;
  rec.turns.push_back({1, "SELECT hadm_id FROM admissions WHERE subject_id = 1", "", {}, ""});
  rec.turns.push_back(
      {2, "SELECT icustay_id FROM icustays WHERE hadm_id IN ( PREV_RESULT1 )", "", {}, ""});
  return rec;
}

PredictionMap gold_preds(const std::vector<InteractionRecord>& corpus) {
  PredictionMap preds;
  for (const auto& rec : corpus)
    for (const auto& t : rec.turns) preds[{rec.interaction_id, t.index}] = t.sql;
  return preds;
}

}  // namespace

TEST_CASE("iff follows the first-failure rule") {
  CHECK(iff({true, true, true, true, true}) == 6);
  CHECK(iff({true, true, false, true}) == 3);
  CHECK(iff({false}) == 1);
  CHECK(iff({true}) == 2);
  CHECK_THROWS_AS(iff({}), std::invalid_argument);
}

TEST_CASE("result comparison is multiset unless ordered") {
  ResultTable a{{"x"}, {{Value{1LL}}, {Value{2LL}}}};
  ResultTable b{{"x"}, {{Value{2LL}}, {Value{1LL}}}};
  CHECK(results_equal(a, b, false));
  CHECK_FALSE(results_equal(a, b, true));
  CHECK(results_equal(a, a, true));
  ResultTable c{{"x"}, {{Value{1LL}}}};
  CHECK_FALSE(results_equal(a, c, false));
}

TEST_CASE("semantically equivalent predictions count as correct") {
  Db g = small_db();
  Db p = small_db();
  Session gs(g), ps(p);
  CHECK(execution_match("SELECT 2 - 1", "SELECT 1", ps, gs));
}

TEST_CASE("perfect predictions score full marks") {
  std::vector<InteractionRecord> gold{two_turn("a"), two_turn("b")};
  auto report = score_corpus(gold, gold_preds(gold), EvalMode::QS, small_db);
  CHECK(report.qm == doctest::Approx(1.0));
  CHECK(report.im == doctest::Approx(1.0));
  CHECK(report.iff_mean == doctest::Approx(3.0));
}

TEST_CASE("one wrong turn in four gives the forced arithmetic") {
  std::vector<InteractionRecord> gold{two_turn("a"), two_turn("b")};
  auto preds = gold_preds(gold);
  preds[{"b", 2}] = "SELECT icustay_id FROM icustays WHERE hadm_id = -1";
  auto report = score_corpus(gold, preds, EvalMode::QS, small_db);
  CHECK(report.qm == doctest::Approx(0.75));
  CHECK(report.im == doctest::Approx(0.5));
}

TEST_CASE("errors propagate to turns referencing a failed turn") {
  std::vector<InteractionRecord> gold{two_turn("a")};
  auto preds = gold_preds(gold);
  preds[{"a", 1}] = "SELECT nonexistent FROM admissions";
  auto report = score_corpus(gold, preds, EvalMode::QS, small_db);
  CHECK(report.qm == doctest::Approx(0.0));
  REQUIRE(report.details.size() == 2);
  CHECK(report.details[0].reason.substr(0, 9) == "execution");
  CHECK(report.details[1].reason == "propagated");
}

TEST_CASE("missing predictions score false without aborting") {
  std::vector<InteractionRecord> gold{two_turn("a")};
  PredictionMap preds;
  preds[{"a", 2}] = gold[0].turns[1].sql;
  auto report = score_corpus(gold, preds, EvalMode::QS, small_db);
  CHECK(report.details[0].reason == "missing prediction");
  // turn 2 references the failed turn 1
  CHECK(report.details[1].reason == "propagated");
}

TEST_CASE("controlled corruption: qm is exactly one minus k over n") {
  std::mt19937 rng(31337);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<InteractionRecord> gold;
    for (int i = 0; i < 5; ++i) gold.push_back(two_turn("i" + std::to_string(i)));
    auto preds = gold_preds(gold);
    size_t n = 10;
    size_t k = rng() % (n + 1);
    // corrupt k distinct final turns so no propagation is involved
    std::vector<std::pair<std::string, int>> keys;
    for (const auto& rec : gold) {
      keys.push_back({rec.interaction_id, 2});
      keys.push_back({rec.interaction_id, 1});
    }
    std::shuffle(keys.begin(), keys.end(), rng);
    std::set<std::string> corrupted_t1;
    size_t flipped = 0;
    for (const auto& key : keys) {
      if (flipped == k) break;
      if (key.second == 1) {
        // corrupting turn 1 would also fail turn 2; only use if turn 2 corrupted
        continue;
      }
      preds[key] = "SELECT icustay_id FROM icustays WHERE hadm_id = -1";
      ++flipped;
    }
    k = flipped;  // only final turns corrupted in this harness
    auto report = score_corpus(gold, preds, EvalMode::QS, small_db);
    CHECK(report.qm == doctest::Approx(1.0 - static_cast<double>(k) / n));
    CHECK(report.im <= report.qm + 1e-12);
  }
}

TEST_CASE("prediction files round-trip") {
  PredictionMap preds;
  preds[{"a", 1}] = "SELECT 1";
  preds[{"a", 2}] = "SELECT 2";
  std::string path = "/tmp/seqsql_preds_test.jsonl";
  write_predictions_file(path, preds);
  auto back = read_predictions_file(path);
  CHECK(back == preds);
}
