#include "doctest.h"

#include <cstdlib>
#include <random>
#include <sstream>

#include "seqsql/session/session.hpp"
#include "seqsql/splitkit/split.hpp"
#include "seqsql/sqlcore/parser.hpp"

using namespace seqsql;

namespace {

std::string data_path(const std::string& name) {
  const char* dir = std::getenv("SEQSQL_DATA_DIR");
  REQUIRE(dir != nullptr);
  return std::string(dir) + "/" + name;
}

InteractionRecord interaction(const std::string& id, const std::string& source) {
  auto plan = decompose_pipeline(parse_sql(source));
  return record_from_plan(plan, id);
}

}  // namespace

TEST_CASE("interaction records round-trip through jsonl") {
  auto rec = interaction("i1",
      "SELECT chartevents.valuenum FROM chartevents WHERE chartevents.itemid IN "
      "( SELECT d_items.itemid FROM d_items WHERE d_items.label = 'admit wt' )");
  rec.goal_nlq = "what was the admit weight?";
  rec.turns[0].categories = {"INDEPENDENT"};
  std::string line = record_to_json_line(rec);
  InteractionRecord back = record_from_json_line(line);
  CHECK(back.interaction_id == rec.interaction_id);
  CHECK(back.goal_nlq == rec.goal_nlq);
  REQUIRE(back.turns.size() == rec.turns.size());
  for (size_t i = 0; i < rec.turns.size(); ++i) {
    CHECK(back.turns[i].sql == rec.turns[i].sql);
    CHECK(back.turns[i].origin == rec.turns[i].origin);
  }
  auto plan = plan_from_record(back);
  CHECK(plan.turns.size() == rec.turns.size());
}

TEST_CASE("records without a format version are rejected") {
  CHECK_THROWS(record_from_json_line(R"({"interaction_id":"x","turns":[]})"));
}

TEST_CASE("single-query corpus yields one composition") {
  std::vector<InteractionRecord> corpus{
      interaction("a", "SELECT subject_id FROM admissions WHERE hadm_id = 3")};
  auto comps = build_compositions(corpus);
  REQUIRE(comps.size() == 1);
  CHECK(comps[0].members == std::vector<size_t>{0});
  CHECK_FALSE(comps[0].component_set.empty());
}

TEST_CASE("value-substituted interactions share a composition") {
  std::vector<InteractionRecord> corpus{
      interaction("a", "SELECT admissions.hadm_id FROM admissions WHERE admissions.subject_id = 3"),
      interaction("b", "SELECT admissions.hadm_id FROM admissions WHERE admissions.subject_id = 99"),
      interaction("c", "SELECT icustays.icustay_id FROM icustays WHERE icustays.hadm_id = 1"),
  };
  auto comps = build_compositions(corpus);
  REQUIRE(comps.size() == 2);
  CHECK(comps[0].members.size() == 2);
  CHECK(comps[1].members.size() == 1);
  CHECK(comps[0].composition_id == 1);
}

TEST_CASE("three-composition fixture splits last row into test") {
  auto comps = load_composition_fixture(data_path("composition_fixture.json"));
  REQUIRE(comps.size() == 3);
  CHECK(comps[0].component_set.size() == 11);
  CHECK(comps[1].component_set.size() == 11);
  CHECK(comps[2].component_set.size() == 13);
  auto manifest = greedy_split(comps);
  CHECK(manifest.train == std::set<int>{1, 2});
  CHECK(manifest.test == std::set<int>{3});
  CHECK(coverage_holds(comps, manifest));
}

TEST_CASE("single composition stays in train") {
  std::vector<InteractionRecord> corpus{
      interaction("a", "SELECT subject_id FROM admissions WHERE hadm_id = 3")};
  auto manifest = greedy_split(build_compositions(corpus));
  CHECK(manifest.test.empty());
  CHECK(manifest.train.size() == 1);
}

TEST_CASE("greedy split keeps coverage on random corpora") {
  std::mt19937 rng(123);
  for (int trial = 0; trial < 50; ++trial) {
    int n_components = 4 + static_cast<int>(rng() % 12);
    int n_comps = 3 + static_cast<int>(rng() % 10);
    std::vector<CompositionRecord> comps;
    for (int i = 0; i < n_comps; ++i) {
      CompositionRecord c;
      c.composition_id = i + 1;
      int sz = 1 + static_cast<int>(rng() % n_components);
      while (static_cast<int>(c.component_set.size()) < sz)
        c.component_set.insert("c" + std::to_string(rng() % n_components));
      comps.push_back(std::move(c));
    }
    auto manifest = greedy_split(comps);
    CHECK(coverage_holds(comps, manifest));
    CHECK(manifest.train.size() + manifest.test.size() == comps.size());
    // every move was legal: re-verify each test member against final train
    std::set<std::string> pool;
    for (const auto& c : comps)
      if (manifest.train.count(c.composition_id))
        pool.insert(c.component_set.begin(), c.component_set.end());
    for (const auto& c : comps)
      if (manifest.test.count(c.composition_id))
        for (const auto& k : c.component_set) CHECK(pool.count(k) == 1);
  }
}

TEST_CASE("context graph links interactions sharing a condition value") {
  std::vector<InteractionRecord> corpus{
      interaction("a", "SELECT admissions.hadm_id FROM admissions WHERE admissions.subject_id = 85895"),
      interaction("b", "SELECT icustays.icustay_id FROM icustays WHERE icustays.hadm_id IN "
                       "( SELECT admissions.hadm_id FROM admissions WHERE admissions.subject_id = 85895 )"),
      interaction("c", "SELECT prescriptions.drug FROM prescriptions WHERE prescriptions.route = 'po'"),
  };
  auto graph = build_context_graph(corpus);
  CHECK(graph.adjacency[0].count(1) == 1);
  CHECK(graph.adjacency[1].count(0) == 1);
  CHECK(graph.adjacency[0].count(2) == 0);
  CHECK(graph.adjacency[2].empty());
}

TEST_CASE("long interactions renumber tokens and stay executable") {
  std::vector<InteractionRecord> corpus{
      interaction("a", "SELECT icustays.icustay_id FROM icustays WHERE icustays.hadm_id IN "
                       "( SELECT admissions.hadm_id FROM admissions WHERE admissions.subject_id = 30826 )"),
      interaction("b", "SELECT admissions.dischtime FROM admissions WHERE admissions.subject_id = 30826"),
      interaction("c", "SELECT chartevents.valuenum FROM chartevents WHERE chartevents.icustay_id IN "
                       "( SELECT icustays.icustay_id FROM icustays WHERE icustays.hadm_id IN "
                       "( SELECT admissions.hadm_id FROM admissions WHERE admissions.subject_id = 30826 ) )"),
  };
  auto graph = build_context_graph(corpus);
  LongGenOptions opts;
  opts.count = 5;
  opts.seed = 9;
  opts.target_turns = 8;
  auto longs = generate_long_interactions(corpus, graph, opts);
  REQUIRE(longs.size() == 5);
  for (const auto& rec : longs) {
    CHECK(rec.turns.size() > corpus[0].turns.size());
    auto plan = plan_from_record(rec);  // validates backward references
    for (size_t i = 0; i < plan.turns.size(); ++i)
      CHECK(plan.turns[i].index == static_cast<int>(i) + 1);
    Db db = Db::in_memory();
    db.exec("CREATE TABLE admissions (subject_id INT, hadm_id INT, dischtime TEXT);"
            "CREATE TABLE icustays (icustay_id INT, hadm_id INT);"
            "CREATE TABLE chartevents (icustay_id INT, valuenum REAL);"
            "INSERT INTO admissions VALUES (30826, 1, NULL);"
            "INSERT INTO icustays VALUES (7, 1);"
            "INSERT INTO chartevents VALUES (7, 1.5);");
    CHECK_NOTHROW(replay_interaction(db, plan.turns));
  }
  auto again = generate_long_interactions(corpus, graph, opts);
  REQUIRE(again.size() == longs.size());
  for (size_t i = 0; i < longs.size(); ++i) {
    REQUIRE(again[i].turns.size() == longs[i].turns.size());
    for (size_t k = 0; k < longs[i].turns.size(); ++k)
      CHECK(again[i].turns[k].sql == longs[i].turns[k].sql);
  }
}

TEST_CASE("zero requested long interactions yields an empty list") {
  std::vector<InteractionRecord> corpus{
      interaction("a", "SELECT subject_id FROM admissions WHERE hadm_id = 3")};
  auto graph = build_context_graph(corpus);
  LongGenOptions opts;
  opts.count = 0;
  CHECK(generate_long_interactions(corpus, graph, opts).empty());
}
