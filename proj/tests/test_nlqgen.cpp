#include "doctest.h"

#include <cstdlib>
#include <set>

#include "seqsql/benchkit/corpusgen.hpp"
#include "seqsql/corpus/record.hpp"
#include "seqsql/nlqgen/nlqgen.hpp"
#include "seqsql/sqlcore/parser.hpp"

using namespace seqsql;

namespace {

std::string data_dir() {
  const char* env = std::getenv("SEQSQL_DATA_DIR");
  REQUIRE(env != nullptr);
  return env;
}

const NlqResources& resources() {
  static const NlqResources res = load_nlq_resources(data_dir());
  return res;
}

const char* kGoalSql =
    "SELECT admissions.subject_id, prescriptions.startdate FROM prescriptions "
    "JOIN admissions ON prescriptions.hadm_id = admissions.hadm_id WHERE "
    "prescriptions.drug = 'nateglinide' AND prescriptions.startdate >= "
    "'2104-01-01'";

}  // namespace

TEST_CASE("normalization abstracts identifiers and condition values") {
  auto tpl = normalize_subquery(parse_sql(
      "SELECT d_items.itemid FROM d_items WHERE d_items.label = 'admit wt'"));
  CHECK(tpl.masked_text ==
        "SELECT table.column FROM table WHERE table.column = [val_placeholder]");
  REQUIRE(tpl.slots.size() == 4);
  CHECK(tpl.slots[0].original == "d_items.itemid");
  CHECK(tpl.slots[3].original == "'admit wt'");

  // abstract text is a fixed point
  auto again = normalize_subquery(parse_sql("SELECT table.column FROM table"));
  CHECK(again.masked_text == "SELECT table.column FROM table");
}

TEST_CASE("every decomposed corpus turn matches a bundled template") {
  CorpusGenOptions opts;
  opts.count = 120;
  opts.seed = 31;
  for (const auto& q : generate_nested_queries(opts)) {
    auto plan = decompose_pipeline(parse_sql(q));
    for (const auto& turn : plan.turns) {
      auto tpl = normalize_subquery(turn.ast);
      CAPTURE(tpl.masked_text);
      CHECK(resources().templates.find_sql(tpl.masked_text) != nullptr);
    }
  }
}

TEST_CASE("slot filling reproduces the reference sentence") {
  CHECK(generate_nlq(parse_sql(kGoalSql), resources()) ==
        "List all patient ids and their prescription time associated with "
        "nateglinide last year.");
}

TEST_CASE("generation is deterministic per seed and varied across seeds") {
  auto ast = parse_sql("SELECT admissions.hadm_id FROM admissions");
  std::set<std::string> seen;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    std::string a = generate_nlq(ast, resources(), seed);
    CHECK(a == generate_nlq(ast, resources(), seed));
    seen.insert(a);
  }
  CHECK(seen.size() > 1);  // the paraphrase bank has variants for this row
}

TEST_CASE("unmatched templates and lexicon misses raise") {
  CHECK_THROWS_AS(generate_nlq(parse_sql("SELECT COUNT(*) FROM admissions "
                                         "WHERE admissions.subject_id = 3"),
                               resources()),
                  NlqError);
  CHECK_THROWS_AS(generate_nlq(parse_sql("SELECT widgets.sprocket FROM widgets"),
                               resources()),
                  NlqError);
}

TEST_CASE("questions state every condition value and turn reference") {
  CorpusGenOptions opts;
  opts.count = 80;
  opts.seed = 17;
  uint64_t seed = 0;
  for (const auto& q : generate_nested_queries(opts)) {
    auto plan = decompose_pipeline(parse_sql(q));
    for (const auto& turn : plan.turns) {
      std::string nlq = generate_nlq(turn.ast, resources(), seed++);
      CAPTURE(nlq);
      CHECK(nlq_covers_sql(turn.ast, nlq));
    }
  }
}

TEST_CASE("bank variants preserve the placeholders of their template") {
  for (const auto& [id, variants] : resources().paraphrases) {
    const NlqTemplate* row = resources().templates.find_id(id);
    REQUIRE(row != nullptr);
    for (const auto& v : variants) {
      CAPTURE(v);
      CHECK(validate_paraphrase(row->nlq_template, v).ok);
    }
  }
}

TEST_CASE("paraphrase validation flags exactly the mutated slots") {
  CHECK(validate_paraphrase("List all [SELECT.col] of [val_placeholder].",
                            "List all [SELECT.col] of [val_placeholder].")
            .ok);
  auto dropped = validate_paraphrase(
      "List all [SELECT.col] of [val_placeholder].", "List all [SELECT.col].");
  CHECK_FALSE(dropped.ok);
  REQUIRE(dropped.missing.size() == 1);
  CHECK(dropped.missing[0] == "val_placeholder");

  // systematic mutations over the whole template table
  int mutations = 0;
  for (const auto& row : resources().templates.rows) {
    const std::string& t = row.nlq_template;
    size_t open = t.find('[');
    size_t close = t.find(']', open);
    REQUIRE(open != std::string::npos);
    std::string ph = t.substr(open, close - open + 1);

    std::string removed = t.substr(0, open) + t.substr(close + 1);
    auto r = validate_paraphrase(t, removed);
    CHECK_FALSE(r.ok);
    CHECK_FALSE(r.missing.empty());
    ++mutations;

    std::string doubled = t + " " + ph;
    auto d = validate_paraphrase(t, doubled);
    CHECK_FALSE(d.ok);
    CHECK_FALSE(d.duplicated.empty());
    ++mutations;

    // wording-only edits stay valid
    CHECK(validate_paraphrase(t, "Please, " + t).ok);
    ++mutations;

    std::string foreign = t + " [bogus_slot]";
    auto f = validate_paraphrase(t, foreign);
    CHECK_FALSE(f.ok);
    ++mutations;
  }
  CHECK(mutations >= 50);
}

TEST_CASE("turn categorization") {
  DecompositionPlan plan;
  plan.source = parse_sql("SELECT labevents.valuenum FROM labevents");
  const char* turns[] = {
      "SELECT labevents.valuenum FROM labevents",
      "PREV_QUERY1 WHERE labevents.hadm_id = 5",
      "PREV_QUERY2 AND admissions.dischtime IS NULL",
      "PREV_QUERY3 ORDER BY labevents.charttime DESC LIMIT 1",
      "PREV_QUERY3 ORDER BY labevents.charttime ASC LIMIT 1",
  };
  int idx = 0;
  for (const char* t : turns)
    plan.turns.push_back(TurnSql{++idx, parse_sql(t), TurnOrigin::Stage2});

  auto c1 = categorize_turn(plan, 0);
  CHECK(c1.names() == std::vector<std::string>{"independent"});

  auto c3 = categorize_turn(plan, 2);
  CHECK(c3.referential);
  CHECK(c3.filtering);
  CHECK_FALSE(c3.independent);
  CHECK_FALSE(c3.modifying);

  auto c4 = categorize_turn(plan, 3);  // introduces the sort, no prior twin
  CHECK(c4.referential);
  CHECK_FALSE(c4.filtering);
  CHECK_FALSE(c4.modifying);

  auto c5 = categorize_turn(plan, 4);  // DESC -> ASC flip of the turn before
  CHECK(c5.referential);
  CHECK(c5.modifying);
  CHECK_FALSE(c5.filtering);
  CHECK_FALSE(c5.independent);
}

TEST_CASE("bundled corpus is fully covered and annotated") {
  auto corpus = read_records_file(data_dir() + std::string("/mini_corpus.jsonl"));
  REQUIRE_FALSE(corpus.empty());

  std::set<std::string> used_templates;
  size_t total = 0, independent = 0, dependent = 0;
  bool saw_goal = false;
  for (const auto& rec : corpus) {
    if (rec.source_sql == kGoalSql) saw_goal = true;
    auto plan = plan_from_record(rec);
    for (size_t i = 0; i < plan.turns.size(); ++i) {
      const auto& turn = plan.turns[i];
      auto tpl = normalize_subquery(turn.ast);
      const NlqTemplate* row = resources().templates.find_sql(tpl.masked_text);
      CAPTURE(tpl.masked_text);
      REQUIRE(row != nullptr);
      used_templates.insert(row->template_id);

      const auto& stored = rec.turns[i];
      CHECK_FALSE(stored.nlq.empty());
      CHECK(nlq_covers_sql(turn.ast, stored.nlq));
      CHECK(stored.categories == categorize_turn(plan, i).names());

      ++total;
      bool indep = categorize_turn(plan, i).independent;
      independent += indep;
      dependent += !indep;
    }
  }
  CHECK(saw_goal);
  CHECK(independent + dependent == total);
  // every bundled template row is exercised by at least one turn
  for (const auto& row : resources().templates.rows) {
    CAPTURE(row.template_id);
    CHECK(used_templates.count(row.template_id) == 1);
  }
}
