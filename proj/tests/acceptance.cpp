// End-to-end acceptance checks. Each criterion prints one pass/fail line;
// the exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "seqsql/benchkit/bench.hpp"
#include "seqsql/benchkit/corpusgen.hpp"
#include "seqsql/corpus/record.hpp"
#include "seqsql/decomposer/decompose.hpp"
#include "seqsql/evalkit/eval.hpp"
#include "seqsql/nlqgen/nlqgen.hpp"
#include "seqsql/promptkit/prompt.hpp"
#include "seqsql/session/session.hpp"
#include "seqsql/splitkit/split.hpp"
#include "seqsql/sqlcore/parser.hpp"

using namespace seqsql;

namespace {

std::string g_data_dir;

struct Failure {
  std::string detail;
};

void expect(bool ok, const std::string& detail) {
  if (!ok) throw Failure{detail};
}

// Criteria 1 and 2 share one generated corpus on the 1,000-patient DB.

std::vector<DecompositionPlan> corpus_1k() {
  CorpusGenOptions opts;
  opts.count = 500;
  opts.seed = 101;
  opts.n_patients = 1000;
  std::vector<DecompositionPlan> plans;
  for (const auto& q : generate_nested_queries(opts))
    plans.push_back(decompose_pipeline(parse_sql(q)));
  return plans;
}

Db db_1k() {
  Db db = Db::in_memory();
  SynthDbSpec spec;
  spec.n_patients = 1000;
  spec.seed = 101;
  synth_db(spec, db);
  return db;
}

void criterion_roundtrip() {
  Db db = db_1k();
  auto plans = corpus_1k();
  expect(plans.size() >= 500, "corpus smaller than 500");
  for (const auto& plan : plans) {
    auto results = replay_interaction(db, plan.turns);  // throws on failure
    expect(results.size() == plan.turns.size(), "turn did not execute");
    auto inlined = inline_all(plan.turns, static_cast<int>(plan.turns.size()));
    auto direct = db.query(render_sql(plan.source));
    auto via_plan = db.query(render_sql(inlined));
    bool ordered = !plan.source.is_extension() &&
                   !plan.source.select()->order_by.empty();
    expect(results_equal(direct, via_plan, ordered),
           "inline_all diverges from source: " + render_sql(plan.source));
    expect(results_equal(direct, results.back().table, ordered),
           "session result diverges from source: " + render_sql(plan.source));
  }
}

void criterion_token_semantics() {
  Db session_db = db_1k();
  Db oracle_db = db_1k();
  auto plans = corpus_1k();
  size_t checked = 0;
  for (const auto& plan : plans) {
    Session session(session_db);
    for (const auto& turn : plan.turns) {
      bool has_result_token = false;
      for (const auto& ref : extract_token_refs(turn.ast))
        if (ref.kind == TokenKind::Result) has_result_token = true;

      size_t before = session_db.statements_executed();
      const TurnResult& got = session.run_turn(turn.ast);
      expect(session_db.statements_executed() == before + 1,
             "extra statements issued resolving turn " +
                 std::to_string(turn.index));

      if (!has_result_token) continue;
      ++checked;
      auto inlined = inline_all(plan.turns, turn.index);
      auto want = oracle_db.query(render_sql(inlined));
      bool ordered = !inlined.is_extension() &&
                     !inlined.select()->order_by.empty();
      expect(results_equal(got.table, want, ordered),
             "token execution diverges: " + render_sql(turn.ast));
    }
  }
  expect(checked > 100, "too few RESULT-token turns exercised");
}

void criterion_split() {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    int n_components = 4 + static_cast<int>(rng() % 12);
    int n_comps = 3 + static_cast<int>(rng() % 10);
    std::vector<CompositionRecord> comps;
    for (int i = 0; i < n_comps; ++i) {
      CompositionRecord c;
      c.composition_id = i + 1;
      size_t sz = 1 + rng() % n_components;
      while (c.component_set.size() < sz)
        c.component_set.insert("c" + std::to_string(rng() % n_components));
      comps.push_back(std::move(c));
    }
    auto manifest = greedy_split(comps);
    expect(coverage_holds(comps, manifest),
           "coverage broken on trial " + std::to_string(trial));
  }

  auto fixture =
      load_composition_fixture(g_data_dir + "/composition_fixture.json");
  auto manifest = greedy_split(fixture);
  expect(manifest.train == std::set<int>{1, 2} &&
             manifest.test == std::set<int>{3},
         "three-composition fixture split is not {1,2} / {3}");
}

void criterion_iff() {
  expect(iff({true, true, true}) == 4, "all-correct iff != n+1");
  expect(iff({true, false, true}) == 2, "first failure index wrong");
  expect(iff({false}) == 1, "single-failure iff wrong");

  // 83 interactions of 14 turns and 17 of 15: mean length exactly 14.17
  std::vector<InteractionRecord> gold;
  PredictionMap preds;
  for (int n = 0; n < 100; ++n) {
    DecompositionPlan plan;
    plan.source = parse_sql("SELECT 1");
    int len = n < 83 ? 14 : 15;
    for (int t = 1; t <= len; ++t) {
      std::string sql =
          t == 1 ? "SELECT 1"
                 : "SELECT ( PREV_RESULT" + std::to_string(t - 1) + " ) + 1";
      plan.turns.push_back(TurnSql{t, parse_sql(sql), TurnOrigin::Stage2});
    }
    auto rec = record_from_plan(plan, "i" + std::to_string(n));
    for (const auto& turn : rec.turns)
      preds[{rec.interaction_id, turn.index}] = turn.sql;
    gold.push_back(std::move(rec));
  }
  auto report =
      score_corpus(gold, preds, EvalMode::QS, []() { return Db::in_memory(); });
  expect(std::abs(report.iff_mean - 15.17) < 1e-9,
         "mean IFF " + std::to_string(report.iff_mean) + " != 15.17");
  expect(report.qm == 1.0 && report.im == 1.0, "perfect corpus not perfect");
}

void criterion_metric_algebra() {
  std::mt19937_64 rng(7);
  for (int run = 0; run < 5; ++run) {
    // 40 interactions x 5 independent turns
    std::vector<InteractionRecord> gold;
    PredictionMap preds;
    size_t N = 0;
    for (int n = 0; n < 40; ++n) {
      DecompositionPlan plan;
      plan.source = parse_sql("SELECT 1");
      for (int t = 1; t <= 5; ++t) {
        plan.turns.push_back(
            TurnSql{t, parse_sql("SELECT " + std::to_string(t)), TurnOrigin::Stage2});
        ++N;
      }
      auto rec = record_from_plan(plan, "i" + std::to_string(n));
      for (const auto& turn : rec.turns)
        preds[{rec.interaction_id, turn.index}] = turn.sql;
      gold.push_back(std::move(rec));
    }
    size_t k = 1 + rng() % (N - 1);
    std::vector<std::pair<std::string, int>> keys;
    for (const auto& [key, sql] : preds) keys.push_back(key);
    std::shuffle(keys.begin(), keys.end(), rng);
    for (size_t i = 0; i < k; ++i) preds[keys[i]] = "SELECT 999";

    auto report = score_corpus(gold, preds, EvalMode::QS,
                               []() { return Db::in_memory(); });
    double want_qm = 1.0 - static_cast<double>(k) / static_cast<double>(N);
    expect(std::abs(report.qm - want_qm) < 1e-12,
           "QM != 1 - k/N for k=" + std::to_string(k));
    expect(report.im <= report.qm + 1e-12, "IM > QM");
  }
}

void criterion_bpe() {
  const std::string src =
      "SELECT prescriptions.drug FROM prescriptions WHERE prescriptions.route = 'po'";
  std::vector<DecompositionPlan> corpus;
  for (int i = 0; i < 200; ++i)
    corpus.push_back(decompose_pipeline(parse_sql(src)));
  expect(corpus[0].turns.size() == 2, "fixture plan is not 2 turns");

  // brute-force bigram count, independent of the merge implementation
  MaskConfig mask_cfg;
  std::map<std::pair<std::string, std::string>, size_t> bigrams;
  for (const auto& plan : corpus)
    for (size_t i = 0; i + 1 < plan.turns.size(); ++i)
      ++bigrams[{turn_template_key(plan.turns[i].ast, mask_cfg),
                 turn_template_key(plan.turns[i + 1].ast, mask_cfg)}];
  expect(bigrams.size() == 1, "fixture should have one bigram class");
  size_t count = bigrams.begin()->second;

  MergeOptions opts;
  opts.sample_ratio = 0.5;
  opts.seed = 42;
  size_t expected_merged =
      count > opts.threshold_stage2
          ? static_cast<size_t>(std::max<long long>(
                1, std::llround(count * opts.sample_ratio)))
          : 0;
  // the leftover half falls under the threshold, so one round suffices
  expect(count - expected_merged <= opts.threshold_stage2,
         "fixture does not terminate in one round");

  auto merged = merge_frequent(corpus, opts);
  size_t collapsed = 0;
  for (const auto& plan : merged)
    if (plan.turns.size() == 1) ++collapsed;
  expect(collapsed == expected_merged,
         "merged " + std::to_string(collapsed) + " plans, expected " +
             std::to_string(expected_merged));

  auto serialize = [](const std::vector<DecompositionPlan>& plans) {
    std::string out;
    int n = 0;
    for (const auto& p : plans)
      out += record_to_json_line(record_from_plan(p, std::to_string(++n))) + "\n";
    return out;
  };
  expect(serialize(merged) == serialize(merge_frequent(corpus, opts)),
         "two merge runs differ byte-wise");
}

void criterion_efficiency_trend() {
  std::vector<size_t> scales = {100, 1000, 10000};
  std::vector<double> reductions;
  for (size_t patients : scales) {
    std::string path = "/tmp/seqsql_accept_" + std::to_string(patients) + ".db";
    SynthDbSpec spec;
    spec.n_patients = patients;
    spec.seed = 55;
    synth_db_file(spec, path);

    CorpusGenOptions copts;
    copts.count = 30;
    copts.seed = 55;
    copts.n_patients = patients;
    std::vector<InteractionRecord> corpus;
    int n = 0;
    for (const auto& q : generate_nested_queries(copts))
      corpus.push_back(record_from_plan(decompose_pipeline(parse_sql(q)),
                                        "q" + std::to_string(++n)));

    auto report = compare_execution(corpus, path, 0.05, 3);
    std::remove(path.c_str());
    for (const auto& row : report.rows)
      expect(!row.error, "timed pair not result-equivalent: " + row.note);
    expect(report.included > 0, "no rows included at scale " +
                                    std::to_string(patients));
    reductions.push_back(report.aggregate_reduction_pct);
  }
  for (size_t i = 1; i < reductions.size(); ++i)
    expect(reductions[i] >= reductions[i - 1] - 5.0,
           "reduction fell from " + std::to_string(reductions[i - 1]) +
               " to " + std::to_string(reductions[i]));
}

void criterion_nlq() {
  auto res = load_nlq_resources(g_data_dir);
  auto corpus = read_records_file(g_data_dir + "/mini_corpus.jsonl");
  expect(!corpus.empty(), "bundled corpus is empty");
  uint64_t seed = 3;
  for (const auto& rec : corpus) {
    auto plan = plan_from_record(rec);
    for (const auto& turn : plan.turns) {
      std::string nlq = generate_nlq(turn.ast, res, seed++);
      // independent check: condition-value lexemes and reference indices
      auto tpl = normalize_subquery(turn.ast);
      for (const auto& slot : tpl.slots) {
        if (slot.kind == SlotKind::Value) {
          std::string lexeme = slot.original;
          if (lexeme.size() >= 2 && lexeme.front() == '\'')
            lexeme = lexeme.substr(1, lexeme.size() - 2);
          expect(nlq.find(lexeme) != std::string::npos,
                 "value " + slot.original + " missing from: " + nlq);
        }
      }
      for (const auto& ref : extract_token_refs(turn.ast))
        expect(nlq.find("result" + std::to_string(ref.turn_index)) !=
                   std::string::npos,
               "reference " + std::to_string(ref.turn_index) +
                   " missing from: " + nlq);
    }
  }

  std::string goal =
      "SELECT admissions.subject_id, prescriptions.startdate FROM prescriptions "
      "JOIN admissions ON prescriptions.hadm_id = admissions.hadm_id WHERE "
      "prescriptions.drug = 'nateglinide' AND prescriptions.startdate >= "
      "'2104-01-01'";
  expect(generate_nlq(parse_sql(goal), res) ==
             "List all patient ids and their prescription time associated "
             "with nateglinide last year.",
         "reference sentence not reproduced byte-exactly");
}

void criterion_retrieval() {
  auto train = read_records_file(g_data_dir + "/mini_corpus.jsonl");
  auto corpus = build_corpora(train);
  expect(corpus.turn_level.size() >= 40, "bundled corpus too small");

  const auto& probe = corpus.turn_level[5];
  std::vector<std::string> history = {train[0].turns[0].nlq};
  auto exemplars = retrieve_exemplars(probe.question, history, corpus);
  expect(exemplars.size() == 20,
         "got " + std::to_string(exemplars.size()) + " exemplars, want 20");
  size_t hist = 0, turn = 0;
  for (const auto& e : exemplars)
    (e.route == ExemplarRoute::History ? hist : turn)++;
  expect(hist == 10 && turn == 10,
         "route split " + std::to_string(hist) + "+" + std::to_string(turn));
  expect(exemplars[hist].route == ExemplarRoute::Turn &&
             corpus.turn_level.size() > 0,
         "turn block missing");
  // self-retrieval: the exact-match question ranks first on its route
  bool found_self = false;
  for (const auto& e : exemplars)
    if (e.route == ExemplarRoute::Turn) {
      found_self = e.interaction_id == probe.interaction_id &&
                   e.turn_index == probe.turn_index;
      break;
    }
  expect(found_self, "exact-match question is not ranked first");

  // capacity-bound corpus returns min(20, capacity)
  std::vector<InteractionRecord> tiny(train.begin(), train.begin() + 2);
  auto tiny_corpus = build_corpora(tiny);
  std::set<std::string> content;
  for (const auto& t : tiny_corpus.turn_level)
    content.insert(t.question + "\x1f" + t.sql);
  for (const auto& i : tiny_corpus.interaction_level)
    content.insert(i.accumulated_questions + "\x1f" + i.final_sql);
  size_t capacity = content.size();
  auto small = retrieve_exemplars(probe.question, history, tiny_corpus);
  expect(small.size() == std::min<size_t>(20, capacity),
         "tiny corpus returned " + std::to_string(small.size()) +
             ", capacity " + std::to_string(capacity));
}

struct Criterion {
  const char* name;
  void (*fn)();
};

}  // namespace

int main() {
  const char* env = std::getenv("SEQSQL_DATA_DIR");
  g_data_dir = env ? env : "data";

  const Criterion criteria[] = {
      {"1 round-trip oracle (500 plans, 1k-patient db)", criterion_roundtrip},
      {"2 token semantics and statement counter", criterion_token_semantics},
      {"3 compositional split coverage and fixture", criterion_split},
      {"4 IFF formula and mean 15.17", criterion_iff},
      {"5 metric algebra QM = 1 - k/N, IM <= QM", criterion_metric_algebra},
      {"6 BPE determinism and threshold fidelity", criterion_bpe},
      {"7 efficiency trend across 100/1k/10k patients", criterion_efficiency_trend},
      {"8 NLQ completeness and reference sentence", criterion_nlq},
      {"9 retrieval budget 10+10 and self-retrieval", criterion_retrieval},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    try {
      c.fn();
      auto ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start)
                    .count();
      std::printf("PASS  criterion %s  (%.0f ms)\n", c.name, ms);
    } catch (const Failure& f) {
      ++failures;
      std::printf("FAIL  criterion %s: %s\n", c.name, f.detail.c_str());
    } catch (const std::exception& e) {
      ++failures;
      std::printf("FAIL  criterion %s: unexpected error: %s\n", c.name, e.what());
    }
  }
  return failures;
}
