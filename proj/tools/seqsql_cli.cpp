#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

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

// Every command is reproducible: an omitted seed is drawn once and printed.
uint64_t pick_seed(CLI::Option* seed_opt, uint64_t seed) {
  if (seed_opt->count()) return seed;
  std::random_device rd;
  uint64_t drawn = (static_cast<uint64_t>(rd()) << 32) | rd();
  std::cerr << "seed: " << drawn << "\n";
  return drawn;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

std::ostream& open_out(std::ofstream& file, const std::string& path) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw std::runtime_error("cannot open " + path);
  return file;
}

std::string default_db_path(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("SEQSQL_DB")) return env;
  throw std::runtime_error("no database given (use --db or SEQSQL_DB)");
}

void print_table(const ResultTable& t, std::ostream& os) {
  for (size_t i = 0; i < t.columns.size(); ++i)
    os << (i ? " | " : "") << t.columns[i];
  os << "\n";
  for (const auto& row : t.rows) {
    for (size_t i = 0; i < row.size(); ++i)
      os << (i ? " | " : "") << value_to_string(row[i]);
    os << "\n";
  }
  os << "(" << t.rows.size() << " rows)\n";
}

int run_decompose(const std::string& in_path, const std::string& sql_arg,
                  int stage, const MergeOptions& merge, bool keep_going,
                  const std::string& out_path) {
  std::vector<std::string> inputs;
  if (!sql_arg.empty())
    inputs.push_back(sql_arg);
  else
    inputs = read_lines(in_path);

  std::vector<DecompositionPlan> plans;
  size_t failures = 0;
  for (size_t i = 0; i < inputs.size(); ++i) {
    try {
      SqlAst ast = parse_sql(inputs[i]);
      DecompositionPlan plan;
      if (stage == 1) {
        plan.source = ast;
        plan.turns = decompose_nesting(ast);
      } else {
        plan = decompose_pipeline(ast);
      }
      validate_plan(plan);
      plans.push_back(std::move(plan));
    } catch (const std::exception& e) {
      ++failures;
      std::cerr << "line " << i + 1 << ": " << e.what() << "\n";
      if (!keep_going) return 1;
    }
  }
  if (stage == 3) plans = merge_frequent(std::move(plans), merge);

  std::ofstream file;
  std::ostream& os = open_out(file, out_path);
  int n = 0;
  for (const auto& plan : plans)
    os << record_to_json_line(record_from_plan(plan, "q" + std::to_string(++n)))
       << "\n";
  return failures && !keep_going ? 1 : 0;
}

int run_replay(Db& db, const std::string& path) {
  size_t failures = 0;
  for (const auto& rec : read_records_file(path)) {
    std::cout << "== " << rec.interaction_id << "\n";
    try {
      auto plan = plan_from_record(rec);
      for (const auto& r : replay_interaction(db, plan.turns)) {
        std::cout << "-- turn " << r.index << " (" << r.exec_ms << " ms): "
                  << r.turn_sql << "\n";
        print_table(r.table, std::cout);
      }
    } catch (const std::exception& e) {
      ++failures;
      std::cerr << rec.interaction_id << ": " << e.what() << "\n";
    }
  }
  return failures ? 1 : 0;
}

int run_repl(Db& db) {
  Session session(db);
  std::string line;
  std::cout << "seqsql> " << std::flush;
  while (std::getline(std::cin, line)) {
    if (line == "\\q" || line == "\\quit") break;
    if (!line.empty() && line.rfind("\\inline ", 0) == 0) {
      try {
        int i = std::stoi(line.substr(8));
        std::cout << render_sql(session.inline_turn(i)) << "\n";
      } catch (const std::exception& e) {
        std::cout << "error: " << e.what() << "\n";
      }
    } else if (!line.empty()) {
      try {
        const TurnResult& r = session.run_turn(line);
        print_table(r.table, std::cout);
      } catch (const std::exception& e) {
        std::cout << "error: " << e.what() << "\n";
      }
    }
    std::cout << "seqsql> " << std::flush;
  }
  return 0;
}

int run_split(const std::string& in_path, const std::string& mode,
              uint64_t seed, const std::string& out_prefix) {
  auto corpus = read_records_file(in_path);
  std::vector<InteractionRecord> train, test;

  nlohmann::json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["mode"] = mode;

  if (mode == "compositional") {
    auto comps = build_compositions(corpus);
    auto split = greedy_split(comps);
    if (split.test.empty())
      std::cerr << "warning: no composition is movable; test split is empty\n";
    std::set<size_t> test_pos;
    for (const auto& c : comps)
      if (split.test.count(c.composition_id))
        test_pos.insert(c.members.begin(), c.members.end());
    for (size_t i = 0; i < corpus.size(); ++i)
      (test_pos.count(i) ? test : train).push_back(corpus[i]);
    manifest["train_compositions"] = std::vector<int>(split.train.begin(), split.train.end());
    manifest["test_compositions"] = std::vector<int>(split.test.begin(), split.test.end());
    manifest["component_universe"] = split.component_universe;
  } else if (mode == "random") {
    std::vector<size_t> order(corpus.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    size_t n_train = (corpus.size() * 4 + 4) / 5;
    for (size_t k = 0; k < order.size(); ++k)
      (k < n_train ? train : test).push_back(corpus[order[k]]);
    manifest["seed"] = seed;
  } else {
    std::cerr << "unknown split mode: " << mode << "\n";
    return 1;
  }

  auto turn_count = [](const std::vector<InteractionRecord>& recs) {
    size_t n = 0;
    for (const auto& r : recs) n += r.turns.size();
    return n;
  };
  manifest["train_interactions"] = train.size();
  manifest["test_interactions"] = test.size();
  manifest["train_turns"] = turn_count(train);
  manifest["test_turns"] = turn_count(test);

  write_records_file(out_prefix + ".train.jsonl", train);
  write_records_file(out_prefix + ".test.jsonl", test);
  std::ofstream mf(out_prefix + ".manifest.json");
  mf << manifest.dump(2) << "\n";

  std::cout << "interactions  train " << train.size() << "  test " << test.size()
            << "\nturns         train " << turn_count(train) << "  test "
            << turn_count(test) << "\n";
  return 0;
}

int run_eval(const std::string& gold_path, const std::string& preds_path,
             const std::string& db_path, const std::string& mode_name,
             const std::string& report_path) {
  auto gold = read_records_file(gold_path);
  auto preds = read_predictions_file(preds_path);
  EvalMode mode = mode_name == "QS" ? EvalMode::QS : EvalMode::QQ;
  auto report = score_corpus(gold, preds, mode,
                             [&]() { return Db(db_path); });
  std::cout << "QM  " << report.qm << "\nIM  " << report.im << "\nIFF "
            << report.iff_mean << "\n";
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    out << report_to_json(report) << "\n";
  }
  return 0;
}

int run_bench(const std::string& scales_arg, int reps, double near_zero,
              size_t count, uint64_t seed, const std::string& report_path) {
  nlohmann::json reports = nlohmann::json::array();
  std::stringstream scales(scales_arg);
  std::string tok;
  while (std::getline(scales, tok, ',')) {
    size_t patients = std::stoul(tok);
    std::string db_path =
        "/tmp/seqsql_bench_" + std::to_string(patients) + ".db";
    SynthDbSpec spec;
    spec.n_patients = patients;
    spec.seed = seed;
    synth_db_file(spec, db_path);

    CorpusGenOptions copts;
    copts.count = count;
    copts.seed = seed;
    copts.n_patients = patients;
    std::vector<InteractionRecord> corpus;
    int n = 0;
    for (const auto& q : generate_nested_queries(copts))
      corpus.push_back(record_from_plan(decompose_pipeline(parse_sql(q)),
                                        "q" + std::to_string(++n)));

    auto report = compare_execution(corpus, db_path, near_zero, reps);
    std::cout << "== " << patients << " patients\n"
              << timing_report_table(report);
    reports.push_back(nlohmann::json::parse(timing_report_json(report)));
    reports.back()["n_patients"] = patients;
    std::remove(db_path.c_str());
  }
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    out << reports.dump(2) << "\n";
  }
  return 0;
}

int run_nlq(const std::string& in_path, const std::string& data_dir,
            uint64_t seed, bool keep_going, const std::string& out_path) {
  auto res = load_nlq_resources(data_dir);
  auto corpus = read_records_file(in_path);
  size_t failures = 0;
  for (auto& rec : corpus) {
    try {
      auto plan = plan_from_record(rec);
      for (size_t i = 0; i < plan.turns.size(); ++i) {
        rec.turns[i].nlq = generate_nlq(plan.turns[i].ast, res, seed++);
        rec.turns[i].categories = categorize_turn(plan, i).names();
      }
      if (rec.goal_nlq.empty()) rec.goal_nlq = rec.turns.back().nlq;
    } catch (const std::exception& e) {
      ++failures;
      std::cerr << rec.interaction_id << ": " << e.what() << "\n";
      if (!keep_going) return 1;
    }
  }
  std::ofstream file;
  std::ostream& os = open_out(file, out_path);
  for (const auto& rec : corpus) os << record_to_json_line(rec) << "\n";
  return failures && !keep_going ? 1 : 0;
}

int run_prompt(const std::string& train_path, const std::string& mode_name,
               const std::string& question, const std::string& history_path,
               size_t k_history, size_t k_turn, bool token_note) {
  auto train = read_records_file(train_path);
  auto corpus = build_corpora(train);
  std::vector<std::string> history;
  if (!history_path.empty()) history = read_lines(history_path);
  auto exemplars =
      retrieve_exemplars(question, history, corpus, k_history, k_turn);
  EvalMode mode = mode_name == "QS" ? EvalMode::QS : EvalMode::QQ;
  std::cout << build_prompt(mode, exemplars, train, corpus, history, question,
                            token_note);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-turn SQL decomposition toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value defaults; flags override");

  // decompose
  std::string d_in, d_sql, d_out;
  int d_stage = 2;
  bool d_keep = false;
  MergeOptions d_merge;
  auto* decompose = app.add_subcommand("decompose", "split queries into turns");
  decompose->add_option("--in", d_in, "file of one query per line");
  decompose->add_option("--sql", d_sql, "single inline query");
  decompose->add_option("--stage", d_stage, "1 nesting, 2 clauses, 3 merged")
      ->check(CLI::Range(1, 3));
  decompose->add_option("--threshold-nest", d_merge.threshold_stage1);
  decompose->add_option("--threshold-ext", d_merge.threshold_stage2);
  decompose->add_option("--ratio", d_merge.sample_ratio);
  auto* d_seed_opt = decompose->add_option("--seed", d_merge.seed);
  decompose->add_flag("--keep-going", d_keep);
  decompose->add_option("--out", d_out);

  // session
  std::string s_db, s_replay;
  bool s_repl = false;
  auto* session = app.add_subcommand("session", "replay or interactive REPL");
  session->add_option("--db", s_db, "SQLite file (default $SEQSQL_DB)");
  session->add_option("--replay", s_replay, "corpus JSONL to replay");
  session->add_flag("--repl", s_repl);

  // split
  std::string sp_in, sp_mode = "compositional", sp_out = "split";
  uint64_t sp_seed = 0;
  auto* split = app.add_subcommand("split", "train/test corpus split");
  split->add_option("--in", sp_in)->required();
  split->add_option("--mode", sp_mode)
      ->check(CLI::IsMember({"compositional", "random"}));
  auto* sp_seed_opt = split->add_option("--seed", sp_seed);
  split->add_option("--out", sp_out, "output path prefix");

  // longgen
  std::string lg_in, lg_out;
  LongGenOptions lg_opts;
  auto* longgen = app.add_subcommand("longgen", "chain related interactions");
  longgen->add_option("--in", lg_in)->required();
  longgen->add_option("--count", lg_opts.count);
  longgen->add_option("--target-turns", lg_opts.target_turns);
  auto* lg_seed_opt = longgen->add_option("--seed", lg_opts.seed);
  longgen->add_option("--out", lg_out);

  // eval
  std::string e_gold, e_preds, e_db, e_mode = "QS", e_report;
  auto* eval = app.add_subcommand("eval", "score predictions");
  eval->add_option("--gold", e_gold)->required();
  eval->add_option("--preds", e_preds)->required();
  eval->add_option("--db", e_db);
  eval->add_option("--mode", e_mode)->check(CLI::IsMember({"QQ", "QS"}));
  eval->add_option("--report", e_report);

  // bench
  std::string b_scales = "100,1000", b_report;
  int b_reps = 3;
  double b_near_zero = 1.0;
  size_t b_count = 50;
  uint64_t b_seed = 0;
  auto* bench = app.add_subcommand("bench", "tokenized vs standard timings");
  bench->add_option("--scales", b_scales, "comma-separated patient counts");
  bench->add_option("--reps", b_reps);
  bench->add_option("--near-zero", b_near_zero, "ms floor for inclusion");
  bench->add_option("--count", b_count, "queries per scale");
  auto* b_seed_opt = bench->add_option("--seed", b_seed);
  bench->add_option("--report", b_report);

  // nlq
  std::string n_in, n_data = "data", n_out;
  uint64_t n_seed = 0;
  bool n_keep = false;
  auto* nlq = app.add_subcommand("nlq", "annotate plans with questions");
  nlq->add_option("--in", n_in)->required();
  nlq->add_option("--data-dir", n_data);
  auto* n_seed_opt = nlq->add_option("--seed", n_seed);
  nlq->add_flag("--keep-going", n_keep);
  nlq->add_option("--out", n_out);

  // prompt
  std::string p_train, p_mode = "QS", p_question, p_history;
  size_t p_kh = 10, p_kt = 10;
  bool p_no_note = false;
  auto* prompt = app.add_subcommand("prompt", "few-shot prompt assembly");
  prompt->add_option("--train", p_train)->required();
  prompt->add_option("--mode", p_mode)->check(CLI::IsMember({"QQ", "QS"}));
  prompt->add_option("--question", p_question)->required();
  prompt->add_option("--history-file", p_history);
  prompt->add_option("--k-history", p_kh);
  prompt->add_option("--k-turn", p_kt);
  prompt->add_flag("--no-token-note", p_no_note);

  // synthdb
  std::string y_out;
  SynthDbSpec y_spec;
  auto* synthdb = app.add_subcommand("synthdb", "write a synthetic database");
  synthdb->add_option("--out", y_out)->required();
  synthdb->add_option("--patients", y_spec.n_patients);
  auto* y_seed_opt = synthdb->add_option("--seed", y_spec.seed);

  // corpusgen
  CorpusGenOptions c_opts;
  std::string c_out;
  auto* corpusgen = app.add_subcommand("corpusgen", "emit nested queries");
  corpusgen->add_option("--count", c_opts.count);
  corpusgen->add_option("--patients", c_opts.n_patients);
  auto* c_seed_opt = corpusgen->add_option("--seed", c_opts.seed);
  corpusgen->add_option("--out", c_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (decompose->parsed()) {
      d_merge.seed = d_stage == 3 ? pick_seed(d_seed_opt, d_merge.seed) : d_merge.seed;
      return run_decompose(d_in, d_sql, d_stage, d_merge, d_keep, d_out);
    }
    if (session->parsed()) {
      Db db(default_db_path(s_db));
      if (!s_replay.empty()) return run_replay(db, s_replay);
      if (s_repl) return run_repl(db);
      std::cerr << "session needs --replay or --repl\n";
      return 1;
    }
    if (split->parsed())
      return run_split(sp_in, sp_mode,
                       sp_mode == "random" ? pick_seed(sp_seed_opt, sp_seed) : 0,
                       sp_out);
    if (longgen->parsed()) {
      lg_opts.seed = pick_seed(lg_seed_opt, lg_opts.seed);
      auto corpus = read_records_file(lg_in);
      auto graph = build_context_graph(corpus);
      auto longs = generate_long_interactions(corpus, graph, lg_opts);
      std::ofstream file;
      std::ostream& os = open_out(file, lg_out);
      for (const auto& rec : longs) os << record_to_json_line(rec) << "\n";
      return 0;
    }
    if (eval->parsed())
      return run_eval(e_gold, e_preds, default_db_path(e_db), e_mode, e_report);
    if (bench->parsed())
      return run_bench(b_scales, b_reps, b_near_zero, b_count,
                       pick_seed(b_seed_opt, b_seed), b_report);
    if (nlq->parsed())
      return run_nlq(n_in, n_data, pick_seed(n_seed_opt, n_seed), n_keep, n_out);
    if (prompt->parsed())
      return run_prompt(p_train, p_mode, p_question, p_history, p_kh, p_kt,
                        !p_no_note);
    if (synthdb->parsed()) {
      y_spec.seed = pick_seed(y_seed_opt, y_spec.seed);
      synth_db_file(y_spec, y_out);
      return 0;
    }
    if (corpusgen->parsed()) {
      c_opts.seed = pick_seed(c_seed_opt, c_opts.seed);
      std::ofstream file;
      std::ostream& os = open_out(file, c_out);
      for (const auto& q : generate_nested_queries(c_opts)) os << q << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
