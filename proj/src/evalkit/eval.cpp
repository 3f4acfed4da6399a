#include "seqsql/evalkit/eval.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "seqsql/sqlcore/errors.hpp"
#include "seqsql/sqlcore/parser.hpp"
#include "seqsql/sqlcore/render.hpp"

namespace seqsql {
namespace {

std::string row_key(const std::vector<Value>& row) {
  std::string out;
  for (const auto& v : row) {
    out += value_to_string(v);
    out += '\x1f';
  }
  return out;
}

bool has_outer_order(const SqlAst& resolved) {
  if (resolved.is_extension()) return !resolved.extension().order_by.empty();
  return !resolved.select()->order_by.empty();
}

}  // namespace

bool results_equal(const ResultTable& a, const ResultTable& b, bool ordered) {
  if (a.rows.size() != b.rows.size()) return false;
  if (ordered) {
    for (size_t i = 0; i < a.rows.size(); ++i)
      if (row_key(a.rows[i]) != row_key(b.rows[i])) return false;
    return true;
  }
  std::multiset<std::string> ka, kb;
  for (const auto& r : a.rows) ka.insert(row_key(r));
  for (const auto& r : b.rows) kb.insert(row_key(r));
  return ka == kb;
}

int iff(const std::vector<bool>& per_turn_correct) {
  if (per_turn_correct.empty())
    throw std::invalid_argument("iff needs at least one turn");
  for (size_t i = 0; i < per_turn_correct.size(); ++i)
    if (!per_turn_correct[i]) return static_cast<int>(i) + 1;
  return static_cast<int>(per_turn_correct.size()) + 1;
}

bool execution_match(const std::string& pred_sql, const std::string& gold_sql,
                     Session& pred_session, Session& gold_session,
                     std::string* reason) {
  auto fail = [&](const std::string& why) {
    if (reason) *reason = why;
    return false;
  };
  const TurnResult* gold_res = nullptr;
  try {
    gold_res = &gold_session.run_turn(gold_sql);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("gold turn failed: ") + e.what());
  }
  SqlAst gold_ast = parse_sql(gold_res->resolved_sql);
  bool ordered = has_outer_order(gold_ast);
  try {
    const TurnResult& pred_res = pred_session.run_turn(pred_sql);
    if (results_equal(pred_res.table, gold_res->table, ordered)) return true;
    return fail("result mismatch");
  } catch (const ParseError& e) {
    return fail(std::string("parse: ") + e.what());
  } catch (const UnsupportedConstructError& e) {
    return fail(std::string("parse: ") + e.what());
  } catch (const ResolutionError& e) {
    return fail(std::string("resolution: ") + e.what());
  } catch (const SessionError& e) {
    return fail(std::string("execution: ") + e.what());
  }
}

MetricsReport score_corpus(const std::vector<InteractionRecord>& gold,
                           const PredictionMap& preds, EvalMode /*mode*/,
                           const std::function<Db()>& db_factory) {
  MetricsReport report;
  double iff_sum = 0.0;
  for (const auto& rec : gold) {
    Db gold_db = db_factory();
    Db pred_db = db_factory();
    Session gold_session(gold_db);
    Session pred_session(pred_db);
    std::set<int> failed;  // pred-side turns whose state is unusable
    std::vector<bool> per_turn;
    bool all_correct = true;
    for (const auto& turn : rec.turns) {
      TurnScore score;
      score.interaction_id = rec.interaction_id;
      score.turn_index = turn.index;
      auto it = preds.find({rec.interaction_id, turn.index});
      std::string pred_sql = it == preds.end() ? "" : it->second;
      bool propagated = false;
      if (!pred_sql.empty()) {
        try {
          for (const TokenRef& ref : extract_token_refs(parse_sql(pred_sql)))
            if (failed.count(ref.turn_index)) propagated = true;
        } catch (const std::exception&) {
          // scored below as a parse failure
        }
      }
      if (pred_sql.empty()) {
        score.reason = "missing prediction";
      } else if (propagated) {
        score.reason = "propagated";
      } else {
        score.correct = execution_match(pred_sql, turn.sql, pred_session,
                                        gold_session, &score.reason);
      }
      if (!score.correct) all_correct = false;
      else ++report.correct_turns;
      // a turn that never executed leaves no usable state: later
      // references to it are propagated failures
      if (pred_session.turn_count() < turn.index) {
        failed.insert(turn.index);
        pred_session.run_turn("SELECT NULL");  // keep numbering aligned
      }
      if (gold_session.turn_count() < turn.index) gold_session.run_turn(turn.sql);
      per_turn.push_back(score.correct);
      ++report.total_turns;
      report.details.push_back(std::move(score));
    }
    ++report.total_interactions;
    if (all_correct && !per_turn.empty()) ++report.correct_interactions;
    if (!per_turn.empty()) iff_sum += iff(per_turn);
  }
  if (report.total_turns)
    report.qm = static_cast<double>(report.correct_turns) / report.total_turns;
  if (report.total_interactions) {
    report.im = static_cast<double>(report.correct_interactions) /
                report.total_interactions;
    report.iff_mean = iff_sum / report.total_interactions;
  }
  return report;
}

PredictionMap read_predictions_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  PredictionMap out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    out[{j.at("interaction_id").get<std::string>(),
         j.at("turn_index").get<int>()}] = j.at("sql").get<std::string>();
  }
  return out;
}

void write_predictions_file(const std::string& path, const PredictionMap& preds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  for (const auto& [key, sql] : preds) {
    nlohmann::json j;
    j["interaction_id"] = key.first;
    j["turn_index"] = key.second;
    j["sql"] = sql;
    out << j.dump() << '\n';
  }
}

std::string report_to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["qm"] = report.qm;
  j["im"] = report.im;
  j["iff_mean"] = report.iff_mean;
  j["total_turns"] = report.total_turns;
  j["correct_turns"] = report.correct_turns;
  j["total_interactions"] = report.total_interactions;
  j["correct_interactions"] = report.correct_interactions;
  j["details"] = nlohmann::json::array();
  for (const auto& d : report.details) {
    nlohmann::json jd;
    jd["interaction_id"] = d.interaction_id;
    jd["turn_index"] = d.turn_index;
    jd["correct"] = d.correct;
    if (!d.reason.empty()) jd["reason"] = d.reason;
    j["details"].push_back(std::move(jd));
  }
  return j.dump(2);
}

}  // namespace seqsql
