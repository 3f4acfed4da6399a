#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "seqsql/corpus/record.hpp"
#include "seqsql/session/session.hpp"

namespace seqsql {

enum class EvalMode { QQ, QS };

// (interaction_id, turn_index) -> predicted dialect SQL
using PredictionMap = std::map<std::pair<std::string, int>, std::string>;

struct TurnScore {
  std::string interaction_id;
  int turn_index = 0;
  bool correct = false;
  std::string reason;  // empty when correct
};

struct MetricsReport {
  double qm = 0.0;
  double im = 0.0;
  double iff_mean = 0.0;
  size_t total_turns = 0;
  size_t correct_turns = 0;
  size_t total_interactions = 0;
  size_t correct_interactions = 0;
  std::vector<TurnScore> details;
};

// Multiset row comparison, order-sensitive only when `ordered`.
bool results_equal(const ResultTable& a, const ResultTable& b, bool ordered);

// n+1 when every turn is correct, else the 1-based first failure.
int iff(const std::vector<bool>& per_turn_correct);

// Executes pred and gold in their own session states and compares rows.
// All failure modes (parse, resolution, execution) score false.
bool execution_match(const std::string& pred_sql, const std::string& gold_sql,
                     Session& pred_session, Session& gold_session,
                     std::string* reason = nullptr);

// Scores a whole corpus; db_factory opens a fresh connection per
// interaction side. Prediction-side history is built from predictions so
// errors propagate through later references.
MetricsReport score_corpus(const std::vector<InteractionRecord>& gold,
                           const PredictionMap& preds, EvalMode mode,
                           const std::function<Db()>& db_factory);

PredictionMap read_predictions_file(const std::string& path);
void write_predictions_file(const std::string& path, const PredictionMap& preds);

std::string report_to_json(const MetricsReport& report);

}  // namespace seqsql
