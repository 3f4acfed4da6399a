#include "seqsql/promptkit/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

namespace seqsql {
namespace {

constexpr double kK1 = 1.2;
constexpr double kB = 0.75;

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

void Bm25Index::add(const std::string& doc) {
  auto toks = tokenize(doc);
  std::set<std::string> uniq(toks.begin(), toks.end());
  for (const auto& t : uniq) ++df_[t];
  total_len_ += static_cast<double>(toks.size());
  docs_.push_back(std::move(toks));
}

std::vector<std::pair<size_t, double>> Bm25Index::search(const std::string& query,
                                                         size_t k) const {
  std::vector<std::pair<size_t, double>> scored;
  if (docs_.empty()) return scored;
  auto qtoks = tokenize(query);
  if (qtoks.empty()) return scored;
  double n = static_cast<double>(docs_.size());
  double avgdl = total_len_ / n;
  for (size_t d = 0; d < docs_.size(); ++d) {
    const auto& doc = docs_[d];
    double dl = static_cast<double>(doc.size());
    double score = 0.0;
    for (const auto& q : qtoks) {
      auto it = df_.find(q);
      if (it == df_.end()) continue;
      double tf = static_cast<double>(std::count(doc.begin(), doc.end(), q));
      if (tf == 0.0) continue;
      double idf = std::log((n - it->second + 0.5) / (it->second + 0.5) + 1.0);
      score += idf * tf * (kK1 + 1.0) /
               (tf + kK1 * (1.0 - kB + kB * dl / (avgdl > 0 ? avgdl : 1.0)));
    }
    if (score > 0.0) scored.push_back({d, score});
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

ExemplarCorpus build_corpora(const std::vector<InteractionRecord>& train) {
  ExemplarCorpus corpus;
  for (size_t i = 0; i < train.size(); ++i) {
    const InteractionRecord& rec = train[i];
    std::string accumulated;
    for (const auto& turn : rec.turns) {
      std::string q = turn.nlq.empty() ? turn.sql : turn.nlq;
      corpus.turn_level.push_back({q, turn.sql, rec.interaction_id, turn.index});
      corpus.turn_index.add(q);
      if (!accumulated.empty()) accumulated += ' ';
      accumulated += q;
    }
    std::string final_sql = rec.turns.empty() ? "" : rec.turns.back().sql;
    corpus.interaction_level.push_back({accumulated, final_sql, rec.interaction_id, i});
    corpus.interaction_index.add(accumulated);
  }
  return corpus;
}

std::vector<Exemplar> retrieve_exemplars(const std::string& current_question,
                                         const std::vector<std::string>& history,
                                         const ExemplarCorpus& corpus,
                                         size_t k_history, size_t k_turn) {
  std::string history_query;
  for (const auto& h : history) {
    if (!history_query.empty()) history_query += ' ';
    history_query += h;
  }
  // full rankings; quota applied during selection so freed slots backfill
  auto hist_ranked =
      corpus.interaction_index.search(history_query, corpus.interaction_level.size());
  auto turn_ranked = corpus.turn_index.search(current_question, corpus.turn_level.size());
  // rank remainder beyond the scored prefix: unscored docs in position order
  auto extend = [](std::vector<std::pair<size_t, double>>& ranked, size_t total) {
    std::set<size_t> seen;
    for (const auto& [pos, _] : ranked) seen.insert(pos);
    for (size_t i = 0; i < total; ++i)
      if (!seen.count(i)) ranked.push_back({i, 0.0});
  };
  // an empty query disables its route entirely (empty history case)
  if (!tokenize(history_query).empty())
    extend(hist_ranked, corpus.interaction_level.size());
  if (!tokenize(current_question).empty())
    extend(turn_ranked, corpus.turn_level.size());

  std::vector<Exemplar> out;
  std::set<std::string> content_seen;
  size_t hi = 0, ti = 0;
  auto take_hist = [&]() {
    while (hi < hist_ranked.size()) {
      const auto& [pos, score] = hist_ranked[hi++];
      const InteractionExemplar& e = corpus.interaction_level[pos];
      std::string key = e.accumulated_questions + "\x1f" + e.final_sql;
      if (!content_seen.insert(key).second) continue;
      out.push_back({ExemplarRoute::History, e.interaction_id, 0, score});
      return true;
    }
    return false;
  };
  auto take_turn = [&]() {
    while (ti < turn_ranked.size()) {
      const auto& [pos, score] = turn_ranked[ti++];
      const TurnExemplar& e = corpus.turn_level[pos];
      std::string key = e.question + "\x1f" + e.sql;
      if (!content_seen.insert(key).second) continue;
      out.push_back({ExemplarRoute::Turn, e.interaction_id, e.turn_index, score});
      return true;
    }
    return false;
  };
  for (size_t i = 0; i < k_history; ++i)
    if (!take_hist()) break;
  for (size_t i = 0; i < k_turn; ++i)
    if (!take_turn()) break;
  size_t budget = k_history + k_turn;
  while (out.size() < budget) {
    if (!take_turn() && !take_hist()) break;
  }
  return out;
}

std::string build_prompt(EvalMode mode, const std::vector<Exemplar>& exemplars,
                         const std::vector<InteractionRecord>& train,
                         const ExemplarCorpus& corpus,
                         const std::vector<std::string>& history,
                         const std::string& current_question, bool token_note) {
  std::map<std::string, const InteractionRecord*> by_id;
  for (const auto& rec : train) by_id[rec.interaction_id] = &rec;
  std::ostringstream p;
  p << "Translate each question into a SQL query over the EHR schema "
       "(admissions, icustays, chartevents, d_items, labevents, d_labitems, "
       "prescriptions, microbiologyevents, outputevents, inputevents_cv, "
       "cost, diagnoses_icd, procedures_icd).\n";
  if (token_note)
    p << "Queries may use PREV_QUERY{i} to stand for the i-th turn's query "
         "and PREV_RESULT{i} to stand for the i-th turn's execution result.\n";
  p << '\n';
  int shot = 0;
  for (const auto& ex : exemplars) {
    auto it = by_id.find(ex.interaction_id);
    if (it == by_id.end()) continue;
    const InteractionRecord& rec = *it->second;
    p << "### Example " << ++shot << '\n';
    if (ex.route == ExemplarRoute::History) {
      for (const auto& turn : rec.turns) {
        p << "Q: " << (turn.nlq.empty() ? turn.sql : turn.nlq) << '\n';
        if (mode == EvalMode::QS) p << "SQL: " << turn.sql << '\n';
      }
      if (mode == EvalMode::QQ && !rec.turns.empty())
        p << "SQL: " << rec.turns.back().sql << '\n';
    } else {
      for (const auto& turn : rec.turns) {
        if (turn.index != ex.turn_index) continue;
        p << "Q: " << (turn.nlq.empty() ? turn.sql : turn.nlq) << '\n';
        p << "SQL: " << turn.sql << '\n';
      }
    }
    p << '\n';
  }
  p << "### Current interaction\n";
  for (const auto& h : history) p << "Q: " << h << '\n';
  p << "Q: " << current_question << '\n' << "SQL:";
  return p.str();
}

}  // namespace seqsql
