#pragma once

#include <map>
#include <string>
#include <vector>

#include "seqsql/corpus/record.hpp"
#include "seqsql/evalkit/eval.hpp"  // EvalMode

namespace seqsql {

// Okapi BM25 over whitespace-split lowercase tokens (k1=1.2, b=0.75).
class Bm25Index {
 public:
  void add(const std::string& doc);
  // (doc position, score) sorted by descending score, position ascending
  // on ties; zero-score docs are omitted.
  std::vector<std::pair<size_t, double>> search(const std::string& query,
                                                size_t k) const;
  size_t size() const { return docs_.size(); }

 private:
  std::vector<std::vector<std::string>> docs_;
  std::map<std::string, size_t> df_;
  double total_len_ = 0.0;
};

struct TurnExemplar {
  std::string question;  // turn nlq, falling back to the sql text
  std::string sql;
  std::string interaction_id;
  int turn_index = 0;
};

struct InteractionExemplar {
  std::string accumulated_questions;  // all turn questions joined
  std::string final_sql;
  std::string interaction_id;
  size_t corpus_pos = 0;
};

struct ExemplarCorpus {
  std::vector<TurnExemplar> turn_level;
  std::vector<InteractionExemplar> interaction_level;
  Bm25Index turn_index;
  Bm25Index interaction_index;
};

enum class ExemplarRoute { History, Turn };

struct Exemplar {
  ExemplarRoute route;
  std::string interaction_id;
  int turn_index = 0;  // 0 for interaction-level exemplars
  double score = 0.0;
};

ExemplarCorpus build_corpora(const std::vector<InteractionRecord>& train);

// Top k_history interaction-level matches for the concatenated history
// plus top k_turn turn-level matches for the current question; duplicates
// (same question/sql content) collapse and the freed slots backfill by
// rank up to min(k_history + k_turn, capacity).
std::vector<Exemplar> retrieve_exemplars(const std::string& current_question,
                                         const std::vector<std::string>& history,
                                         const ExemplarCorpus& corpus,
                                         size_t k_history = 10,
                                         size_t k_turn = 10);

// Assembles the few-shot prompt: schema preamble, optional token note,
// exemplars (QS with per-turn SQL, QQ with final targets only), then the
// current history and question.
std::string build_prompt(EvalMode mode, const std::vector<Exemplar>& exemplars,
                         const std::vector<InteractionRecord>& train,
                         const ExemplarCorpus& corpus,
                         const std::vector<std::string>& history,
                         const std::string& current_question, bool token_note);

}  // namespace seqsql
