#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "seqsql/decomposer/decompose.hpp"
#include "seqsql/sqlcore/render.hpp"

namespace seqsql {

struct NlqError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One row of the question-template table. sql_template is the
// NLQ-normalization mask text and serves as the lookup key; nlq_template
// is the canonical wording whose bracketed placeholders address the mask
// slots by kind and ordinal ([SELECT.col.1], [val_placeholder], [PREV.1],
// [FROM.table], [agg_function], [n_rank], [time_filter_globalK], ...).
struct NlqTemplate {
  std::string template_id;
  std::string sql_template;
  std::string nlq_template;
};

struct TemplateTable {
  std::vector<NlqTemplate> rows;
  const NlqTemplate* find_sql(const std::string& sql_template) const;
  const NlqTemplate* find_id(const std::string& template_id) const;
};

// table or table.column (or bare column as fallback) -> phrase
using SchemaLexicon = std::map<std::string, std::string>;
// canonical rendering of a time-filter fragment -> phrase
using TimeLexicon = std::map<std::string, std::string>;
// template_id -> alternative wordings (canonical text is variant 0)
using ParaphraseBank = std::map<std::string, std::vector<std::string>>;

TemplateTable load_templates(const std::string& path);
SchemaLexicon load_lexicon(const std::string& path);
TimeLexicon load_time_lexicon(const std::string& path);
ParaphraseBank load_paraphrases(const std::string& path);

struct NlqResources {
  TemplateTable templates;
  SchemaLexicon lexicon;
  TimeLexicon time_lexicon;
  ParaphraseBank paraphrases;
};

// Loads templates.tsv, lexicon.tsv, time_lexicon.tsv, paraphrases.json
// from one directory.
NlqResources load_nlq_resources(const std::string& data_dir);

// Abstracts identifiers and condition values of one turn; the masked
// text is the template-table key.
SqlTemplate normalize_subquery(const SqlAst& ast,
                               const MaskConfig& cfg = default_mask_config());

// Slot-fills the matching question template. When the paraphrase bank
// holds alternatives for the template, the wording is chosen by seeded
// RNG. Throws NlqError on an unmatched template or a lexicon miss.
std::string generate_nlq(const SqlAst& ast, const NlqResources& res,
                         uint64_t seed = 0,
                         const MaskConfig& cfg = default_mask_config());

// True iff every condition value and every turn reference of the query
// is stated in the question text.
bool nlq_covers_sql(const SqlAst& ast, const std::string& nlq,
                    const MaskConfig& cfg = default_mask_config());

struct ParaphraseCheck {
  bool ok = true;
  std::vector<std::string> missing;     // placeholders absent or short
  std::vector<std::string> duplicated;  // placeholders repeated
};

// A paraphrase must keep every placeholder of the original exactly as
// often as the original uses it.
ParaphraseCheck validate_paraphrase(const std::string& original,
                                    const std::string& paraphrase);

struct TurnCategories {
  bool independent = false;
  bool referential = false;
  bool filtering = false;
  bool modifying = false;
  std::vector<std::string> names() const;
};

TurnCategories categorize_turn(const DecompositionPlan& plan, size_t pos,
                               const MaskConfig& cfg = default_mask_config());

}  // namespace seqsql
