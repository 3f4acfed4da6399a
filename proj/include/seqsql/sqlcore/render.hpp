#pragma once

#include <set>
#include <string>
#include <vector>

#include "seqsql/sqlcore/ast.hpp"

namespace seqsql {

enum class MaskPolicy { None, Bpe, Composition, NlqNorm };

enum class SlotKind { Value, Table, Column, Alias, Agg, Rank, TimeFilter, Prev };

struct Slot {
  SlotKind kind;
  std::string placeholder;  // as it appears in masked_text
  std::string original;     // canonical rendering of the masked fragment
  size_t offset;            // byte offset of placeholder in masked_text
};

struct SqlTemplate {
  std::string masked_text;
  MaskPolicy policy = MaskPolicy::None;
  std::vector<Slot> slots;
};

// Columns whose predicate groups count as time filters. The list is
// configuration; these defaults cover the bundled schema.
struct MaskConfig {
  std::set<std::string> temporal_columns = {
      "admittime", "dischtime", "charttime", "startdate",
      "dob",       "dod",       "intime",    "outtime"};
};

const MaskConfig& default_mask_config();

// Canonical single-line rendering: uppercase keywords, lowercase
// identifiers, single-quoted strings, single spaces.
std::string render_sql(const SqlAst& ast);

SqlTemplate mask_template(const SqlAst& ast, MaskPolicy policy,
                          const MaskConfig& config = default_mask_config());

// Re-substitutes slot originals into masked_text; inverse of mask_template.
std::string unmask(const SqlTemplate& tpl);

// Structural equality via canonical-form comparison.
bool ast_equal(const SqlAst& a, const SqlAst& b);

// All TokenRef leaves in left-to-right (render) order.
std::vector<TokenRef> extract_token_refs(const SqlAst& ast);

}  // namespace seqsql
