#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "seqsql/sqlcore/ast.hpp"
#include "seqsql/sqlcore/render.hpp"

namespace seqsql {

enum class TurnOrigin { Stage1, Stage2, Merged, Atomic };

struct TurnSql {
  int index = 0;  // 1-based position in the interaction
  SqlAst ast;     // may reference earlier turns
  TurnOrigin origin = TurnOrigin::Stage1;
};

struct DecompositionPlan {
  SqlAst source;  // original monolithic query (token-free)
  std::vector<TurnSql> turns;
};

struct DecomposeConfig {
  MaskConfig mask;
  // whole queries whose BPE template matches pass Stage 2 untouched
  std::set<std::string> atomic_templates;
  // schema-plumbing equality predicates that ride with the previous
  // peeled condition instead of getting their own turn
  std::set<std::string> plumbing_columns = {"d_items.linksto"};
};

const DecomposeConfig& default_decompose_config();

// Stage 1: innermost subqueries become the earliest turns; value positions
// are replaced by PREV_RESULT tokens, derived tables by PREV_QUERY tokens.
std::vector<TurnSql> decompose_nesting(const SqlAst& ast);

// Stage 2: peels WHERE conjuncts, ORDER BY/LIMIT and SELECT aggregation
// off one turn. `start_index` is the global index of the first emitted
// turn; internal references use final global indices.
std::vector<TurnSql> decompose_clauses(const TurnSql& turn, int start_index = 1,
                                       const DecomposeConfig& cfg = default_decompose_config());

// Stages 1+2 for a single query.
DecompositionPlan decompose_pipeline(const SqlAst& ast,
                                     const DecomposeConfig& cfg = default_decompose_config());

// Stage 3: corpus-level BPE merging of frequent adjacent turn-template
// bigrams. Deterministic for fixed inputs and seed.
struct MergeOptions {
  size_t threshold_stage1 = 100;
  size_t threshold_stage2 = 150;
  double sample_ratio = 0.5;
  uint64_t seed = 0;
};
std::vector<DecompositionPlan> merge_frequent(std::vector<DecompositionPlan> corpus,
                                              const MergeOptions& opts,
                                              const DecomposeConfig& cfg = default_decompose_config());

// Recursively expands every token up to `index` into standard SQL.
// Throws ResolutionError on dangling references.
SqlAst inline_all(const std::vector<TurnSql>& turns, int index);

// Fuses a PREV_QUERY extension clause into the statement it references.
SelectPtr fuse_extension(const SelectPtr& base, const PrevExtension& ext);

// Asserts the monotone-reference invariant (every token points backward).
void validate_plan(const DecompositionPlan& plan);

// Turn template with token indices stripped; the unit of BPE counting.
std::string turn_template_key(const SqlAst& ast, const MaskConfig& cfg);

// Rewrites every token turn index through `fn`.
SqlAst renumber_tokens(const SqlAst& ast, const std::function<int(int)>& fn);

}  // namespace seqsql
