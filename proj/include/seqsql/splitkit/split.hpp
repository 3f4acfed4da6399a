#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "seqsql/corpus/record.hpp"
#include "seqsql/sqlcore/render.hpp"

namespace seqsql {

// One interaction-goal template plus the turn templates it decomposes
// into. Members are corpus positions (0-based).
struct CompositionRecord {
  int composition_id = 0;  // 1-based, in order of first appearance
  std::string composition_template;    // whole-query template
  std::set<std::string> component_set;  // turn templates
  std::vector<size_t> members;
};

struct SplitManifest {
  std::set<int> train;
  std::set<int> test;
  size_t train_interactions = 0;
  size_t test_interactions = 0;
  size_t train_turns = 0;
  size_t test_turns = 0;
  size_t component_universe = 0;
};

// Template of a single turn under the whole-query masking policy, token
// indices stripped.
std::string component_key(const SqlAst& ast,
                          const MaskConfig& cfg = default_mask_config());
std::string composition_key(const SqlAst& source,
                            const MaskConfig& cfg = default_mask_config());

std::vector<CompositionRecord> build_compositions(
    const std::vector<InteractionRecord>& corpus,
    const MaskConfig& cfg = default_mask_config());

// Starts with everything in train; repeatedly moves the composition with
// the most unique components to test while all test component sets stay
// covered by the remaining train set. Ties break toward the smallest id.
SplitManifest greedy_split(const std::vector<CompositionRecord>& compositions);

bool coverage_holds(const std::vector<CompositionRecord>& compositions,
                    const SplitManifest& manifest);

// Reads a {"compositions": [{composition_id, template, components}]} file.
std::vector<CompositionRecord> load_composition_fixture(const std::string& path);

// Nodes are condition values; interactions sharing a value are adjacent.
struct ContextGraph {
  std::vector<std::set<std::string>> values;   // per corpus position
  std::map<std::string, std::vector<size_t>> value_members;
  std::vector<std::set<size_t>> adjacency;     // per corpus position
};

ContextGraph build_context_graph(const std::vector<InteractionRecord>& corpus,
                                 const MaskConfig& cfg = default_mask_config());

struct LongGenOptions {
  size_t count = 100;
  uint64_t seed = 0;
  size_t target_turns = 14;  // stop a walk once this many turns accumulate
};

// Chains related interactions (each segment shares a condition value with
// the one before) into longer records, renumbering tokens per segment.
std::vector<InteractionRecord> generate_long_interactions(
    const std::vector<InteractionRecord>& corpus, const ContextGraph& graph,
    const LongGenOptions& opts);

}  // namespace seqsql
