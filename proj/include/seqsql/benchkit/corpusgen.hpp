#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace seqsql {

struct CorpusGenOptions {
  size_t count = 500;
  uint64_t seed = 0;
  size_t n_patients = 100;  // value ranges match synth_db at this scale
};

// Seeded nested-query corpus over the synthetic schema; every query
// contains at least one subquery.
std::vector<std::string> generate_nested_queries(const CorpusGenOptions& opts);

}  // namespace seqsql
