#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seqsql/corpus/record.hpp"
#include "seqsql/session/session.hpp"

namespace seqsql {

struct SynthDbSpec {
  size_t n_patients = 100;
  uint64_t seed = 0;
  // scales the per-parent row counts of the event tables
  double event_multiplier = 1.0;
};

extern const std::vector<std::string> kSchemaTables;  // all 13 names
extern const std::vector<std::string> kChartLabels;
extern const std::vector<std::string> kLabLabels;
extern const std::vector<std::string> kDrugs;

// Fills an open connection with the full schema plus seeded data
// satisfying foreign-key closure. Row counts scale linearly in
// n_patients.
void synth_db(const SynthDbSpec& spec, Db& db);
// Creates (or overwrites) a database file.
void synth_db_file(const SynthDbSpec& spec, const std::string& path);

struct TimingSample {
  double avg_ms = 0.0;
  double median_ms = 0.0;
  std::vector<double> samples;
};

// Wall-clock times for one statement, fresh connection per repetition.
TimingSample time_query(const std::string& db_path, const std::string& sql,
                        int reps = 3);

struct TimingRow {
  std::string interaction_id;
  int turn_index = 0;
  TimingSample standard;
  TimingSample tokenized;
  double reduction_pct = 0.0;
  bool excluded = false;  // standard time under the near-zero filter
  bool error = false;
  std::string note;
};

struct TimingReport {
  std::vector<TimingRow> rows;
  int reps = 0;
  double near_zero_ms = 0.0;
  size_t included = 0;
  size_t excluded = 0;
  double aggregate_standard_ms = 0.0;   // sum of included avgs
  double aggregate_tokenized_ms = 0.0;
  double aggregate_reduction_pct = 0.0;
};

// For every turn carrying a RESULT token: times the session execution
// (results memoized) against the inlined standard SQL, asserting the two
// produce equal rows. Rows whose standard time falls under near_zero_ms
// are excluded from aggregates.
TimingReport compare_execution(const std::vector<InteractionRecord>& corpus,
                               const std::string& db_path,
                               double near_zero_ms = 1.0, int reps = 3);

std::string timing_report_json(const TimingReport& report);
std::string timing_report_table(const TimingReport& report);

}  // namespace seqsql
