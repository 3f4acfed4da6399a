#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "seqsql/decomposer/decompose.hpp"

namespace seqsql {

inline constexpr int kFormatVersion = 1;

// Canonical on-disk form of one multi-turn interaction (JSONL, one record
// per line, each line carrying format_version).
struct InteractionTurn {
  int index = 0;
  std::string sql;  // dialect text, may carry tokens
  std::string nlq;
  std::vector<std::string> categories;
  std::string origin;  // stage1 | stage2 | merged | atomic, may be empty
};

struct InteractionRecord {
  std::string interaction_id;
  std::string goal_nlq;
  std::string source_sql;  // monolithic query, may be empty
  std::vector<std::string> split_tags;
  std::vector<InteractionTurn> turns;
};

std::string origin_name(TurnOrigin o);
TurnOrigin origin_from_name(const std::string& name);

InteractionRecord record_from_plan(const DecompositionPlan& plan,
                                   const std::string& id);
// Parses the sql fields back into a plan; source may be empty.
DecompositionPlan plan_from_record(const InteractionRecord& rec);

std::string record_to_json_line(const InteractionRecord& rec);
InteractionRecord record_from_json_line(const std::string& line);

std::vector<InteractionRecord> read_records(std::istream& in);
std::vector<InteractionRecord> read_records_file(const std::string& path);
void write_records(std::ostream& out, const std::vector<InteractionRecord>& recs);
void write_records_file(const std::string& path,
                        const std::vector<InteractionRecord>& recs);

}  // namespace seqsql
