#include "seqsql/corpus/record.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "seqsql/sqlcore/parser.hpp"
#include "seqsql/sqlcore/render.hpp"

namespace seqsql {

using nlohmann::json;

std::string origin_name(TurnOrigin o) {
  switch (o) {
    case TurnOrigin::Stage1: return "stage1";
    case TurnOrigin::Stage2: return "stage2";
    case TurnOrigin::Merged: return "merged";
    case TurnOrigin::Atomic: return "atomic";
  }
  return "stage1";
}

TurnOrigin origin_from_name(const std::string& name) {
  if (name == "stage2") return TurnOrigin::Stage2;
  if (name == "merged") return TurnOrigin::Merged;
  if (name == "atomic") return TurnOrigin::Atomic;
  return TurnOrigin::Stage1;
}

InteractionRecord record_from_plan(const DecompositionPlan& plan,
                                   const std::string& id) {
  InteractionRecord rec;
  rec.interaction_id = id;
  if (plan.source.stmt.index() != 0 || plan.source.select())
    rec.source_sql = render_sql(plan.source);
  for (const auto& t : plan.turns) {
    InteractionTurn it;
    it.index = t.index;
    it.sql = render_sql(t.ast);
    it.origin = origin_name(t.origin);
    rec.turns.push_back(std::move(it));
  }
  return rec;
}

DecompositionPlan plan_from_record(const InteractionRecord& rec) {
  DecompositionPlan plan;
  if (!rec.source_sql.empty()) plan.source = parse_sql(rec.source_sql);
  for (const auto& it : rec.turns) {
    TurnSql t;
    t.index = it.index;
    t.ast = parse_sql(it.sql);
    t.origin = origin_from_name(it.origin);
    plan.turns.push_back(std::move(t));
  }
  validate_plan(plan);
  return plan;
}

std::string record_to_json_line(const InteractionRecord& rec) {
  json j;
  j["format_version"] = kFormatVersion;
  j["interaction_id"] = rec.interaction_id;
  if (!rec.goal_nlq.empty()) j["goal_nlq"] = rec.goal_nlq;
  if (!rec.source_sql.empty()) j["source_sql"] = rec.source_sql;
  if (!rec.split_tags.empty()) j["split_tags"] = rec.split_tags;
  j["turns"] = json::array();
  for (const auto& t : rec.turns) {
    json jt;
    jt["index"] = t.index;
    jt["sql"] = t.sql;
    if (!t.nlq.empty()) jt["nlq"] = t.nlq;
    if (!t.categories.empty()) jt["categories"] = t.categories;
    if (!t.origin.empty()) jt["origin"] = t.origin;
    j["turns"].push_back(std::move(jt));
  }
  return j.dump();
}

InteractionRecord record_from_json_line(const std::string& line) {
  json j = json::parse(line);
  int version = j.value("format_version", 0);
  if (version != kFormatVersion)
    throw std::runtime_error("unsupported format_version " +
                             std::to_string(version));
  InteractionRecord rec;
  rec.interaction_id = j.value("interaction_id", "");
  rec.goal_nlq = j.value("goal_nlq", "");
  rec.source_sql = j.value("source_sql", "");
  if (j.contains("split_tags"))
    rec.split_tags = j["split_tags"].get<std::vector<std::string>>();
  for (const auto& jt : j.value("turns", json::array())) {
    InteractionTurn t;
    t.index = jt.value("index", 0);
    t.sql = jt.value("sql", "");
    t.nlq = jt.value("nlq", "");
    if (jt.contains("categories"))
      t.categories = jt["categories"].get<std::vector<std::string>>();
    t.origin = jt.value("origin", "");
    rec.turns.push_back(std::move(t));
  }
  return rec;
}

std::vector<InteractionRecord> read_records(std::istream& in) {
  std::vector<InteractionRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(record_from_json_line(line));
  }
  return out;
}

std::vector<InteractionRecord> read_records_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_records(in);
}

void write_records(std::ostream& out, const std::vector<InteractionRecord>& recs) {
  for (const auto& r : recs) out << record_to_json_line(r) << '\n';
}

void write_records_file(const std::string& path,
                        const std::vector<InteractionRecord>& recs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  write_records(out, recs);
}

}  // namespace seqsql
