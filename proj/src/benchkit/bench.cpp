#include "seqsql/benchkit/bench.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>

#include "json.hpp"
#include "seqsql/evalkit/eval.hpp"
#include "seqsql/sqlcore/parser.hpp"
#include "seqsql/sqlcore/render.hpp"

namespace seqsql {

const std::vector<std::string> kSchemaTables = {
    "admissions",   "icustays",           "chartevents",  "d_items",
    "labevents",    "d_labitems",         "prescriptions", "microbiologyevents",
    "outputevents", "inputevents_cv",     "cost",          "diagnoses_icd",
    "procedures_icd"};

const std::vector<std::string> kChartLabels = {
    "admit wt",      "heart rate",    "arterial bp [diastolic]",
    "arterial bp [systolic]", "respiratory rate", "temperature c",
    "o2 saturation", "daily weight",  "gcs total",
    "central venous pressure", "glucose finger stick", "urine out foley"};

const std::vector<std::string> kLabLabels = {
    "glucose",   "hemoglobin", "creatinine", "sodium",    "potassium",
    "platelets", "wbc",        "hematocrit", "bilirubin", "lactate"};

const std::vector<std::string> kDrugs = {
    "aspirin",     "nateglinide", "heparin",  "insulin",   "warfarin",
    "metformin",   "lisinopril",  "morphine", "vancomycin", "furosemide"};

namespace {

const char* kSchemaSql = R"sql(
CREATE TABLE admissions (row_id INTEGER PRIMARY KEY, subject_id INT, hadm_id INT,
  admittime TEXT, dischtime TEXT, dob TEXT, dod TEXT, admission_type TEXT);
CREATE TABLE icustays (row_id INTEGER PRIMARY KEY, icustay_id INT, hadm_id INT,
  intime TEXT, outtime TEXT);
CREATE TABLE chartevents (row_id INTEGER PRIMARY KEY, icustay_id INT, itemid INT,
  charttime TEXT, valuenum REAL);
CREATE TABLE d_items (row_id INTEGER PRIMARY KEY, itemid INT, label TEXT, linksto TEXT);
CREATE TABLE labevents (row_id INTEGER PRIMARY KEY, hadm_id INT, itemid INT,
  charttime TEXT, valuenum REAL);
CREATE TABLE d_labitems (row_id INTEGER PRIMARY KEY, itemid INT, label TEXT);
CREATE TABLE prescriptions (row_id INTEGER PRIMARY KEY, hadm_id INT, drug TEXT,
  route TEXT, startdate TEXT);
CREATE TABLE microbiologyevents (row_id INTEGER PRIMARY KEY, hadm_id INT,
  charttime TEXT, spec_type_desc TEXT, org_name TEXT);
CREATE TABLE outputevents (row_id INTEGER PRIMARY KEY, icustay_id INT,
  charttime TEXT, itemid INT, value REAL);
CREATE TABLE inputevents_cv (row_id INTEGER PRIMARY KEY, icustay_id INT,
  charttime TEXT, itemid INT, amount REAL);
CREATE TABLE cost (row_id INTEGER PRIMARY KEY, hadm_id INT, event_type TEXT,
  event_id INT, cost REAL);
CREATE TABLE diagnoses_icd (row_id INTEGER PRIMARY KEY, hadm_id INT,
  icd9_code TEXT, charttime TEXT);
CREATE TABLE procedures_icd (row_id INTEGER PRIMARY KEY, hadm_id INT,
  icd9_code TEXT, charttime TEXT);
-- event-side lookups stay fast at any scale; the filter columns of the
-- dimension tables are deliberately unindexed
CREATE INDEX idx_icustays_hadm ON icustays(hadm_id);
CREATE INDEX idx_chartevents_icustay ON chartevents(icustay_id);
CREATE INDEX idx_chartevents_itemid ON chartevents(itemid);
CREATE INDEX idx_labevents_hadm ON labevents(hadm_id);
CREATE INDEX idx_labevents_itemid ON labevents(itemid);
CREATE INDEX idx_prescriptions_hadm ON prescriptions(hadm_id);
CREATE INDEX idx_outputevents_icustay ON outputevents(icustay_id);
CREATE INDEX idx_inputevents_icustay ON inputevents_cv(icustay_id);
CREATE INDEX idx_cost_hadm ON cost(hadm_id);
CREATE INDEX idx_diagnoses_hadm ON diagnoses_icd(hadm_id);
CREATE INDEX idx_procedures_hadm ON procedures_icd(hadm_id);
)sql";

class Inserter {
 public:
  Inserter(Db& db, const std::string& sql) : db_(db.handle()) {
    if (sqlite3_prepare_v2(db_, sql.c_str(), -1, &stmt_, nullptr) != SQLITE_OK)
      throw SessionError(std::string("prepare failed: ") + sqlite3_errmsg(db_));
  }
  ~Inserter() { sqlite3_finalize(stmt_); }

  Inserter& i(long long v) { sqlite3_bind_int64(stmt_, ++col_, v); return *this; }
  Inserter& d(double v) { sqlite3_bind_double(stmt_, ++col_, v); return *this; }
  Inserter& t(const std::string& v) {
    sqlite3_bind_text(stmt_, ++col_, v.c_str(), -1, SQLITE_TRANSIENT);
    return *this;
  }
  Inserter& null() { sqlite3_bind_null(stmt_, ++col_); return *this; }
  void done() {
    if (sqlite3_step(stmt_) != SQLITE_DONE)
      throw SessionError(std::string("insert failed: ") + sqlite3_errmsg(db_));
    sqlite3_reset(stmt_);
    col_ = 0;
  }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
  int col_ = 0;
};

std::string timestamp(std::mt19937_64& rng, int year_lo, int year_hi) {
  char buf[32];
  int year = year_lo + static_cast<int>(rng() % (year_hi - year_lo + 1));
  int month = 1 + static_cast<int>(rng() % 12);
  int day = 1 + static_cast<int>(rng() % 28);
  int hour = static_cast<int>(rng() % 24);
  int minute = static_cast<int>(rng() % 60);
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:%02d:00", year, month,
                day, hour, minute);
  return buf;
}

}  // namespace

void synth_db(const SynthDbSpec& spec, Db& db) {
  std::mt19937_64 rng(spec.seed);
  db.exec("PRAGMA journal_mode = OFF; PRAGMA synchronous = OFF;");
  db.exec(kSchemaSql);
  db.exec("BEGIN");
  auto scaled = [&](size_t base) {
    size_t n = static_cast<size_t>(base * spec.event_multiplier);
    return n == 0 ? size_t{1} : n;
  };

  Inserter ins_item(db, "INSERT INTO d_items VALUES (?,?,?,?)");
  for (size_t i = 0; i < kChartLabels.size(); ++i)
    ins_item.i(i + 1).i(i + 1).t(kChartLabels[i]).t("chartevents").done();
  Inserter ins_labitem(db, "INSERT INTO d_labitems VALUES (?,?,?)");
  for (size_t i = 0; i < kLabLabels.size(); ++i)
    ins_labitem.i(i + 1).i(i + 1).t(kLabLabels[i]).done();

  Inserter ins_adm(db, "INSERT INTO admissions VALUES (?,?,?,?,?,?,?,?)");
  Inserter ins_icu(db, "INSERT INTO icustays VALUES (?,?,?,?,?)");
  Inserter ins_chart(db, "INSERT INTO chartevents VALUES (?,?,?,?,?)");
  Inserter ins_lab(db, "INSERT INTO labevents VALUES (?,?,?,?,?)");
  Inserter ins_rx(db, "INSERT INTO prescriptions VALUES (?,?,?,?,?)");
  Inserter ins_micro(db, "INSERT INTO microbiologyevents VALUES (?,?,?,?,?)");
  Inserter ins_out(db, "INSERT INTO outputevents VALUES (?,?,?,?,?)");
  Inserter ins_in(db, "INSERT INTO inputevents_cv VALUES (?,?,?,?,?)");
  Inserter ins_cost(db, "INSERT INTO cost VALUES (?,?,?,?,?)");
  Inserter ins_dx(db, "INSERT INTO diagnoses_icd VALUES (?,?,?,?)");
  Inserter ins_proc(db, "INSERT INTO procedures_icd VALUES (?,?,?,?)");

  const char* admission_types[] = {"emergency", "elective", "urgent"};
  const char* routes[] = {"po", "iv", "im"};
  const char* specs[] = {"blood", "urine", "sputum", "swab"};
  const char* orgs[] = {"staphylococcus aureus", "escherichia coli",
                        "klebsiella pneumoniae"};
  const char* icd[] = {"4019", "4280", "42731", "5849", "25000", "2724"};

  long long adm_row = 0, icu_row = 0, chart_row = 0, lab_row = 0, rx_row = 0;
  long long micro_row = 0, out_row = 0, in_row = 0, cost_row = 0, dx_row = 0,
            proc_row = 0;
  long long hadm_seq = 0, icustay_seq = 0;

  for (size_t p = 1; p <= spec.n_patients; ++p) {
    std::string dob = timestamp(rng, 2040, 2080);
    bool dead = rng() % 10 == 0;
    std::string dod = dead ? timestamp(rng, 2100, 2105) : "";
    size_t n_adm = 1 + rng() % 3;
    for (size_t a = 0; a < n_adm; ++a) {
      long long hadm = ++hadm_seq;
      std::string admit = timestamp(rng, 2100, 2105);
      bool open_stay = rng() % 10 == 0;
      ++adm_row;
      ins_adm.i(adm_row).i(static_cast<long long>(p)).i(hadm).t(admit);
      if (open_stay) ins_adm.null(); else ins_adm.t(timestamp(rng, 2100, 2105));
      ins_adm.t(dob);
      if (dod.empty()) ins_adm.null(); else ins_adm.t(dod);
      ins_adm.t(admission_types[rng() % 3]).done();

      for (size_t r = 0; r < scaled(2); ++r) {
        ++rx_row;
        ins_rx.i(rx_row).i(hadm).t(kDrugs[rng() % kDrugs.size()])
            .t(routes[rng() % 3]).t(timestamp(rng, 2100, 2105)).done();
      }
      for (size_t r = 0; r < scaled(4); ++r) {
        ++lab_row;
        ins_lab.i(lab_row).i(hadm)
            .i(static_cast<long long>(1 + rng() % kLabLabels.size()))
            .t(timestamp(rng, 2100, 2105))
            .d(static_cast<double>(rng() % 2000) / 10.0).done();
      }
      if (rng() % 2 == 0) {
        ++micro_row;
        ins_micro.i(micro_row).i(hadm).t(timestamp(rng, 2100, 2105))
            .t(specs[rng() % 4]);
        if (rng() % 3 == 0) ins_micro.null(); else ins_micro.t(orgs[rng() % 3]);
        ins_micro.done();
      }
      for (size_t r = 0; r < scaled(1); ++r) {
        ++cost_row;
        ins_cost.i(cost_row).i(hadm).t(rng() % 2 ? "lab" : "rx")
            .i(static_cast<long long>(rng() % 1000))
            .d(static_cast<double>(rng() % 50000) / 100.0).done();
      }
      for (size_t r = 0; r < scaled(1); ++r) {
        ++dx_row;
        ins_dx.i(dx_row).i(hadm).t(icd[rng() % 6]).t(timestamp(rng, 2100, 2105)).done();
        ++proc_row;
        ins_proc.i(proc_row).i(hadm).t(icd[rng() % 6]).t(timestamp(rng, 2100, 2105)).done();
      }

      size_t n_icu = rng() % 3;  // 0..2
      for (size_t s = 0; s < n_icu; ++s) {
        long long icu = ++icustay_seq;
        ++icu_row;
        ins_icu.i(icu_row).i(icu).i(hadm).t(timestamp(rng, 2100, 2105))
            .t(timestamp(rng, 2100, 2105)).done();
        for (size_t r = 0; r < scaled(6); ++r) {
          ++chart_row;
          ins_chart.i(chart_row).i(icu)
              .i(static_cast<long long>(1 + rng() % kChartLabels.size()))
              .t(timestamp(rng, 2100, 2105))
              .d(static_cast<double>(rng() % 3000) / 10.0).done();
        }
        for (size_t r = 0; r < scaled(2); ++r) {
          ++out_row;
          ins_out.i(out_row).i(icu).t(timestamp(rng, 2100, 2105))
              .i(static_cast<long long>(1 + rng() % 5))
              .d(static_cast<double>(rng() % 1000) / 10.0).done();
          ++in_row;
          ins_in.i(in_row).i(icu).t(timestamp(rng, 2100, 2105))
              .i(static_cast<long long>(1 + rng() % 5))
              .d(static_cast<double>(rng() % 1000) / 10.0).done();
        }
      }
    }
  }
  db.exec("COMMIT");
  // the planner needs stats: itemid columns have only a handful of
  // distinct values, so without them it favors the wrong index
  db.exec("ANALYZE");
}

void synth_db_file(const SynthDbSpec& spec, const std::string& path) {
  std::remove(path.c_str());
  Db db(path);
  synth_db(spec, db);
}

namespace {

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  size_t n = xs.size();
  return n % 2 ? xs[n / 2] : (xs[n / 2 - 1] + xs[n / 2]) / 2.0;
}

TimingSample summarize(std::vector<double> samples) {
  TimingSample s;
  s.samples = samples;
  for (double x : samples) s.avg_ms += x;
  if (!samples.empty()) s.avg_ms /= static_cast<double>(samples.size());
  if (!samples.empty()) s.median_ms = median(samples);
  return s;
}

}  // namespace

TimingSample time_query(const std::string& db_path, const std::string& sql,
                        int reps) {
  std::vector<double> samples;
  for (int r = 0; r < reps; ++r) {
    Db db(db_path);
    auto start = std::chrono::steady_clock::now();
    db.query(sql);
    auto end = std::chrono::steady_clock::now();
    samples.push_back(
        std::chrono::duration<double, std::milli>(end - start).count());
  }
  return summarize(samples);
}

TimingReport compare_execution(const std::vector<InteractionRecord>& corpus,
                               const std::string& db_path, double near_zero_ms,
                               int reps) {
  TimingReport report;
  report.reps = reps;
  report.near_zero_ms = near_zero_ms;
  for (const auto& rec : corpus) {
    DecompositionPlan plan;
    try {
      plan = plan_from_record(rec);
    } catch (const std::exception& e) {
      TimingRow row;
      row.interaction_id = rec.interaction_id;
      row.error = true;
      row.note = e.what();
      report.rows.push_back(std::move(row));
      continue;
    }
    std::vector<int> qualifying;
    for (const auto& t : plan.turns)
      for (const TokenRef& ref : extract_token_refs(t.ast))
        if (ref.kind == TokenKind::Result) {
          qualifying.push_back(t.index);
          break;
        }
    if (qualifying.empty()) continue;

    // per-turn tokenized samples across reps, fresh session each rep
    std::map<int, std::vector<double>> token_samples;
    std::map<int, ResultTable> token_tables;
    bool replay_error = false;
    std::string replay_note;
    for (int r = 0; r < reps && !replay_error; ++r) {
      try {
        Db db(db_path);
        auto results = replay_interaction(db, plan.turns);
        for (int idx : qualifying) {
          token_samples[idx].push_back(results[idx - 1].exec_ms);
          if (r == 0) token_tables[idx] = results[idx - 1].table;
        }
      } catch (const std::exception& e) {
        replay_error = true;
        replay_note = e.what();
      }
    }
    for (int idx : qualifying) {
      TimingRow row;
      row.interaction_id = rec.interaction_id;
      row.turn_index = idx;
      if (replay_error) {
        row.error = true;
        row.note = replay_note;
        report.rows.push_back(std::move(row));
        continue;
      }
      try {
        std::string standard_sql = render_sql(inline_all(plan.turns, idx));
        std::vector<double> std_samples;
        ResultTable std_table;
        for (int r = 0; r < reps; ++r) {
          Db db(db_path);
          auto start = std::chrono::steady_clock::now();
          ResultTable t = db.query(standard_sql);
          auto end = std::chrono::steady_clock::now();
          std_samples.push_back(
              std::chrono::duration<double, std::milli>(end - start).count());
          if (r == 0) std_table = std::move(t);
        }
        if (!results_equal(std_table, token_tables[idx], false)) {
          row.error = true;
          row.note = "tokenized and standard results differ";
          report.rows.push_back(std::move(row));
          continue;
        }
        row.standard = summarize(std_samples);
        row.tokenized = summarize(token_samples[idx]);
        if (row.standard.avg_ms > 0.0)
          row.reduction_pct =
              (row.standard.avg_ms - row.tokenized.avg_ms) / row.standard.avg_ms * 100.0;
        row.excluded = row.standard.avg_ms < near_zero_ms;
      } catch (const std::exception& e) {
        row.error = true;
        row.note = e.what();
      }
      report.rows.push_back(std::move(row));
    }
  }
  for (const auto& row : report.rows) {
    if (row.error) continue;
    if (row.excluded) {
      ++report.excluded;
      continue;
    }
    ++report.included;
    report.aggregate_standard_ms += row.standard.avg_ms;
    report.aggregate_tokenized_ms += row.tokenized.avg_ms;
  }
  if (report.aggregate_standard_ms > 0.0)
    report.aggregate_reduction_pct =
        (report.aggregate_standard_ms - report.aggregate_tokenized_ms) /
        report.aggregate_standard_ms * 100.0;
  return report;
}

std::string timing_report_json(const TimingReport& report) {
  nlohmann::json j;
  j["reps"] = report.reps;
  j["near_zero_ms"] = report.near_zero_ms;
  j["included"] = report.included;
  j["excluded"] = report.excluded;
  j["aggregate_standard_ms"] = report.aggregate_standard_ms;
  j["aggregate_tokenized_ms"] = report.aggregate_tokenized_ms;
  j["aggregate_reduction_pct"] = report.aggregate_reduction_pct;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : report.rows) {
    nlohmann::json jr;
    jr["interaction_id"] = row.interaction_id;
    jr["turn_index"] = row.turn_index;
    jr["standard_avg_ms"] = row.standard.avg_ms;
    jr["standard_median_ms"] = row.standard.median_ms;
    jr["tokenized_avg_ms"] = row.tokenized.avg_ms;
    jr["tokenized_median_ms"] = row.tokenized.median_ms;
    jr["reduction_pct"] = row.reduction_pct;
    jr["excluded"] = row.excluded;
    if (row.error) {
      jr["error"] = true;
      jr["note"] = row.note;
    }
    j["rows"].push_back(std::move(jr));
  }
  return j.dump(2);
}

std::string timing_report_table(const TimingReport& report) {
  char buf[256];
  std::string out =
      "interaction        turn  std avg   std med   tok avg   tok med   reduction\n";
  for (const auto& row : report.rows) {
    if (row.error) {
      std::snprintf(buf, sizeof(buf), "%-18s %4d  error: %s\n",
                    row.interaction_id.c_str(), row.turn_index, row.note.c_str());
      out += buf;
      continue;
    }
    std::snprintf(buf, sizeof(buf),
                  "%-18s %4d  %7.3f   %7.3f   %7.3f   %7.3f   %7.2f%%%s\n",
                  row.interaction_id.c_str(), row.turn_index,
                  row.standard.avg_ms, row.standard.median_ms,
                  row.tokenized.avg_ms, row.tokenized.median_ms,
                  row.reduction_pct, row.excluded ? " (excluded)" : "");
    out += buf;
  }
  std::snprintf(buf, sizeof(buf),
                "aggregate over %zu rows (%zu excluded): %.3f ms -> %.3f ms "
                "(%.2f%% reduction)\n",
                report.included, report.excluded, report.aggregate_standard_ms,
                report.aggregate_tokenized_ms, report.aggregate_reduction_pct);
  out += buf;
  return out;
}

}  // namespace seqsql
