#include "seqsql/benchkit/corpusgen.hpp"

#include <random>

#include "seqsql/benchkit/bench.hpp"

namespace seqsql {
namespace {

std::string adm_sub(long long patient) {
  return "( SELECT admissions.hadm_id FROM admissions WHERE "
         "admissions.subject_id = " + std::to_string(patient) + " )";
}

std::string icu_sub(long long patient) {
  return "( SELECT icustays.icustay_id FROM icustays WHERE icustays.hadm_id "
         "IN " + adm_sub(patient) + " )";
}

std::string item_sub(const std::string& label) {
  return "( SELECT d_items.itemid FROM d_items WHERE d_items.label = '" +
         label + "' AND d_items.linksto = 'chartevents' )";
}

std::string labitem_sub(const std::string& label) {
  return "( SELECT d_labitems.itemid FROM d_labitems WHERE d_labitems.label "
         "= '" + label + "' )";
}

std::string chart_values(long long patient, const std::string& label) {
  return "SELECT chartevents.valuenum FROM chartevents WHERE "
         "chartevents.icustay_id IN " + icu_sub(patient) +
         " AND chartevents.itemid IN " + item_sub(label);
}

std::string lab_values(long long patient, const std::string& label) {
  return "SELECT labevents.valuenum FROM labevents WHERE labevents.hadm_id "
         "IN " + adm_sub(patient) + " AND labevents.itemid IN " +
         labitem_sub(label);
}

}  // namespace

std::vector<std::string> generate_nested_queries(const CorpusGenOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  auto patient = [&]() {
    return static_cast<long long>(1 + rng() % (opts.n_patients ? opts.n_patients : 1));
  };
  auto chart_label = [&]() { return kChartLabels[rng() % kChartLabels.size()]; };
  auto lab_label = [&]() { return kLabLabels[rng() % kLabLabels.size()]; };
  auto agg = [&]() {
    static const char* aggs[] = {"MAX", "MIN", "AVG"};
    return std::string(aggs[rng() % 3]);
  };

  std::vector<std::string> out;
  while (out.size() < opts.count) {
    switch (rng() % 8) {
      case 0:
        out.push_back(chart_values(patient(), chart_label()));
        break;
      case 1: {
        std::string a = agg();
        long long p = patient();
        std::string l = chart_label();
        out.push_back("SELECT " + a +
                      "(chartevents.valuenum) FROM chartevents WHERE "
                      "chartevents.icustay_id IN " + icu_sub(p) +
                      " AND chartevents.itemid IN " + item_sub(l));
        break;
      }
      case 2:
        out.push_back(lab_values(patient(), lab_label()) +
                      " ORDER BY labevents.charttime DESC LIMIT 1");
        break;
      case 3: {
        static const char* routes[] = {"po", "iv", "im"};
        out.push_back(
            "SELECT prescriptions.drug FROM prescriptions WHERE "
            "prescriptions.hadm_id IN " + adm_sub(patient()) +
            " AND prescriptions.route = '" + routes[rng() % 3] + "'");
        break;
      }
      case 4: {
        long long p = patient();
        std::string l = lab_label();
        out.push_back("SELECT ( SELECT MAX(labevents.valuenum) FROM labevents "
                      "WHERE labevents.hadm_id IN " + adm_sub(p) +
                      " AND labevents.itemid IN " + labitem_sub(l) +
                      " ) - ( SELECT MIN(labevents.valuenum) FROM labevents "
                      "WHERE labevents.hadm_id IN " + adm_sub(p) +
                      " AND labevents.itemid IN " + labitem_sub(l) + " )");
        break;
      }
      case 5: {
        long long p = patient();
        std::string l = lab_label();
        out.push_back(
            "SELECT labevents.valuenum FROM labevents WHERE "
            "labevents.hadm_id IN " + adm_sub(p) +
            " AND labevents.itemid IN " + labitem_sub(l) +
            " AND labevents.valuenum > ( SELECT AVG(labevents.valuenum) "
            "FROM labevents WHERE labevents.hadm_id IN " + adm_sub(p) +
            " AND labevents.itemid IN " + labitem_sub(l) + " )");
        break;
      }
      case 6:
        out.push_back("SELECT SUM(cost.cost) FROM cost WHERE cost.hadm_id IN " +
                      adm_sub(patient()));
        break;
      default:
        out.push_back(
            "SELECT microbiologyevents.org_name FROM microbiologyevents "
            "WHERE microbiologyevents.org_name IS NOT NULL AND "
            "microbiologyevents.hadm_id IN " + adm_sub(patient()));
        break;
    }
  }
  return out;
}

}  // namespace seqsql
