#include "ctxkm/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

namespace ctxkm {
namespace {

double safe_f(double precision, double recall) {
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

}  // namespace

EvalReport evaluate(const Eigen::MatrixXd& scores, const LabelMatrix& truth) {
  truth.validate();
  const Eigen::Index N = scores.rows();
  const Eigen::Index K = scores.cols();
  if (truth.y.rows() != N || truth.y.cols() != K)
    fail(errc::shape, "evaluate: score matrix " + std::to_string(N) + "x" + std::to_string(K) +
                          " does not match truth " + std::to_string(truth.y.rows()) + "x" +
                          std::to_string(truth.y.cols()));
  if (N == 0 || K == 0) fail(errc::shape, "evaluate: empty score matrix");

  EvalReport report;

  // Sample-level F between predicted and true concept sets.
  double mfs_sum = 0.0;
  for (Eigen::Index p = 0; p < N; ++p) {
    int predicted = 0, actual = 0, hits = 0;
    for (Eigen::Index k = 0; k < K; ++k) {
      const bool pred = scores(p, k) > 0.0;
      const bool pos = truth.y(p, k) == 1;
      predicted += pred;
      actual += pos;
      hits += pred && pos;
    }
    mfs_sum += (predicted + actual == 0) ? 1.0 : 2.0 * hits / (predicted + actual);
  }
  report.mfs = mfs_sum / static_cast<double>(N);

  // Concept-level metrics and average precision.
  double mfc_sum = 0.0;
  double map_sum = 0.0;
  int map_concepts = 0;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(N));
  for (Eigen::Index k = 0; k < K; ++k) {
    ConceptMetrics cm;
    cm.name = truth.concepts[static_cast<std::size_t>(k)];
    int tp = 0, fp = 0, fn = 0;
    for (Eigen::Index p = 0; p < N; ++p) {
      const bool pred = scores(p, k) > 0.0;
      const bool pos = truth.y(p, k) == 1;
      tp += pred && pos;
      fp += pred && !pos;
      fn += !pred && pos;
    }
    cm.precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    cm.recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    cm.f = safe_f(cm.precision, cm.recall);
    cm.has_positives = (tp + fn) > 0;
    mfc_sum += cm.f;

    if (cm.has_positives) {
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return scores(a, k) > scores(b, k);
      });
      int positives_seen = 0;
      double ap_sum = 0.0;
      for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (truth.y(order[rank], k) == 1) {
          ++positives_seen;
          ap_sum += static_cast<double>(positives_seen) / static_cast<double>(rank + 1);
        }
      }
      cm.ap = ap_sum / positives_seen;
      map_sum += cm.ap;
      ++map_concepts;
    } else {
      log_warning("concept '" + cm.name + "' has no positive samples; excluded from MAP");
      cm.ap = 0.0;
    }
    report.per_concept.push_back(std::move(cm));
  }
  report.mfc = mfc_sum / static_cast<double>(K);
  report.map = map_concepts > 0 ? map_sum / map_concepts : 0.0;
  return report;
}

void write_report_csv(std::ostream& os, const EvalReport& report) {
  char buf[64];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return std::string(buf);
  };
  os << "concept,precision,recall,f_score,ap,mfs,mfc,map\n";
  for (const auto& cm : report.per_concept)
    os << cm.name << ',' << num(cm.precision) << ',' << num(cm.recall) << ',' << num(cm.f) << ','
       << num(cm.ap) << ",,,\n";
  os << "OVERALL,,,,," << num(report.mfs) << ',' << num(report.mfc) << ',' << num(report.map)
     << '\n';
}

void write_report_json(std::ostream& os, const EvalReport& report) {
  nlohmann::json j;
  j["mfs"] = report.mfs;
  j["mfc"] = report.mfc;
  j["map"] = report.map;
  j["per_concept"] = nlohmann::json::array();
  for (const auto& cm : report.per_concept)
    j["per_concept"].push_back({{"concept", cm.name},
                                {"precision", cm.precision},
                                {"recall", cm.recall},
                                {"f_score", cm.f},
                                {"ap", cm.ap},
                                {"in_map", cm.has_positives}});
  os << j.dump(2) << '\n';
}

}  // namespace ctxkm
