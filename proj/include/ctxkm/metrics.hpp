#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "ctxkm/featio.hpp"

namespace ctxkm {

struct ConceptMetrics {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
  double ap = 0.0;
  bool has_positives = false;  // concepts without positives are excluded from MAP
};

struct EvalReport {
  double mfs = 0.0;  // mean per-sample F between predicted and true concept sets
  double mfc = 0.0;  // mean per-concept F over samples
  double map = 0.0;  // mean average precision over concepts with positives
  std::vector<ConceptMetrics> per_concept;
};

// Decision rule: a concept is present iff its score is strictly positive.
// AP ranks samples by descending score, ties broken by ascending sample
// index; a sample with empty predicted and true sets scores F = 1.
EvalReport evaluate(const Eigen::MatrixXd& scores, const LabelMatrix& truth);

void write_report_csv(std::ostream& os, const EvalReport& report);
void write_report_json(std::ostream& os, const EvalReport& report);

}  // namespace ctxkm
