#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "stacklab/engine.hpp"
#include "stacklab/ground_truth.hpp"
#include "stacklab/interventions.hpp"

namespace stacklab::test_support {

inline double logit(double p) { return std::log(p / (1.0 - p)); }
inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Record whose sample s holds values[s][e] as rho_true at epoch e.
inline TrajectoryRecord make_record(const std::vector<std::vector<double>>& values) {
  TrajectoryRecord rec;
  rec.dimension = 1;
  rec.samples = values.size();
  for (std::size_t s = 0; s < values.size(); ++s) {
    for (std::size_t e = 0; e < values[s].size(); ++e) {
      TrajectoryRow r;
      r.epoch = e;
      r.sample = s;
      r.rho_true = values[s][e];
      r.rho_est = values[s][e];
      r.x_post = {0.0};
      rec.rows.push_back(r);
    }
  }
  return rec;
}

inline GroundTruthModel logistic_truth(std::vector<double> beta, double intercept = 0.0) {
  LogisticLink link;
  link.beta = std::move(beta);
  link.intercept = intercept;
  return GroundTruthModel(link);
}

inline InterventionModel make_g(InterventionModel::Kind kind, double rho_eq, double scale = 1.0) {
  InterventionModel g;
  g.kind = kind;
  g.rho_eq = rho_eq;
  g.scale = scale;
  return g;
}

}  // namespace stacklab::test_support
