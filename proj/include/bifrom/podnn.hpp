#pragma once

#include <vector>

#include "bifrom/ann.hpp"
#include "bifrom/fom.hpp"
#include "bifrom/pod.hpp"

namespace bifrom::podnn {

// Non-intrusive surrogate: normalized parameters -> standardized POD
// coefficients through a regression network; no equation is solved online.
struct PodNnModel {
  pod::Basis basis;
  ann::Standardizer scaling;  // per coefficient
  ann::Mlp net;               // [2, hidden..., L]
  ParameterBox box{};
  double final_loss = 0.0;
  int epochs = 0;
  int validation_count = 0;
  double validation_loss = 0.0;  // standardized MSE on held-out snapshots
};

// validation_fraction > 0 holds out every round(1 / fraction)-th snapshot
// from training and reports its loss; the basis still uses all snapshots.
PodNnModel build_podnn(const fom::SnapshotSet& snapshots, double weight, const ParameterBox& box, double energy_tol,
                       const std::vector<int>& hidden, const ann::TrainConfig& cfg, double validation_fraction = 0.0);

StateVector podnn_eval(const PodNnModel& model, const ParameterPoint& mu);

}  // namespace bifrom::podnn
