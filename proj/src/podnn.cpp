#include "bifrom/podnn.hpp"

#include <cmath>

#include "bifrom/error.hpp"
#include "bifrom/select.hpp"

namespace bifrom::podnn {

PodNnModel build_podnn(const fom::SnapshotSet& snapshots, double weight, const ParameterBox& box, double energy_tol,
                       const std::vector<int>& hidden, const ann::TrainConfig& cfg, double validation_fraction) {
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "build_podnn: validation fraction must lie in [0, 1)");
  }
  PodNnModel model;
  model.box = box;
  model.basis = pod::compute_pod(snapshots.states, energy_tol, weight);
  const Matrix coeffs = pod::project(model.basis, snapshots.states);  // L x Ns
  model.scaling = ann::Standardizer::fit(coeffs);

  std::vector<int> dims{2};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(model.basis.dim());
  const Matrix inputs = select::normalized_inputs(box, snapshots.params);
  const Matrix targets = model.scaling.apply(coeffs);

  std::vector<Eigen::Index> train_cols;
  std::vector<Eigen::Index> held_cols;
  const long stride = validation_fraction > 0.0 ? std::lround(1.0 / validation_fraction) : 0;
  for (Eigen::Index j = 0; j < inputs.cols(); ++j) {
    (stride > 0 && j % stride == stride - 1 ? held_cols : train_cols).push_back(j);
  }
  if (train_cols.empty()) throw Error(ErrorCode::InvalidConfig, "build_podnn: nothing left to train on");

  const ann::TrainResult trained =
      ann::train_regressor(inputs(Eigen::all, train_cols), targets(Eigen::all, train_cols), dims, cfg);
  model.net = trained.net;
  model.validation_count = static_cast<int>(held_cols.size());
  if (!held_cols.empty()) {
    model.validation_loss = ann::loss_value(model.net, inputs(Eigen::all, held_cols), targets(Eigen::all, held_cols),
                                            ann::Loss::MeanSquaredError);
  }
  model.final_loss = trained.final_loss;
  model.epochs = trained.epochs;
  return model;
}

StateVector podnn_eval(const PodNnModel& model, const ParameterPoint& mu) {
  const Vector standardized = ann::forward(model.net, Vector(model.box.normalize(mu)));
  return pod::reconstruct(model.basis, model.scaling.invert(standardized));
}

}  // namespace bifrom::podnn
