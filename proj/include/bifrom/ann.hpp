#pragma once

#include <cstdint>
#include <vector>

#include "bifrom/types.hpp"

namespace bifrom::ann {

enum class OutputMode { Softmax, Linear };
enum class Loss { CrossEntropy, MeanSquaredError };

struct Layer {
  Matrix weights;  // out x in
  Vector bias;     // out
};

// Fully connected network: affine + ReLU on every hidden layer, then an
// affine output layer followed by softmax or identity.
struct Mlp {
  std::vector<int> dims;  // e.g. {2, 2048, 1024, K}
  std::vector<Layer> layers;
  OutputMode mode = OutputMode::Linear;

  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
  std::size_t parameter_count() const;
};

// Glorot-uniform weights from a seeded stream, zero biases.
Mlp mlp_init(const std::vector<int>& dims, OutputMode mode, std::uint64_t seed);

Vector forward(const Mlp& net, const Vector& x);
// One sample per column.
Matrix forward(const Mlp& net, const Matrix& inputs);

struct LossGrad {
  double loss = 0.0;
  std::vector<Layer> gradient;  // same shapes as Mlp::layers
};

// Full-batch mean loss and its gradient by backpropagation. Inputs and
// targets hold one sample per column. Cross-entropy requires softmax output;
// mean squared error averages over samples and outputs.
LossGrad loss_grad(const Mlp& net, const Matrix& inputs, const Matrix& targets, Loss loss);
double loss_value(const Mlp& net, const Matrix& inputs, const Matrix& targets, Loss loss);

struct TrainConfig {
  double learning_rate = 1e-3;
  int max_epochs_per_round = 500;
  int max_rounds = 20;
  std::uint64_t seed = 0;
  Loss loss = Loss::CrossEntropy;
  // Regression stops once the relative loss decrease over 100 epochs drops
  // below this value.
  double plateau_tol = 1e-10;
};

struct TrainResult {
  Mlp net;
  bool perfect_match = false;  // classification: every training label reproduced
  double accuracy = 0.0;
  double final_loss = 0.0;
  int epochs = 0;
  int rounds = 0;
};

// Full-batch Adam on cross-entropy in rounds of max_epochs_per_round epochs;
// training accuracy is checked after every round and training stops at 100%.
// Failing that after max_rounds, the result reports perfect_match = false.
TrainResult train_classifier(const Matrix& inputs, const std::vector<int>& labels, const std::vector<int>& dims,
                             const TrainConfig& cfg);

// Full-batch Adam on mean squared error with a linear output layer, for at
// most max_rounds * max_epochs_per_round epochs.
TrainResult train_regressor(const Matrix& inputs, const Matrix& targets, const std::vector<int>& dims,
                            const TrainConfig& cfg);

// Index of the largest entry, lowest index on ties.
int argmax(const Vector& values);

// Per-row affine standardization of targets (one sample per column).
// Rows with zero spread keep scale 1 so they map to zero.
struct Standardizer {
  Vector mean;
  Vector scale;

  static Standardizer fit(const Matrix& targets);
  Matrix apply(const Matrix& targets) const;
  Vector invert(const Vector& standardized) const;
  Matrix invert(const Matrix& standardized) const;
};

}  // namespace bifrom::ann
