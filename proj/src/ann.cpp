#include "bifrom/ann.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "bifrom/error.hpp"
#include "bifrom/random.hpp"

namespace bifrom::ann {
namespace {

void check_dims(const std::vector<int>& dims) {
  if (dims.size() < 2) throw Error(ErrorCode::InvalidConfig, "mlp: need at least input and output layers");
  for (int d : dims) {
    if (d < 1) throw Error(ErrorCode::InvalidConfig, "mlp: layer sizes must be positive");
  }
}

Matrix softmax_columns(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double shift = logits.col(c).maxCoeff();
    out.col(c) = (logits.col(c).array() - shift).exp();
    out.col(c) /= out.col(c).sum();
  }
  return out;
}

// Forward pass keeping every layer's activation (activations[0] = inputs).
std::vector<Matrix> forward_all(const Mlp& net, const Matrix& inputs) {
  std::vector<Matrix> acts;
  acts.reserve(net.layers.size() + 1);
  acts.push_back(inputs);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Matrix z = net.layers[l].weights * acts.back();
    z.colwise() += net.layers[l].bias;
    if (l + 1 < net.layers.size()) {
      acts.push_back(z.cwiseMax(0.0));
    } else {
      acts.push_back(net.mode == OutputMode::Softmax ? softmax_columns(z) : z);
    }
  }
  return acts;
}

void check_batch(const Mlp& net, const Matrix& inputs, const Matrix& targets) {
  if (inputs.rows() != net.input_dim() || targets.rows() != net.output_dim() || inputs.cols() != targets.cols() ||
      inputs.cols() == 0) {
    throw Error(ErrorCode::DimensionMismatch,
                "loss_grad: inputs " + std::to_string(inputs.rows()) + "x" + std::to_string(inputs.cols()) +
                    ", targets " + std::to_string(targets.rows()) + "x" + std::to_string(targets.cols()) +
                    " for network " + std::to_string(net.input_dim()) + " -> " + std::to_string(net.output_dim()));
  }
}

double batch_loss(const Matrix& output, const Matrix& targets, Loss loss) {
  const auto samples = static_cast<double>(output.cols());
  if (loss == Loss::CrossEntropy) {
    double total = 0.0;
    for (Eigen::Index c = 0; c < output.cols(); ++c) {
      for (Eigen::Index r = 0; r < output.rows(); ++r) {
        if (targets(r, c) != 0.0) total -= targets(r, c) * std::log(std::max(output(r, c), 1e-300));
      }
    }
    return total / samples;
  }
  return (output - targets).squaredNorm() / (samples * static_cast<double>(output.rows()));
}

class Adam {
 public:
  Adam(const Mlp& net, double lr) : lr_(lr) {
    for (const auto& layer : net.layers) {
      m_.push_back({Matrix::Zero(layer.weights.rows(), layer.weights.cols()), Vector::Zero(layer.bias.size())});
      v_.push_back(m_.back());
    }
  }

  void step(Mlp& net, const std::vector<Layer>& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      update(net.layers[l].weights, grad[l].weights, m_[l].weights, v_[l].weights, c1, c2);
      update(net.layers[l].bias, grad[l].bias, m_[l].bias, v_[l].bias, c1, c2);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  template <class P>
  void update(P& param, const P& g, P& m, P& v, double c1, double c2) const {
    m = kBeta1 * m + (1.0 - kBeta1) * g;
    v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseProduct(g);
    param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + kEps);
  }

  double lr_;
  int t_ = 0;
  std::vector<Layer> m_;
  std::vector<Layer> v_;
};

void check_train_config(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0) || cfg.max_epochs_per_round < 1 || cfg.max_rounds < 1 || !(cfg.plateau_tol >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "train: rates and budgets must be positive");
  }
}

double accuracy_of(const Mlp& net, const Matrix& inputs, const std::vector<int>& labels) {
  const Matrix out = forward(net, inputs);
  int hits = 0;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    if (argmax(out.col(c)) == labels[static_cast<std::size_t>(c)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(out.cols());
}

}  // namespace

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
  return n;
}

Mlp mlp_init(const std::vector<int>& dims, OutputMode mode, std::uint64_t seed) {
  check_dims(dims);
  Rng rng(seed);
  Mlp net;
  net.dims = dims;
  net.mode = mode;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l];
    const int out = dims[l + 1];
    const double limit = std::sqrt(6.0 / (in + out));
    Layer layer{Matrix(out, in), Vector::Zero(out)};
    // Column-major fill order is part of the seeded contract.
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) layer.weights(r, c) = rng.uniform(-limit, limit);
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

Vector forward(const Mlp& net, const Vector& x) {
  if (x.size() != net.input_dim()) throw Error(ErrorCode::DimensionMismatch, "forward: input length");
  return forward_all(net, x).back().col(0);
}

Matrix forward(const Mlp& net, const Matrix& inputs) {
  if (inputs.rows() != net.input_dim()) throw Error(ErrorCode::DimensionMismatch, "forward: input rows");
  return forward_all(net, inputs).back();
}

double loss_value(const Mlp& net, const Matrix& inputs, const Matrix& targets, Loss loss) {
  check_batch(net, inputs, targets);
  return batch_loss(forward(net, inputs), targets, loss);
}

LossGrad loss_grad(const Mlp& net, const Matrix& inputs, const Matrix& targets, Loss loss) {
  check_batch(net, inputs, targets);
  if (loss == Loss::CrossEntropy && net.mode != OutputMode::Softmax) {
    throw Error(ErrorCode::InvalidConfig, "loss_grad: cross-entropy needs a softmax output layer");
  }
  const std::vector<Matrix> acts = forward_all(net, inputs);
  const Matrix& output = acts.back();
  const auto samples = static_cast<double>(inputs.cols());

  LossGrad out;
  out.loss = batch_loss(output, targets, loss);

  // delta = dLoss / d(pre-activation of the output layer)
  Matrix delta;
  if (loss == Loss::CrossEntropy) {
    // Softmax + cross-entropy: dL/dz = p * sum(t) - t per column.
    Matrix weighted = output;
    for (Eigen::Index c = 0; c < output.cols(); ++c) weighted.col(c) *= targets.col(c).sum();
    delta = (weighted - targets) / samples;
  } else {
    const Matrix g = 2.0 * (output - targets) / (samples * static_cast<double>(output.rows()));
    if (net.mode == OutputMode::Softmax) {
      delta.resize(g.rows(), g.cols());
      for (Eigen::Index c = 0; c < g.cols(); ++c) {
        const double pg = output.col(c).dot(g.col(c));
        delta.col(c) = output.col(c).cwiseProduct(g.col(c)) - pg * output.col(c);
      }
    } else {
      delta = g;
    }
  }

  out.gradient.resize(net.layers.size());
  for (std::size_t l = net.layers.size(); l-- > 0;) {
    out.gradient[l].weights = delta * acts[l].transpose();
    out.gradient[l].bias = delta.rowwise().sum();
    if (l > 0) {
      Matrix back = net.layers[l].weights.transpose() * delta;
      // ReLU derivative; acts[l] > 0 exactly where the pre-activation was positive.
      delta = back.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
    }
  }
  return out;
}

int argmax(const Vector& values) {
  int best = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = static_cast<int>(i);
  }
  return best;
}

TrainResult train_classifier(const Matrix& inputs, const std::vector<int>& labels, const std::vector<int>& dims,
                             const TrainConfig& cfg) {
  check_train_config(cfg);
  check_dims(dims);
  const int classes = dims.back();
  if (static_cast<Eigen::Index>(labels.size()) != inputs.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "train_classifier: one label per input column required");
  }
  Matrix targets = Matrix::Zero(classes, inputs.cols());
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] < 0 || labels[j] >= classes) {
      throw Error(ErrorCode::DimensionMismatch, "train_classifier: label out of range");
    }
    targets(labels[j], static_cast<Eigen::Index>(j)) = 1.0;
  }

  TrainResult result;
  result.net = mlp_init(dims, OutputMode::Softmax, cfg.seed);
  Adam adam(result.net, cfg.learning_rate);
  for (int round = 1; round <= cfg.max_rounds; ++round) {
    for (int e = 0; e < cfg.max_epochs_per_round; ++e) {
      const LossGrad lg = loss_grad(result.net, inputs, targets, Loss::CrossEntropy);
      adam.step(result.net, lg.gradient);
      ++result.epochs;
    }
    result.rounds = round;
    result.accuracy = accuracy_of(result.net, inputs, labels);
    if (result.accuracy == 1.0) {
      result.perfect_match = true;
      break;
    }
  }
  result.final_loss = loss_value(result.net, inputs, targets, Loss::CrossEntropy);
  return result;
}

TrainResult train_regressor(const Matrix& inputs, const Matrix& targets, const std::vector<int>& dims,
                            const TrainConfig& cfg) {
  check_train_config(cfg);
  TrainResult result;
  result.net = mlp_init(dims, OutputMode::Linear, cfg.seed);
  check_batch(result.net, inputs, targets);
  Adam adam(result.net, cfg.learning_rate);

  constexpr int kPlateauWindow = 100;
  const long budget = static_cast<long>(cfg.max_epochs_per_round) * cfg.max_rounds;
  double window_start = std::numeric_limits<double>::infinity();
  double loss = 0.0;
  for (long epoch = 0; epoch < budget; ++epoch) {
    const LossGrad lg = loss_grad(result.net, inputs, targets, Loss::MeanSquaredError);
    loss = lg.loss;
    if (loss == 0.0) break;
    if (epoch % kPlateauWindow == 0) {
      if (std::isfinite(window_start) && (window_start - loss) <= cfg.plateau_tol * window_start) break;
      window_start = loss;
    }
    adam.step(result.net, lg.gradient);
    ++result.epochs;
  }
  result.rounds = (result.epochs + cfg.max_epochs_per_round - 1) / cfg.max_epochs_per_round;
  result.final_loss = loss_value(result.net, inputs, targets, Loss::MeanSquaredError);
  return result;
}

Standardizer Standardizer::fit(const Matrix& targets) {
  Standardizer s;
  const auto samples = static_cast<double>(targets.cols());
  s.mean = targets.rowwise().mean();
  s.scale = Vector::Ones(targets.rows());
  for (Eigen::Index r = 0; r < targets.rows(); ++r) {
    const double var = (targets.row(r).array() - s.mean[r]).square().sum() / samples;
    const double sd = std::sqrt(var);
    if (sd > 1e-300 && sd > 1e-12 * std::abs(s.mean[r])) s.scale[r] = sd;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& targets) const {
  Matrix out = targets.colwise() - mean;
  return scale.cwiseInverse().asDiagonal() * out;
}

Vector Standardizer::invert(const Vector& standardized) const {
  return standardized.cwiseProduct(scale) + mean;
}

Matrix Standardizer::invert(const Matrix& standardized) const {
  Matrix out = scale.asDiagonal() * standardized;
  return out.colwise() + mean;
}

}  // namespace bifrom::ann
