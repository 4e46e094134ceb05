#include "bifrom/persist.hpp"

#include <bit>
#include <cmath>

#include "bifrom/error.hpp"
#include "bifrom/matrix_io.hpp"

namespace bifrom::pipeline {
namespace {

// Seeds are 64-bit; storing the bit pattern keeps them exact.
double seed_bits(std::uint64_t seed) { return std::bit_cast<double>(seed); }
std::uint64_t seed_from(double bits) { return std::bit_cast<std::uint64_t>(bits); }

Matrix ints_matrix(const std::vector<int>& v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
  return m;
}

std::vector<int> ints_from(const Matrix& m) {
  std::vector<int> out(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double v = m.data()[i];
    if (v != std::floor(v) || std::abs(v) > 2e9) throw Error(ErrorCode::DimensionMismatch, "artifact: expected integers");
    out[static_cast<std::size_t>(i)] = static_cast<int>(v);
  }
  return out;
}

Matrix doubles_matrix(const std::vector<double>& v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
  return m;
}

void expect(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::DimensionMismatch, "artifact " + what + " has inconsistent shape");
}

}  // namespace

std::filesystem::path Store::path(const std::string& name) const { return root_ / (name + ".mat"); }

bool Store::exists(const std::string& name) const { return std::filesystem::is_regular_file(path(name)); }

void Store::put(const std::string& name, const Matrix& m) {
  const std::filesystem::path p = path(name);
  std::error_code ec;
  std::filesystem::create_directories(p.parent_path(), ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot create directory " + p.parent_path().string());
  io::save_matrix_atomic(p, m);
  written_.push_back(name);
}

Matrix Store::get(const std::string& name) const { return io::load_matrix(path(name)); }

Matrix params_matrix(const std::vector<ParameterPoint>& params) {
  Matrix m(static_cast<Eigen::Index>(params.size()), 2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m(static_cast<Eigen::Index>(i), 0) = params[i].mu1;
    m(static_cast<Eigen::Index>(i), 1) = params[i].mu2;
  }
  return m;
}

std::vector<ParameterPoint> params_from(const Matrix& m) {
  expect(m.cols() == 2 || m.rows() == 0, "parameter list");
  std::vector<ParameterPoint> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = {m(i, 0), m(i, 1)};
  return out;
}

void save(Store& store, const std::string& name, const fom::SnapshotSet& set) {
  store.put(name + "/states", set.states);
  store.put(name + "/params", params_matrix(set.params));
  Matrix info(set.count(), 2);
  for (int j = 0; j < set.count(); ++j) {
    info(j, 0) = static_cast<double>(set.steps[static_cast<std::size_t>(j)]);
    info(j, 1) = set.final_increments[static_cast<std::size_t>(j)];
  }
  store.put(name + "/info", info);
  Matrix meta(1, 3);
  meta << set.grid.n1, set.grid.n2, seed_bits(set.seed);
  store.put(name + "/meta", meta);
}

fom::SnapshotSet load_snapshot_set(const Store& store, const std::string& name) {
  fom::SnapshotSet set;
  set.states = store.get(name + "/states");
  set.params = params_from(store.get(name + "/params"));
  const Matrix info = store.get(name + "/info");
  const Matrix meta = store.get(name + "/meta");
  expect(meta.rows() == 1 && meta.cols() == 3, name + "/meta");
  set.grid = {static_cast<int>(meta(0, 0)), static_cast<int>(meta(0, 1))};
  set.seed = seed_from(meta(0, 2));
  expect(set.grid.size() == set.count() && set.states.cols() == set.count() && info.rows() == set.count() &&
             info.cols() == 2,
         name);
  for (int j = 0; j < set.count(); ++j) {
    set.steps.push_back(static_cast<long>(info(j, 0)));
    set.final_increments.push_back(info(j, 1));
  }
  return set;
}

void save(Store& store, const std::string& name, const pod::Basis& basis) {
  store.put(name + "/modes", basis.modes);
  store.put(name + "/singular_values", basis.singular_values);
  Matrix meta(1, 2);
  meta << basis.energy_tol, basis.weight;
  store.put(name + "/basis_meta", meta);
}

pod::Basis load_basis(const Store& store, const std::string& name) {
  pod::Basis basis;
  basis.modes = store.get(name + "/modes");
  const Matrix sv = store.get(name + "/singular_values");
  const Matrix meta = store.get(name + "/basis_meta");
  expect(meta.size() == 2 && sv.rows() == basis.modes.cols() && (sv.cols() == 1 || sv.rows() == 0), name);
  basis.singular_values = sv.col(0);
  if (sv.rows() == 0) basis.singular_values.resize(0);
  basis.energy_tol = meta(0, 0);
  basis.weight = meta(0, 1);
  return basis;
}

void save(Store& store, const std::string& name, const rom::ReducedOperators& ops) {
  save(store, name, ops.basis);
  store.put(name + "/a_diff", ops.a_diff);
  store.put(name + "/a_react", ops.a_react);
  store.put(name + "/a_decay", ops.a_decay);
  const int l = ops.dim();
  Matrix tensor(l, static_cast<Eigen::Index>(l) * l);
  for (int i = 0; i < l; ++i) {
    for (int j = 0; j < l; ++j) tensor.block(i, static_cast<Eigen::Index>(j) * l, 1, l) = ops.tensor[static_cast<std::size_t>(i)].row(j);
  }
  store.put(name + "/tensor", tensor);
  Matrix cost(1, 2);
  cost << static_cast<double>(ops.cost.quadratic_evaluations), static_cast<double>(ops.cost.inner_products);
  store.put(name + "/cost", cost);
}

rom::ReducedOperators load_reduced(const Store& store, const std::string& name) {
  rom::ReducedOperators ops;
  ops.basis = load_basis(store, name);
  ops.a_diff = store.get(name + "/a_diff");
  ops.a_react = store.get(name + "/a_react");
  ops.a_decay = store.get(name + "/a_decay");
  const Matrix tensor = store.get(name + "/tensor");
  const Matrix cost = store.get(name + "/cost");
  const int l = ops.dim();
  const auto square = [l](const Matrix& m) { return m.rows() == l && m.cols() == l; };
  expect(square(ops.a_diff) && square(ops.a_react) && square(ops.a_decay) && tensor.rows() == l &&
             tensor.cols() == static_cast<Eigen::Index>(l) * l && cost.size() == 2,
         name);
  ops.tensor.assign(static_cast<std::size_t>(l), Matrix(l, l));
  for (int i = 0; i < l; ++i) {
    for (int j = 0; j < l; ++j) ops.tensor[static_cast<std::size_t>(i)].row(j) = tensor.block(i, static_cast<Eigen::Index>(j) * l, 1, l);
  }
  ops.cost.quadratic_evaluations = static_cast<std::uint64_t>(cost(0, 0));
  ops.cost.inner_products = static_cast<std::uint64_t>(cost(0, 1));
  return ops;
}

void save(Store& store, const std::string& name, const ann::Mlp& net) {
  Matrix dims = ints_matrix(net.dims).transpose();
  Matrix meta(1, 1);
  meta(0, 0) = net.mode == ann::OutputMode::Softmax ? 1.0 : 0.0;
  store.put(name + "/dims", dims);
  store.put(name + "/mode", meta);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    store.put(name + "/w" + std::to_string(i), net.layers[i].weights);
    store.put(name + "/b" + std::to_string(i), net.layers[i].bias);
  }
}

ann::Mlp load_mlp(const Store& store, const std::string& name) {
  ann::Mlp net;
  net.dims = ints_from(store.get(name + "/dims"));
  expect(net.dims.size() >= 2, name + "/dims");
  const Matrix mode = store.get(name + "/mode");
  expect(mode.size() == 1, name + "/mode");
  net.mode = mode(0, 0) != 0.0 ? ann::OutputMode::Softmax : ann::OutputMode::Linear;
  for (std::size_t i = 0; i + 1 < net.dims.size(); ++i) {
    ann::Layer layer;
    layer.weights = store.get(name + "/w" + std::to_string(i));
    const Matrix b = store.get(name + "/b" + std::to_string(i));
    expect(layer.weights.rows() == net.dims[i + 1] && layer.weights.cols() == net.dims[i] &&
               b.rows() == net.dims[i + 1] && b.cols() == 1,
           name + " layer " + std::to_string(i));
    layer.bias = b.col(0);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

void save(Store& store, const std::string& name, const ann::Standardizer& s) {
  Matrix m(s.mean.size(), 2);
  m.col(0) = s.mean;
  m.col(1) = s.scale;
  store.put(name + "/scaling", m);
}

ann::Standardizer load_standardizer(const Store& store, const std::string& name) {
  const Matrix m = store.get(name + "/scaling");
  expect(m.cols() == 2 || m.rows() == 0, name + "/scaling");
  ann::Standardizer s;
  s.mean = m.rows() ? Vector(m.col(0)) : Vector(0);
  s.scale = m.rows() ? Vector(m.col(1)) : Vector(0);
  return s;
}

void save(Store& store, const std::string& name, const select::RegressionSelector& s) {
  save(store, name, s.net);
  save(store, name, s.scaling);
}

select::RegressionSelector load_regression_selector(const Store& store, const std::string& name) {
  return {load_mlp(store, name), load_standardizer(store, name)};
}

void save(Store& store, const std::string& name, const cluster::Clustering& c) {
  store.put(name + "/labels", ints_matrix(c.labels));
  store.put(name + "/state_centroids", c.state_centroids);
  store.put(name + "/parameter_centroids", params_matrix(c.parameter_centroids));
  store.put(name + "/energy_history", doubles_matrix(c.energy_history));
  Matrix meta(1, 5);
  meta << c.k, c.energy, seed_bits(c.seed), c.restarts, c.best_restart;
  store.put(name + "/clustering_meta", meta);
}

cluster::Clustering load_clustering(const Store& store, const std::string& name) {
  cluster::Clustering c;
  c.labels = ints_from(store.get(name + "/labels"));
  c.state_centroids = store.get(name + "/state_centroids");
  c.parameter_centroids = params_from(store.get(name + "/parameter_centroids"));
  const Matrix history = store.get(name + "/energy_history");
  c.energy_history.assign(history.data(), history.data() + history.size());
  const Matrix meta = store.get(name + "/clustering_meta");
  expect(meta.size() == 5, name + "/clustering_meta");
  c.k = static_cast<int>(meta(0, 0));
  c.energy = meta(0, 1);
  c.seed = seed_from(meta(0, 2));
  c.restarts = static_cast<int>(meta(0, 3));
  c.best_restart = static_cast<int>(meta(0, 4));
  expect(c.state_centroids.cols() == c.k && static_cast<int>(c.parameter_centroids.size()) == c.k, name);
  return c;
}

void save(Store& store, const std::string& name, const select::LocalRomSet& set) {
  save(store, name + "/clustering", set.clustering);
  Matrix meta(1, 3);
  meta << set.bases.tol1, set.bases.tol2, set.bases.overlap ? 1.0 : 0.0;
  store.put(name + "/bases_meta", meta);
  for (int k = 0; k < set.k(); ++k) {
    const std::string dir = name + "/cluster" + std::to_string(k);
    const cluster::LocalBasis& lb = set.bases.clusters[static_cast<std::size_t>(k)];
    store.put(dir + "/members", ints_matrix(lb.members));
    store.put(dir + "/neighbors", ints_matrix(lb.neighbors));
    Matrix accepted(1, 1);
    accepted(0, 0) = lb.accepted_residuals;
    store.put(dir + "/accepted", accepted);
    save(store, dir, set.roms[static_cast<std::size_t>(k)]);
  }
}

select::LocalRomSet load_local_rom_set(const Store& store, const std::string& name) {
  select::LocalRomSet set;
  set.clustering = load_clustering(store, name + "/clustering");
  const Matrix meta = store.get(name + "/bases_meta");
  expect(meta.size() == 3, name + "/bases_meta");
  set.bases.tol1 = meta(0, 0);
  set.bases.tol2 = meta(0, 1);
  set.bases.overlap = meta(0, 2) != 0.0;
  for (int k = 0; k < set.clustering.k; ++k) {
    const std::string dir = name + "/cluster" + std::to_string(k);
    cluster::LocalBasis lb;
    lb.members = ints_from(store.get(dir + "/members"));
    lb.neighbors = ints_from(store.get(dir + "/neighbors"));
    lb.accepted_residuals = ints_from(store.get(dir + "/accepted")).at(0);
    set.roms.push_back(load_reduced(store, dir));
    lb.basis = set.roms.back().basis;
    set.bases.clusters.push_back(std::move(lb));
  }
  return set;
}

void save(Store& store, const std::string& name, const select::ErrorTable& table) {
  store.put(name + "/errors", table.errors);
  store.put(name + "/converged", table.converged);
}

select::ErrorTable load_error_table(const Store& store, const std::string& name) {
  select::ErrorTable t{store.get(name + "/errors"), store.get(name + "/converged")};
  expect(t.errors.rows() == t.converged.rows() && t.errors.cols() == t.converged.cols(), name);
  return t;
}

void save(Store& store, const std::string& name, const select::ReferenceErrors& errors) {
  store.put(name + "/l2", errors.l2);
  store.put(name + "/linf", errors.linf);
  store.put(name + "/converged", errors.converged);
}

select::ReferenceErrors load_reference_errors(const Store& store, const std::string& name) {
  select::ReferenceErrors e{store.get(name + "/l2"), store.get(name + "/linf"), store.get(name + "/converged")};
  expect(e.l2.rows() == e.linf.rows() && e.l2.rows() == e.converged.rows() && e.l2.cols() == e.linf.cols() &&
             e.l2.cols() == e.converged.cols(),
         name);
  return e;
}

void save(Store& store, const std::string& name, const select::OracleLabels& labels) {
  store.put(name + "/oracle_params", params_matrix(labels.params));
  store.put(name + "/oracle_labels", ints_matrix(labels.labels));
}

select::OracleLabels load_oracle_labels(const Store& store, const std::string& name) {
  select::OracleLabels out{params_from(store.get(name + "/oracle_params")),
                           ints_from(store.get(name + "/oracle_labels"))};
  expect(out.params.size() == out.labels.size(), name);
  return out;
}

void save(Store& store, const std::string& name, const podnn::PodNnModel& model) {
  save(store, name, model.basis);
  save(store, name, model.scaling);
  save(store, name + "/net", model.net);
  Matrix meta(1, 8);
  meta << model.box.mu1_min, model.box.mu1_max, model.box.mu2_min, model.box.mu2_max, model.final_loss, model.epochs,
      model.validation_count, model.validation_loss;
  store.put(name + "/podnn_meta", meta);
}

podnn::PodNnModel load_podnn(const Store& store, const std::string& name) {
  podnn::PodNnModel model;
  model.basis = load_basis(store, name);
  model.scaling = load_standardizer(store, name);
  model.net = load_mlp(store, name + "/net");
  const Matrix meta = store.get(name + "/podnn_meta");
  expect(meta.size() == 8 && model.net.output_dim() == model.basis.dim() && model.scaling.mean.size() == model.basis.dim(),
         name);
  model.box = {meta(0, 0), meta(0, 1), meta(0, 2), meta(0, 3)};
  model.final_loss = meta(0, 4);
  model.epochs = static_cast<int>(meta(0, 5));
  model.validation_count = static_cast<int>(meta(0, 6));
  model.validation_loss = meta(0, 7);
  return model;
}

}  // namespace bifrom::pipeline
