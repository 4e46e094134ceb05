#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bifrom/ann.hpp"
#include "bifrom/cluster.hpp"
#include "bifrom/fom.hpp"
#include "bifrom/pod.hpp"
#include "bifrom/podnn.hpp"
#include "bifrom/rom.hpp"
#include "bifrom/select.hpp"

namespace bifrom::pipeline {

// Artifact files below a workspace root, all in the binary matrix format.
// Names are relative paths without extension; every file written through
// put() is remembered so a stage can record what it produced.
class Store {
 public:
  explicit Store(std::filesystem::path root) : root_(std::move(root)) {}

  std::filesystem::path path(const std::string& name) const;
  bool exists(const std::string& name) const;
  void put(const std::string& name, const Matrix& m);
  Matrix get(const std::string& name) const;

  const std::vector<std::string>& written() const { return written_; }
  void clear_written() { written_.clear(); }

 private:
  std::filesystem::path root_;
  std::vector<std::string> written_;
};

void save(Store& store, const std::string& name, const fom::SnapshotSet& set);
fom::SnapshotSet load_snapshot_set(const Store& store, const std::string& name);

void save(Store& store, const std::string& name, const pod::Basis& basis);
pod::Basis load_basis(const Store& store, const std::string& name);

void save(Store& store, const std::string& name, const rom::ReducedOperators& ops);
rom::ReducedOperators load_reduced(const Store& store, const std::string& name);

void save(Store& store, const std::string& name, const ann::Mlp& net);
ann::Mlp load_mlp(const Store& store, const std::string& name);

void save(Store& store, const std::string& name, const ann::Standardizer& s);
ann::Standardizer load_standardizer(const Store& store, const std::string& name);

void save(Store& store, const std::string& name, const select::RegressionSelector& s);
select::RegressionSelector load_regression_selector(const Store& store, const std::string& name);

void save(Store& store, const std::string& name, const cluster::Clustering& c);
cluster::Clustering load_clustering(const Store& store, const std::string& name);

// Clustering, per-cluster bases with member/neighbor lists, and operators.
void save(Store& store, const std::string& name, const select::LocalRomSet& set);
select::LocalRomSet load_local_rom_set(const Store& store, const std::string& name);

void save(Store& store, const std::string& name, const select::ErrorTable& table);
select::ErrorTable load_error_table(const Store& store, const std::string& name);

void save(Store& store, const std::string& name, const select::ReferenceErrors& errors);
select::ReferenceErrors load_reference_errors(const Store& store, const std::string& name);

void save(Store& store, const std::string& name, const select::OracleLabels& labels);
select::OracleLabels load_oracle_labels(const Store& store, const std::string& name);

void save(Store& store, const std::string& name, const podnn::PodNnModel& model);
podnn::PodNnModel load_podnn(const Store& store, const std::string& name);

// Parameter lists as Ns x 2 matrices.
Matrix params_matrix(const std::vector<ParameterPoint>& params);
std::vector<ParameterPoint> params_from(const Matrix& m);

}  // namespace bifrom::pipeline
