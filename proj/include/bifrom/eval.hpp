#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "bifrom/fom.hpp"
#include "bifrom/metrics.hpp"
#include "bifrom/podnn.hpp"
#include "bifrom/rom.hpp"
#include "bifrom/select.hpp"

namespace bifrom::eval {

struct PointEvaluation {
  StateVector state;
  bool converged = true;
  int cluster = -1;
};

// A reconstruction method seen from outside: parameter point in, state out.
struct Method {
  std::string tag;
  std::function<PointEvaluation(const ParameterPoint&)> evaluate;
};

// Global ROM, started from select::initial_guesses.
Method global_rom_method(const rom::ReducedOperators& global, const fom::SnapshotSet& snapshots,
                         const ParameterBox& box, const rom::RomSolverOptions& solver = {});
Method local_rom_method(const select::LocalRomSet& local, const select::SelectionArtifacts& artifacts,
                        select::Criterion criterion, const fom::SnapshotSet& snapshots,
                        const rom::RomSolverOptions& solver = {});
Method podnn_method(const podnn::PodNnModel& model);
// Looks the answer up in a precomputed set (reference diagrams).
Method reference_method(const fom::SnapshotSet& reference, const ParameterBox& box);

std::string local_tag(select::Criterion criterion);

struct DiagramPoint {
  double mu1 = 0.0;
  double mu2 = 0.0;
  double observable = 0.0;
  bool converged = true;
  int cluster = -1;
};

struct BifurcationDiagram {
  std::string source;
  std::vector<DiagramPoint> points;  // grid order, mu1 fastest
};

// Probe value of the method's state at every point; per-point solver
// failures are flagged, never fatal.
BifurcationDiagram bifurcation_diagram(const Method& method, const std::vector<ParameterPoint>& points);

struct MethodReport {
  std::string tag;
  int samples = 0;  // snapshots used to build the method
  double mean_l2 = 0.0;
  double mean_linf = 0.0;
  std::vector<ParameterPoint> params;
  std::vector<double> l2;
  std::vector<double> linf;
  std::vector<int> converged;
  std::vector<int> cluster;
  double offline_seconds = 0.0;
  double online_seconds = 0.0;
};

// Errors of the method against every reference solution; means are plain
// arithmetic means over the reference points.
MethodReport evaluate_method(const Method& method, const fom::SnapshotSet& reference, int samples,
                             bool full_state = false);

// Local ROM report from a precomputed all-cluster error matrix: the error
// at point i is the entry of the cluster the criterion selects there.
MethodReport local_report(select::Criterion criterion, const select::SelectionArtifacts& artifacts,
                          const select::ReferenceErrors& errors, const fom::SnapshotSet& reference, int samples);

// Reports for every method over the shared reference set.
std::vector<MethodReport> compare_methods(const std::vector<Method>& methods, const fom::SnapshotSet& reference,
                                          int samples);

void finalize_means(MethodReport& report);

// CSV emission. Floating-point values use 17 significant digits so files
// round-trip and reruns are byte-identical.
void write_diagram_csv(std::ostream& out, const BifurcationDiagram& diagram);
void write_errors_csv(std::ostream& out, const std::vector<MethodReport>& reports);
void write_points_csv(std::ostream& out, const MethodReport& report);

std::string format_double(double value);

}  // namespace bifrom::eval
