#include "bifrom/eval.hpp"

#include <chrono>
#include <cstdio>
#include <ostream>

#include "bifrom/error.hpp"
#include "bifrom/parallel.hpp"

namespace bifrom::eval {
namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string local_tag(select::Criterion criterion) { return std::string("local-") + select::to_string(criterion); }

Method global_rom_method(const rom::ReducedOperators& global, const fom::SnapshotSet& snapshots,
                         const ParameterBox& box, const rom::RomSolverOptions& solver) {
  return {"global", [&global, &snapshots, box, solver](const ParameterPoint& mu) {
            const rom::RomSolution sol =
                rom::rom_solve_stable(global, mu, select::initial_guesses(global.basis, snapshots, box, mu), solver);
            return PointEvaluation{rom::lift(global, sol), sol.converged, -1};
          }};
}

Method local_rom_method(const select::LocalRomSet& local, const select::SelectionArtifacts& artifacts,
                        select::Criterion criterion, const fom::SnapshotSet& snapshots,
                        const rom::RomSolverOptions& solver) {
  return {local_tag(criterion), [&local, &artifacts, criterion, &snapshots, solver](const ParameterPoint& mu) {
            const int k = select::select_cluster(criterion, artifacts, mu);
            select::LocalEvaluation ev = select::solve_local(local, k, snapshots, artifacts.box, mu, solver);
            return PointEvaluation{std::move(ev.state), ev.solution.converged, k};
          }};
}

Method podnn_method(const podnn::PodNnModel& model) {
  return {"podnn", [&model](const ParameterPoint& mu) { return PointEvaluation{podnn::podnn_eval(model, mu), true, -1}; }};
}

Method reference_method(const fom::SnapshotSet& reference, const ParameterBox& box) {
  return {"reference", [&reference, box](const ParameterPoint& mu) {
            const int j = select::nearest_snapshot(box, reference.params, mu);
            return PointEvaluation{reference.states.col(j), true, -1};
          }};
}

BifurcationDiagram bifurcation_diagram(const Method& method, const std::vector<ParameterPoint>& points) {
  BifurcationDiagram diagram;
  diagram.source = method.tag;
  diagram.points.resize(points.size());
  parallel_for(points.size(), [&](std::size_t i) {
    DiagramPoint& p = diagram.points[i];
    p.mu1 = points[i].mu1;
    p.mu2 = points[i].mu2;
    const PointEvaluation ev = method.evaluate(points[i]);
    p.cluster = ev.cluster;
    p.converged = ev.converged && ev.state.allFinite();
    p.observable = ev.state.allFinite() ? fom::probe(ev.state) : 0.0;
  });
  return diagram;
}

void finalize_means(MethodReport& report) {
  double sum_l2 = 0.0;
  double sum_linf = 0.0;
  for (double v : report.l2) sum_l2 += v;
  for (double v : report.linf) sum_linf += v;
  const auto n = static_cast<double>(report.l2.size());
  report.mean_l2 = report.l2.empty() ? 0.0 : sum_l2 / n;
  report.mean_linf = report.linf.empty() ? 0.0 : sum_linf / n;
}

MethodReport evaluate_method(const Method& method, const fom::SnapshotSet& reference, int samples, bool full_state) {
  MethodReport report;
  report.tag = method.tag;
  report.samples = samples;
  report.params = reference.params;
  const auto n = static_cast<std::size_t>(reference.count());
  report.l2.assign(n, 0.0);
  report.linf.assign(n, 0.0);
  report.converged.assign(n, 0);
  report.cluster.assign(n, -1);
  const auto start = std::chrono::steady_clock::now();
  parallel_for(n, [&](std::size_t i) {
    const PointEvaluation ev = method.evaluate(reference.params[i]);
    report.converged[i] = ev.converged ? 1 : 0;
    report.cluster[i] = ev.cluster;
    if (ev.state.allFinite()) {
      const RelativeErrors e = relative_errors(ev.state, reference.states.col(static_cast<Eigen::Index>(i)), full_state);
      report.l2[i] = e.l2;
      report.linf[i] = e.linf;
    } else {
      report.l2[i] = select::kErrorSentinel;
      report.linf[i] = select::kErrorSentinel;
    }
  });
  report.online_seconds = seconds_since(start);
  finalize_means(report);
  return report;
}

MethodReport local_report(select::Criterion criterion, const select::SelectionArtifacts& artifacts,
                          const select::ReferenceErrors& errors, const fom::SnapshotSet& reference, int samples) {
  if (errors.l2.rows() != reference.count()) {
    throw Error(ErrorCode::DimensionMismatch, "local_report: error matrix does not match the reference set");
  }
  MethodReport report;
  report.tag = local_tag(criterion);
  report.samples = samples;
  report.params = reference.params;
  const auto n = static_cast<std::size_t>(reference.count());
  report.l2.resize(n);
  report.linf.resize(n);
  report.converged.resize(n);
  report.cluster.resize(n);
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < n; ++i) {
    const int k = select::select_cluster(criterion, artifacts, reference.params[i]);
    const auto row = static_cast<Eigen::Index>(i);
    report.cluster[i] = k;
    report.l2[i] = errors.l2(row, k);
    report.linf[i] = errors.linf(row, k);
    report.converged[i] = errors.converged(row, k) != 0.0 ? 1 : 0;
  }
  report.online_seconds = seconds_since(start);
  finalize_means(report);
  return report;
}

std::vector<MethodReport> compare_methods(const std::vector<Method>& methods, const fom::SnapshotSet& reference,
                                          int samples) {
  std::vector<MethodReport> reports;
  reports.reserve(methods.size());
  for (const Method& m : methods) reports.push_back(evaluate_method(m, reference, samples));
  return reports;
}

void write_diagram_csv(std::ostream& out, const BifurcationDiagram& diagram) {
  out << "mu1,mu2,observable,converged\n";
  for (const DiagramPoint& p : diagram.points) {
    out << format_double(p.mu1) << ',' << format_double(p.mu2) << ',' << format_double(p.observable) << ','
        << (p.converged ? 1 : 0) << '\n';
  }
}

void write_errors_csv(std::ostream& out, const std::vector<MethodReport>& reports) {
  out << "method,samples,mean_l2,mean_linf\n";
  for (const MethodReport& r : reports) {
    out << r.tag << ',' << r.samples << ',' << format_double(r.mean_l2) << ',' << format_double(r.mean_linf) << '\n';
  }
}

void write_points_csv(std::ostream& out, const MethodReport& report) {
  out << "mu1,mu2,l2,linf,converged,cluster\n";
  for (std::size_t i = 0; i < report.l2.size(); ++i) {
    out << format_double(report.params[i].mu1) << ',' << format_double(report.params[i].mu2) << ','
        << format_double(report.l2[i]) << ',' << format_double(report.linf[i]) << ',' << report.converged[i] << ','
        << report.cluster[i] << '\n';
  }
}

}  // namespace bifrom::eval
