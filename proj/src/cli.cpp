#include "bifrom/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <optional>

#include "bifrom/parallel.hpp"
#include "bifrom/pipeline.hpp"
#include "bifrom/plot.hpp"

namespace bifrom::pipeline {
namespace {

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    body(out);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoFailure, "cannot move " + path.string() + " into place");
}

bool parse_switch(const std::string& v) { return v == "on"; }

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidK:
    case ErrorCode::ZeroSnapshots:
    case ErrorCode::IoFailure:
      return kExitConfig;
    case ErrorCode::NoConvergence:
    case ErrorCode::NonFinite:
    case ErrorCode::SingularJacobian:
      return kExitConvergence;
    case ErrorCode::MissingArtifact:
    case ErrorCode::BadMagic:
    case ErrorCode::TruncatedFile:
    case ErrorCode::DimensionMismatch:
      return kExitMissing;
  }
  return kExitInternal;
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Global and local reduced-order models for a parametrized pitchfork problem", "bifrom"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string workspace = "workspace";
  std::string config_path;
  int threads = -1;
  app.add_option("-w,--workspace", workspace, "Workspace directory")->capture_default_str();
  app.add_option("-c,--config", config_path, "Configuration file (key = value lines)");
  app.add_option("--threads", threads, "Worker threads, 0 = hardware count")->check(CLI::NonNegativeNumber);

  bool force = false;
  const auto method_check = CLI::IsMember({"global", "local", "podnn"});
  const auto eval_method_check = CLI::IsMember({"global", "local", "podnn", "reference"});
  std::vector<std::string> criterion_names;
  for (select::Criterion c : select::all_criteria()) criterion_names.emplace_back(select::to_string(c));
  const auto criterion_check = CLI::IsMember(criterion_names);
  const auto switch_check = CLI::IsMember({"on", "off"});

  CLI::App* snapshots = app.add_subcommand("snapshots", "Generate the snapshot set");
  snapshots->add_flag("--force", force, "Regenerate even when complete");
  CLI::App* reference = app.add_subcommand("reference", "Generate the reference set");
  reference->add_flag("--force", force, "Regenerate even when complete");

  std::string build_method;
  std::string build_criterion;
  std::string build_overlap = "on";
  CLI::App* build = app.add_subcommand("build", "Run the offline stages of one method");
  build->add_option("--method", build_method, "global | local | podnn")->required()->check(method_check);
  build->add_option("--criterion", build_criterion, "Selection criterion to prepare (local only)")->check(criterion_check);
  build->add_option("--overlap", build_overlap, "Overlapping clusters (local only)")->check(switch_check);
  build->add_flag("--force", force, "Rebuild even when complete");

  std::string eval_method;
  std::string eval_criterion = "regression";
  std::string eval_overlap = "on";
  std::string eval_output;
  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "Write the bifurcation diagram of a method");
  evaluate_cmd->add_option("--method", eval_method, "global | local | podnn | reference")->required()->check(eval_method_check);
  evaluate_cmd->add_option("--criterion", eval_criterion, "Selection criterion (local only)")->check(criterion_check)->capture_default_str();
  evaluate_cmd->add_option("--overlap", eval_overlap, "Overlapping clusters (local only)")->check(switch_check);
  evaluate_cmd->add_option("-o,--output", eval_output, "Output CSV (default <workspace>/diagram.csv)");

  std::string compare_dir;
  CLI::App* compare_cmd = app.add_subcommand("compare", "Error reports of every built method");
  compare_cmd->add_option("-o,--output-dir", compare_dir, "Report directory (default <workspace>/reports)");

  std::string plot_input;
  std::string plot_dir;
  CLI::App* plot_cmd = app.add_subcommand("plot", "Render a diagram CSV as SVG and text columns");
  plot_cmd->add_option("-i,--input", plot_input, "Diagram CSV (default <workspace>/diagram.csv)");
  plot_cmd->add_option("-o,--output-dir", plot_dir, "Output directory (default: next to the input)");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    std::cerr << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "bifrom: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (plot_cmd->parsed()) {
      const std::filesystem::path input =
          plot_input.empty() ? std::filesystem::path(workspace) / "diagram.csv" : std::filesystem::path(plot_input);
      std::ifstream in(input, std::ios::binary);
      if (!in) throw Error(ErrorCode::MissingArtifact, "no diagram at " + input.string() + "; run `evaluate` first");
      const eval::BifurcationDiagram diagram = plot::read_diagram_csv(in);
      const std::filesystem::path dir = plot_dir.empty() ? input.parent_path() : std::filesystem::path(plot_dir);
      const std::string stem = input.stem().string();
      write_file(dir / (stem + ".svg"), [&](std::ostream& out) { plot::write_svg(out, diagram); });
      write_file(dir / (stem + ".txt"), [&](std::ostream& out) { plot::write_columns(out, diagram); });
      std::cerr << "plot: wrote " << (dir / (stem + ".svg")).string() << " and " << (dir / (stem + ".txt")).string()
                << '\n';
      return kExitOk;
    }

    std::optional<Config> explicit_config;
    if (!config_path.empty()) explicit_config = load_config(config_path);
    const std::filesystem::path root(workspace);
    const bool producer = snapshots->parsed() || reference->parsed();
    if (!producer && !std::filesystem::exists(root / "manifest.txt")) {
      throw Error(ErrorCode::MissingArtifact, "no workspace at " + root.string() + "; run `snapshots` first");
    }
    std::filesystem::create_directories(root);
    WorkspaceLock lock(root);
    Workspace ws = Workspace::open(root, explicit_config, producer);
    set_thread_count(threads >= 0 ? threads : ws.config().threads);

    if (snapshots->parsed()) {
      run_snapshots(ws, force);
    } else if (reference->parsed()) {
      run_reference(ws, force);
    } else if (build->parsed()) {
      const MethodKind kind = *parse_method(build_method);
      if (kind != MethodKind::Local && (!build_criterion.empty() || build->count("--overlap") > 0)) {
        throw Error(ErrorCode::InvalidConfig, "--criterion and --overlap apply to --method local only");
      }
      if (kind == MethodKind::Global) build_global(ws, force);
      if (kind == MethodKind::PodNn) build_podnn(ws, force);
      if (kind == MethodKind::Local) {
        std::optional<select::Criterion> criterion;
        if (!build_criterion.empty()) criterion = select::parse_criterion(build_criterion);
        build_local(ws, parse_switch(build_overlap), criterion, force);
      }
    } else if (evaluate_cmd->parsed()) {
      MethodSpec spec;
      spec.kind = *parse_method(eval_method);
      spec.criterion = *select::parse_criterion(eval_criterion);
      spec.overlap = parse_switch(eval_overlap);
      const eval::BifurcationDiagram diagram = evaluate(ws, spec);
      const std::filesystem::path out = eval_output.empty() ? root / "diagram.csv" : std::filesystem::path(eval_output);
      write_file(out, [&](std::ostream& s) { eval::write_diagram_csv(s, diagram); });
    } else if (compare_cmd->parsed()) {
      const std::vector<eval::MethodReport> reports = compare(ws);
      const std::filesystem::path dir = compare_dir.empty() ? root / "reports" : std::filesystem::path(compare_dir);
      write_file(dir / "errors.csv", [&](std::ostream& s) { eval::write_errors_csv(s, reports); });
      for (const eval::MethodReport& r : reports) {
        write_file(dir / ("method_" + r.tag + "_points.csv"), [&](std::ostream& s) { eval::write_points_csv(s, r); });
      }
    }
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "bifrom: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "bifrom: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "bifrom: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace bifrom::pipeline
