#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "anosovlab/expcli.hpp"

using namespace anosovlab;
using json = nlohmann::ordered_json;

namespace {

int report_error(const Error& e, const std::string& context) {
  std::cout << error_json(e, context).dump(2) << std::endl;
  return exit_status(e.code());
}

int cmd_run(const std::string& file, const std::optional<std::uint64_t>& seed,
            const std::optional<std::string>& out) {
  ExperimentConfig c;
  try {
    c = load_config(file);
  } catch (const Error& e) {
    return report_error(e, file);
  }
  if (seed) c.seed = *seed;
  if (out) c.output_dir = *out;
  RunReport r;
  try {
    r = run(c);
  } catch (const Error& e) {
    try {
      write_report(failed_report(c, e));
    } catch (const Error&) {
      // the error object on stdout is still authoritative
    }
    return report_error(e, std::string(experiment_name(c.experiment)));
  }
  std::vector<std::filesystem::path> files;
  try {
    files = write_report(r);
  } catch (const Error& e) {
    return report_error(e, c.output_dir);
  }
  json j;
  j["status"] = "ok";
  j["experiment"] = std::string(experiment_name(c.experiment));
  j["files"] = json::array();
  for (const auto& f : files) j["files"].push_back(f.string());
  std::cout << j.dump(2) << std::endl;
  std::fprintf(stderr, "wall_time %.3f s\n", r.wall_time);
  return 0;
}

int cmd_validate(const std::string& file) {
  try {
    const ExperimentConfig c = load_config(file);
    json j;
    j["status"] = "ok";
    j["experiment"] = std::string(experiment_name(c.experiment));
    j["config"] = serialize_config(c);
    std::cout << j.dump(2) << std::endl;
    return 0;
  } catch (const Error& e) {
    return report_error(e, file);
  }
}

int cmd_plot(const std::string& report, const std::string& kind, const std::string& out) {
  try {
    const auto files = emit_plot_data(report, kind, out);
    json j;
    j["status"] = "ok";
    j["files"] = json::array();
    for (const auto& f : files) j["files"].push_back(f.string());
    std::cout << j.dump(2) << std::endl;
    return 0;
  } catch (const Error& e) {
    return report_error(e, report);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments on Anosov flows with dominated Lyapunov splittings"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  std::string cfg, report, kind, plot_out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;

  auto* run_cmd = app.add_subcommand("run", "run an experiment and write its report");
  run_cmd->add_option("config", cfg, "experiment config (YAML)")->required();
  run_cmd->add_option("--seed", seed, "override the root seed");
  run_cmd->add_option("--out", out, "override output_dir");

  auto* val_cmd = app.add_subcommand("validate", "check a config and print its canonical form");
  val_cmd->add_option("config", cfg, "experiment config (YAML)")->required();

  auto* plot_cmd = app.add_subcommand("plot", "write plot series for a stored report");
  plot_cmd->add_option("report", report, "report.json from a run")->required();
  plot_cmd->add_option("--kind", kind, "experiment kind of the report")->required();
  plot_cmd->add_option("--out", plot_out, "directory for plot files (default: next to the report)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(Error(ErrorCode::ParseError, e.what()), "command line");
  }

  if (*run_cmd) return cmd_run(cfg, seed, out);
  if (*val_cmd) return cmd_validate(cfg);
  return cmd_plot(report, kind, plot_out);
}
