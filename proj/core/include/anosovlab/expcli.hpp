#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "anosovlab/errors.hpp"
#include "anosovlab/systems.hpp"

namespace anosovlab {

enum class Experiment { Lyapunov, Qni, Stopping, Bilipschitz, Equidistribution, Correlation, YConfig };

std::string_view experiment_name(Experiment e);
std::optional<Experiment> parse_experiment(std::string_view s);

// Scalars are stored as double; integer-typed keys are checked to be integral.
using ParamValue = std::variant<double, std::string, std::vector<double>>;

struct ExperimentConfig {
  Experiment experiment = Experiment::Lyapunov;
  SystemSpec system;
  std::map<std::string, ParamValue> params;
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  double num(const std::string& key) const;
  long integer(const std::string& key) const;
  const std::string& str(const std::string& key) const;
  const std::vector<double>& list(const std::string& key) const;

  bool operator==(const ExperimentConfig&) const = default;
};

// Validation failure carrying every issue found, plus the position of the first one.
class ConfigError : public Error {
 public:
  ConfigError(ErrorCode code, std::vector<std::string> issues, int line = -1, int column = -1);
  const std::vector<std::string>& issues() const { return issues_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  std::vector<std::string> issues_;
  int line_, column_;
};

// YAML key-value tree:
//   experiment: <name>
//   seed: <uint64>          (default 0)
//   output_dir: <path>      (default "out")
//   system: {kind, a, b, lambda, eps_pert, matrix}
//   params: experiment-specific keys
// Unknown keys are errors; missing optional keys take their schema defaults.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& file);
// Canonical text: parse_config(serialize_config(c)) == c, and serializing is idempotent.
std::string serialize_config(const ExperimentConfig& c);

// Parameter schema of an experiment, in serialization order.
enum class ParamType { Real, Integer, Text, RealList };
struct ParamSpec {
  std::string key;
  ParamType type = ParamType::Real;
  std::optional<ParamValue> fallback;  // absent: required
  std::string help;
};
const std::vector<ParamSpec>& param_schema(Experiment e);

std::size_t edit_distance(std::string_view a, std::string_view b);

struct RunReport {
  ExperimentConfig config_echo;
  nlohmann::ordered_json results;
  std::optional<nlohmann::ordered_json> error;  // set on reports of failed runs
  std::map<std::string, std::string> tables;    // CSV file name -> contents
  double wall_time = 0.0;  // reported on stderr only, so the files stay byte-identical
  std::string version;
};

std::string version_string();

// Runs without touching the filesystem. Module errors are rethrown with the experiment
// name prefixed to the message.
RunReport run(const ExperimentConfig& c);
// Report recording a failed run, so the failure is archived next to successful ones.
RunReport failed_report(const ExperimentConfig& c, const Error& e);
// Writes report.json plus the experiment CSVs under c.output_dir; returns the files written.
std::vector<std::filesystem::path> write_report(const RunReport& r);
std::string report_json(const RunReport& r);
// Error object for a failed run: {"error": name, "exit_status": n, "message": ..., "issues": [...]}.
nlohmann::ordered_json error_json(const Error& e, const std::string& context);

// Plot data for a stored report; kinds are the experiment names.
std::vector<std::filesystem::path> emit_plot_data(const std::filesystem::path& report_file,
                                                  const std::string& kind,
                                                  const std::filesystem::path& out_dir = {});

}  // namespace anosovlab
