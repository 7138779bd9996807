#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "newtonmc/core.hpp"
#include "newtonmc/diagnostics.hpp"
#include "newtonmc/exact.hpp"
#include "newtonmc/models.hpp"
#include "newtonmc/proposals.hpp"

namespace newtonmc::harness {

/// A malformed or inconsistent configuration; `path()` names the offending
/// key as "section.key".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path.empty() ? message : path + ": " + message),
        path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitTheorem = 3,
  kExitResource = 4,
};

struct ModelConfig {
  std::string kind = "ising";  // ising | potts | facility | table | random-table | quadratic
  /// Unset: binary for two-level models, one-hot otherwise.
  std::optional<Encoding> encoding;
  // lattices
  int height = 2;
  int width = 2;
  double coupling = 0.1;
  double bias = 0.2;
  int levels = 2;
  std::vector<double> potts_bias;
  // facility location
  int facilities = 10;
  int customers = 16;
  double penalty = 2.0;
  std::vector<double> mixture_weights{0.5, 0.5};
  std::vector<double> mixture_means{0.0, 5.0};
  std::vector<double> mixture_stddevs{1.0, 1.0};
  // random tables and quadratics
  int dim = 3;
  double scale = 1.0;
  std::vector<double> linear;
  std::vector<double> pairwise;
  std::uint64_t instance_seed = 0;
  std::string data_file;

  bool operator==(const ModelConfig&) const = default;
};

struct NamedProposal {
  std::string name;
  ProposalSpec spec;

  bool operator==(const NamedProposal&) const = default;
};

struct RunConfig {
  std::uint64_t steps = 1000;
  std::uint64_t burn_in = 0;
  std::uint64_t thin = 1;
  std::vector<std::uint64_t> seeds{0};
  /// "energy" or a coordinate index.
  std::string ess_target = "energy";
  int checkpoints = 20;
  /// Reference-run length multiplier when the exact mean is out of reach.
  int reference_multiplier = 10;

  bool operator==(const RunConfig&) const = default;
};

struct ExactConfig {
  std::vector<double> theorem_one_alphas{1.0, 0.5, 0.2, 0.1, 0.05};
  bool theorem_two = true;
  double theorem_two_alpha = 0.5;
  /// "hamming" or "coordinate:<i>".
  std::string test_function = "hamming";
  std::uint64_t state_cap = kSpectralStateCap;
  std::uint64_t truth_cap = kDefaultStateCap;
  /// Test hook: mixes every UNA kernel half-and-half with the uniform kernel.
  bool corrupt_kernel = false;

  bool operator==(const ExactConfig&) const = default;
};

struct ExperimentConfig {
  ModelConfig model;
  std::vector<NamedProposal> proposals{{"mana", {}}};
  RunConfig run;
  ExactConfig exact;
  std::string output_dir;

  bool operator==(const ExperimentConfig&) const = default;
  /// Throws ConfigError naming the first bad field.
  void validate() const;
};

/// Sectioned "key = value" text. Sections: [model], [proposal] or
/// [proposal.<name>] (repeatable), [run], [exact], [output]. '#' and ';'
/// start comments; lists are comma separated.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& config);

std::unique_ptr<EnergyModel> build_model(const ModelConfig& config,
                                         const std::filesystem::path& base_dir = {});

StateFunction build_test_function(const std::string& spec, int dim);

/// Exact mean if the state space fits `truth_cap`, else a long MANA reference run.
GroundTruth ground_truth(const EnergyModel& model, const ExperimentConfig& config);

struct CommandOptions {
  std::filesystem::path out;
  bool overwrite = false;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::filesystem::path config_dir;
};

struct ChainSummary {
  std::string proposal;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> checkpoints;
  std::vector<double> rmse_curve;
  std::vector<double> wall_seconds;
  double final_rmse = 0.0;
  double ess = 0.0;
  AcceptanceStats acceptance;
  std::vector<double> mean;
};

/// Runs every seed of the single configured proposal; writes
/// trace_seed<N>.csv, config.ini and summary.json under `out`.
std::vector<ChainSummary> cmd_sample(const ExperimentConfig& config, const CommandOptions& options);

struct ExactOutcome {
  std::vector<TheoremOneReport> theorem_one;
  std::optional<TheoremTwoReport> theorem_two;
  bool violated = false;
};

/// Theorem reports into exact_report.json; `violated` is set when a bound fails.
ExactOutcome cmd_exact(const ExperimentConfig& config, const CommandOptions& options);

/// Every proposal over every seed; RMSE tables and an ESS comparison.
std::vector<ChainSummary> cmd_bench(const ExperimentConfig& config, const CommandOptions& options);

/// Trace CSV: step,energy,accepted,acc_prob,changed,alpha,wall_ns.
std::string trace_csv(const RunTrace& trace);

/// Shortest round-trip decimal form.
std::string format_double(double value);

}  // namespace newtonmc::harness
