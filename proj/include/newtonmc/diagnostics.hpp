#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "newtonmc/core.hpp"

namespace newtonmc {

struct StepRecord {
  std::uint64_t step = 0;
  double energy = 0.0;  // energy of the chain state after the step
  bool accepted = true;
  double acceptance_probability = 1.0;
  int changed = 0;  // Hamming distance between the previous and the proposed state
  double alpha = 0.0;
  std::int64_t wall_ns = 0;  // monotonic time since the chain started
};

/// Per-step records plus retained samples. Samples are stored row-major, one
/// row of `dim` entries per retained step.
struct RunTrace {
  int dim = 0;
  int thin = 1;
  std::vector<StepRecord> records;
  std::vector<int> samples;
  std::vector<std::uint64_t> sample_steps;
  std::vector<double> running_mean;
  std::uint64_t retained = 0;

  std::span<const int> sample(std::size_t k) const {
    return std::span<const int>(samples).subspan(k * static_cast<std::size_t>(dim),
                                                 static_cast<std::size_t>(dim));
  }
  /// Appends a sample and updates the running mean.
  void retain(std::uint64_t step, std::span<const int> state);
};

enum class TruthProvenance { exact, reference };

struct GroundTruth {
  std::vector<double> mean;
  std::optional<std::vector<double>> standard_error;
  TruthProvenance provenance = TruthProvenance::exact;
};

std::string to_string(TruthProvenance provenance);

/// Exact E_pi[s] by enumeration with log-sum-exp normalisation.
GroundTruth exact_mean(const EnergyModel& model, std::uint64_t cap = kDefaultStateCap);

double rmse(std::span<const double> estimate, std::span<const double> truth);

/// Mean of retained samples whose step index is >= burn_in.
std::vector<double> sample_mean(const RunTrace& trace, std::uint64_t burn_in = 0);

/// RMSE of the post-burn-in running mean against `truth` at each checkpoint
/// step (a checkpoint counts steps from the start of the chain).
std::vector<double> rmse_curve(const RunTrace& trace, std::span<const double> truth,
                               std::uint64_t burn_in, std::span<const std::uint64_t> checkpoints);

/// N / (1 + 2 sum rho_k) with Geyer initial-positive-sequence truncation,
/// clamped to N. A zero-variance series returns N.
double effective_sample_size(std::span<const double> series);

struct AcceptanceStats {
  double acceptance_rate = 0.0;
  double mean_changed_proposed = 0.0;
  double mean_changed_accepted = 0.0;
  std::uint64_t steps = 0;
  std::uint64_t accepted = 0;
};

AcceptanceStats acceptance_stats(std::span<const StepRecord> records);

/// Batch-means estimate of the asymptotic variance of a series.
double batch_means_variance(std::span<const double> series, std::size_t batches = 100);

/// Indicator of the `budget` columns with the highest means; ties go to the
/// lower column index. `samples` is row-major rows x cols.
std::vector<int> dimension_wise_majority_vote(std::span<const int> samples, int rows, int cols,
                                              int budget);

}  // namespace newtonmc
