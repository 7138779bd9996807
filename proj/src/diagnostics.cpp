#include "newtonmc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace newtonmc {

void RunTrace::retain(std::uint64_t step, std::span<const int> state) {
  if (running_mean.empty()) running_mean.assign(static_cast<std::size_t>(dim), 0.0);
  samples.insert(samples.end(), state.begin(), state.end());
  sample_steps.push_back(step);
  ++retained;
  const double weight = 1.0 / static_cast<double>(retained);
  for (int i = 0; i < dim; ++i) running_mean[i] += (state[i] - running_mean[i]) * weight;
}

std::string to_string(TruthProvenance provenance) {
  return provenance == TruthProvenance::exact ? "exact" : "reference";
}

GroundTruth exact_mean(const EnergyModel& model, std::uint64_t cap) {
  const Domain& domain = model.domain();
  const auto count = domain.checked_state_count(cap);
  std::vector<double> energies(count);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::uint64_t k = 0; k < count; ++k) {
    energies[k] = model.energy(index_state(k, domain));
    peak = std::max(peak, energies[k]);
  }
  std::vector<double> mean(static_cast<std::size_t>(domain.dim()), 0.0);
  double total = 0.0;
  for (std::uint64_t k = 0; k < count; ++k) {
    const double w = std::exp(energies[k] - peak);
    total += w;
    const State s = index_state(k, domain);
    for (int i = 0; i < domain.dim(); ++i) mean[i] += w * s[i];
  }
  for (double& m : mean) m /= total;
  return {std::move(mean), std::nullopt, TruthProvenance::exact};
}

double rmse(std::span<const double> estimate, std::span<const double> truth) {
  if (estimate.size() != truth.size())
    throw InvalidArgument("rmse: dimension mismatch (" + std::to_string(estimate.size()) +
                          " vs " + std::to_string(truth.size()) + ")");
  if (estimate.empty()) throw InvalidArgument("rmse: empty vectors");
  double sum = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double e = estimate[i] - truth[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(estimate.size()));
}

std::vector<double> sample_mean(const RunTrace& trace, std::uint64_t burn_in) {
  std::vector<double> mean(static_cast<std::size_t>(trace.dim), 0.0);
  std::uint64_t count = 0;
  for (std::size_t k = 0; k < trace.sample_steps.size(); ++k) {
    if (trace.sample_steps[k] < burn_in) continue;
    const auto s = trace.sample(k);
    for (int i = 0; i < trace.dim; ++i) mean[i] += s[i];
    ++count;
  }
  if (count == 0) throw InvalidArgument("no retained samples after burn-in");
  for (double& m : mean) m /= static_cast<double>(count);
  return mean;
}

std::vector<double> rmse_curve(const RunTrace& trace, std::span<const double> truth,
                               std::uint64_t burn_in, std::span<const std::uint64_t> checkpoints) {
  if (static_cast<int>(truth.size()) != trace.dim) throw InvalidArgument("rmse_curve: dimension mismatch");
  std::vector<double> sum(static_cast<std::size_t>(trace.dim), 0.0);
  std::vector<double> curve;
  curve.reserve(checkpoints.size());
  std::uint64_t count = 0;
  std::size_t k = 0;
  for (std::uint64_t checkpoint : checkpoints) {
    for (; k < trace.sample_steps.size() && trace.sample_steps[k] < checkpoint; ++k) {
      if (trace.sample_steps[k] < burn_in) continue;
      const auto s = trace.sample(k);
      for (int i = 0; i < trace.dim; ++i) sum[i] += s[i];
      ++count;
    }
    if (count == 0) {
      curve.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    std::vector<double> mean(sum);
    for (double& m : mean) m /= static_cast<double>(count);
    curve.push_back(rmse(mean, truth));
  }
  return curve;
}

double effective_sample_size(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 10) throw InvalidArgument("effective_sample_size needs at least 10 values");
  const double nd = static_cast<double>(n);
  const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
  if (*lo == *hi) return nd;
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / nd;
  std::vector<double> centered(n);
  for (std::size_t t = 0; t < n; ++t) centered[t] = series[t] - mean;

  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) s += centered[t] * centered[t + lag];
    return s / nd;
  };
  const double gamma0 = autocov(0);

  // Sum of consecutive-pair sums Gamma_m = gamma_{2m} + gamma_{2m+1} while positive.
  double pair_total = 0.0;
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    const double pair = (m == 0 ? gamma0 : autocov(2 * m)) + autocov(2 * m + 1);
    if (pair <= 0.0) break;
    pair_total += pair;
  }
  // tau = -1 + 2 sum Gamma_m / gamma0  ==  1 + 2 sum_{k>=1} rho_k.
  const double tau = -1.0 + 2.0 * pair_total / gamma0;
  if (!(tau > 0.0)) return nd;
  return std::min(nd, nd / tau);
}

AcceptanceStats acceptance_stats(std::span<const StepRecord> records) {
  AcceptanceStats stats;
  stats.steps = records.size();
  if (records.empty()) return stats;
  std::uint64_t changed_all = 0;
  std::uint64_t changed_accepted = 0;
  for (const auto& r : records) {
    changed_all += static_cast<std::uint64_t>(r.changed);
    if (r.accepted) {
      ++stats.accepted;
      changed_accepted += static_cast<std::uint64_t>(r.changed);
    }
  }
  stats.acceptance_rate = static_cast<double>(stats.accepted) / static_cast<double>(stats.steps);
  stats.mean_changed_proposed =
      static_cast<double>(changed_all) / static_cast<double>(stats.steps);
  stats.mean_changed_accepted =
      stats.accepted ? static_cast<double>(changed_accepted) / static_cast<double>(stats.accepted)
                     : 0.0;
  return stats;
}

double batch_means_variance(std::span<const double> series, std::size_t batches) {
  if (batches < 2 || series.size() < 2 * batches)
    throw InvalidArgument("batch_means_variance: series too short for the batch count");
  const std::size_t size = series.size() / batches;
  const std::size_t used = size * batches;
  const double grand =
      std::accumulate(series.begin(), series.begin() + static_cast<std::ptrdiff_t>(used), 0.0) /
      static_cast<double>(used);
  double ss = 0.0;
  for (std::size_t b = 0; b < batches; ++b) {
    double m = 0.0;
    for (std::size_t t = b * size; t < (b + 1) * size; ++t) m += series[t];
    m /= static_cast<double>(size);
    ss += (m - grand) * (m - grand);
  }
  return static_cast<double>(size) * ss / static_cast<double>(batches - 1);
}

std::vector<int> dimension_wise_majority_vote(std::span<const int> samples, int rows, int cols,
                                              int budget) {
  if (rows < 1 || cols < 1) throw InvalidArgument("majority vote needs a non-empty sample matrix");
  if (samples.size() != static_cast<std::size_t>(rows) * cols)
    throw InvalidArgument("majority vote: sample matrix size mismatch");
  if (budget < 1 || budget > cols)
    throw InvalidArgument("majority vote budget must lie in [1, " + std::to_string(cols) + "]");
  std::vector<long long> counts(static_cast<std::size_t>(cols), 0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) counts[c] += samples[static_cast<std::size_t>(r) * cols + c];
  std::vector<int> order(static_cast<std::size_t>(cols));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return counts[a] > counts[b]; });
  std::vector<int> chosen(static_cast<std::size_t>(cols), 0);
  for (int k = 0; k < budget; ++k) chosen[order[k]] = 1;
  return chosen;
}

}  // namespace newtonmc
