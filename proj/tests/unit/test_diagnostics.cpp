#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "newtonmc/diagnostics.hpp"
#include "newtonmc/models.hpp"
#include "newtonmc/proposals.hpp"
#include "newtonmc/rng.hpp"
#include "oracles.hpp"

using namespace newtonmc;
using doctest::Approx;

namespace {

std::vector<double> ar1(double rho, std::size_t n, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> x(n);
  double v = rng.normal() / std::sqrt(1.0 - rho * rho);
  for (auto& e : x) {
    e = v;
    v = rho * v + rng.normal();
  }
  return x;
}

}  // namespace

TEST_CASE("rmse") {
  const std::vector<double> a{0.1, 0.2, 0.3};
  CHECK(rmse(a, a) == 0.0);
  CHECK(rmse(std::vector<double>(4, 1.0), std::vector<double>(4, 0.0)) == Approx(1.0));
  CHECK(rmse(std::vector<double>{0.5, 0.5}, std::vector<double>{0.0, 1.0}) == Approx(0.5));
  CHECK(rmse(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5, 0.5001}) > 0.0);
  CHECK_THROWS_AS(rmse(a, std::vector<double>{0.1}), InvalidArgument);
}

TEST_CASE("exact mean by enumeration") {
  const auto model = random_table_model(Domain(2, 3, Encoding::ordinal), 3);
  const auto truth = exact_mean(model);
  CHECK(truth.provenance == TruthProvenance::exact);
  CHECK_FALSE(truth.standard_error.has_value());
  double z = 0.0, m0 = 0.0, m1 = 0.0;
  for (const auto& s : oracle::all_states(2, 3)) {
    const double w = std::exp(model.energy(s));
    z += w;
    m0 += w * s[0];
    m1 += w * s[1];
  }
  CHECK(truth.mean[0] == Approx(m0 / z).epsilon(1e-12));
  CHECK(truth.mean[1] == Approx(m1 / z).epsilon(1e-12));
  CHECK_THROWS_AS(exact_mean(IsingModel(5, 5, 0.1, 0.2)), StateSpaceTooLarge);
}

TEST_CASE("running mean, sample mean and rmse curve") {
  const auto model = random_table_model(Domain::binary(4), 1);
  const auto trace = run_chain(model, {ProposalFamily::newton, 0.5, true}, {.steps = 1000, .seed = 2, .thin = 3});
  REQUIRE(trace.retained == 333);
  std::vector<double> mean(4, 0.0);
  for (std::size_t k = 0; k < trace.retained; ++k)
    for (int i = 0; i < 4; ++i) mean[i] += trace.sample(k)[i];
  for (int i = 0; i < 4; ++i) {
    mean[i] /= trace.retained;
    CHECK(std::abs(trace.running_mean[i] - mean[i]) <= 1e-12);
  }
  const auto plain = sample_mean(trace);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(plain[i] - trace.running_mean[i]) <= 1e-12);

  // post-burn-in mean by hand
  std::vector<double> late(4, 0.0);
  int count = 0;
  for (std::size_t k = 0; k < trace.retained; ++k)
    if (trace.sample_steps[k] >= 500) {
      ++count;
      for (int i = 0; i < 4; ++i) late[i] += trace.sample(k)[i];
    }
  for (double& v : late) v /= count;
  const auto by_lib = sample_mean(trace, 500);
  for (int i = 0; i < 4; ++i) CHECK(by_lib[i] == Approx(late[i]).epsilon(1e-12));
  CHECK_THROWS_AS(sample_mean(trace, 5000), InvalidArgument);

  const auto truth = exact_mean(model).mean;
  const std::vector<std::uint64_t> checkpoints{100, 500, 1000};
  const auto curve = rmse_curve(trace, truth, 0, checkpoints);
  REQUIRE(curve.size() == 3);
  CHECK(curve[2] == Approx(rmse(trace.running_mean, truth)).epsilon(1e-12));
  const auto burnt = rmse_curve(trace, truth, 500, checkpoints);
  CHECK(std::isnan(burnt[0]));
  CHECK(burnt[2] == Approx(rmse(late, truth)).epsilon(1e-12));
}

TEST_CASE("effective sample size of iid noise") {
  const std::size_t n = 100000;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RngStream rng(seed, 5);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.normal();
    const double ess = effective_sample_size(x);
    CHECK(ess <= static_cast<double>(n));
    CHECK(std::abs(ess - n) <= 0.05 * n);
  }
}

TEST_CASE("effective sample size of an AR(1) process") {
  const double rho = 0.5;
  const std::size_t n = 1000000;
  const auto x = ar1(rho, n, 3);
  const double expected = n * (1 - rho) / (1 + rho);
  CHECK(std::abs(effective_sample_size(x) - expected) <= 0.05 * expected);

  // affine invariance
  std::vector<double> y(x.begin(), x.begin() + 20000), z(y.size());
  std::transform(y.begin(), y.end(), z.begin(), [](double v) { return -3.0 * v + 7.0; });
  CHECK(effective_sample_size(z) == Approx(effective_sample_size(y)).epsilon(1e-9));

  // batch means: 1 / (1 - rho)^2 for unit innovations; one estimate has ~14%
  // relative spread with 100 batches, so average 20 independent series
  double total = 0.0;
  for (std::uint64_t seed = 10; seed < 30; ++seed) total += batch_means_variance(ar1(rho, 200000, seed));
  CHECK(total / 20 == Approx(1.0 / ((1 - rho) * (1 - rho))).epsilon(0.1));
}

TEST_CASE("effective sample size conventions") {
  CHECK(effective_sample_size(std::vector<double>(50, 2.0)) == 50.0);
  CHECK_THROWS_AS(effective_sample_size(std::vector<double>(5, 1.0)), InvalidArgument);
  // perfectly anticorrelated series would exceed N; clamp
  std::vector<double> alternating(1000);
  for (std::size_t k = 0; k < alternating.size(); ++k) alternating[k] = k % 2 ? 1.0 : -1.0;
  const double ess = effective_sample_size(alternating);
  CHECK(ess > 0.0);
  CHECK(ess <= 1000.0);
}

TEST_CASE("acceptance statistics") {
  std::vector<StepRecord> all(10);
  for (auto& r : all) r.changed = 2;
  const auto a = acceptance_stats(all);
  CHECK(a.acceptance_rate == 1.0);
  CHECK(a.mean_changed_accepted == 2.0);

  std::vector<StepRecord> half(100);
  for (std::size_t k = 0; k < half.size(); ++k) {
    half[k].accepted = k % 2 == 0;
    half[k].changed = k % 2 == 0 ? 1 : 3;
  }
  const auto h = acceptance_stats(half);
  CHECK(h.acceptance_rate == 0.5);
  CHECK(h.mean_changed_proposed == 2.0);
  CHECK(h.mean_changed_accepted == 1.0);
  CHECK(h.steps == 100);
  CHECK(h.accepted == 50);

  // replay from raw step outcomes
  const auto model = random_table_model(Domain::binary(6), 4, 2.0);
  Chain chain(model, {ProposalFamily::newton, 1.0, true}, State(6, 0), RngStream(8));
  std::vector<StepRecord> records;
  std::uint64_t accepted = 0, changed = 0, changed_acc = 0;
  for (int k = 0; k < 3000; ++k) {
    const auto out = chain.step();
    StepRecord r;
    r.accepted = out.accepted;
    r.changed = out.changed_coordinates;
    records.push_back(r);
    accepted += out.accepted;
    changed += out.changed_coordinates;
    if (out.accepted) changed_acc += out.changed_coordinates;
  }
  const auto s = acceptance_stats(records);
  CHECK(s.acceptance_rate == static_cast<double>(accepted) / 3000.0);
  CHECK(s.mean_changed_proposed == static_cast<double>(changed) / 3000.0);
  CHECK(s.mean_changed_accepted == static_cast<double>(changed_acc) / static_cast<double>(accepted));
  CHECK(s.acceptance_rate >= 0.0);
  CHECK(s.acceptance_rate <= 1.0);
}

TEST_CASE("dimension-wise majority vote") {
  const std::vector<int> x{1, 0, 1, 0, 1, 1};
  CHECK(dimension_wise_majority_vote(x, 3, 2, 1) == std::vector<int>{1, 0});
  CHECK(dimension_wise_majority_vote(std::vector<int>(6, 1), 2, 3, 2) == std::vector<int>{1, 1, 0});
  CHECK_THROWS_AS(dimension_wise_majority_vote(x, 3, 2, 0), InvalidArgument);
  CHECK_THROWS_AS(dimension_wise_majority_vote(x, 3, 2, 3), InvalidArgument);
  CHECK_THROWS_AS(dimension_wise_majority_vote(x, 2, 2, 1), InvalidArgument);

  RngStream rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> m(500);
    for (int& v : m) v = rng.uniform() < 0.5 ? 1 : 0;
    const int budget = 1 + trial % 10;
    const auto out = dimension_wise_majority_vote(m, 50, 10, budget);
    CHECK(std::accumulate(out.begin(), out.end(), 0) == budget);
    // brute force: count, then sort pairs (-count, index)
    std::vector<std::pair<int, int>> keyed;
    for (int c = 0; c < 10; ++c) {
      int count = 0;
      for (int r = 0; r < 50; ++r) count += m[r * 10 + c];
      keyed.emplace_back(-count, c);
    }
    std::sort(keyed.begin(), keyed.end());
    std::vector<int> expected(10, 0);
    for (int k = 0; k < budget; ++k) expected[keyed[k].second] = 1;
    CHECK(out == expected);
  }
}
