#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "newtonmc/finite_diff.hpp"
#include "newtonmc/models.hpp"
#include "newtonmc/rng.hpp"
#include "oracles.hpp"

using namespace newtonmc;
using doctest::Approx;

namespace {

QuadraticModel linear_model(std::vector<double> b) {
  const int d = static_cast<int>(b.size());
  return QuadraticModel({d, std::vector<double>(static_cast<std::size_t>(d) * d, 0.0), std::move(b), 0.0});
}

// U(s) = s_0^2 on an ordinal domain.
class SquareModel final : public EnergyModel {
 public:
  explicit SquareModel(int levels) : domain_(2, levels, Encoding::ordinal) {}
  const Domain& domain() const override { return domain_; }
  double energy(std::span<const int> s) const override { return static_cast<double>(s[0] * s[0]); }

 private:
  Domain domain_;
};

std::vector<double> random_point(RngStream& rng, int d, double lo = 0.0, double hi = 1.0) {
  std::vector<double> x(static_cast<std::size_t>(d));
  for (double& v : x) v = lo + (hi - lo) * rng.uniform();
  return x;
}

}  // namespace

TEST_CASE("forward_difference on a linear energy") {
  const auto model = linear_model({3.0, 1.0});
  auto d = forward_difference(model, State{0, 0});
  CHECK(d[0] == Approx(3.0));
  CHECK(d[1] == Approx(1.0));
  d = forward_difference(model, State{1, 0});
  CHECK(d[0] == Approx(-3.0));
  CHECK(d[1] == Approx(1.0));
  CHECK_THROWS_AS(forward_difference(model, State{2, 0}), InvalidArgument);
}

TEST_CASE("binary flip differences are antisymmetric under the flip") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto model = random_table_model(Domain::binary(5), seed);
    for (const auto& s : enumerate_states(model.domain())) {
      const auto here = forward_difference(model, s);
      for (int i = 0; i < 5; ++i) {
        State flipped = s;
        flipped[i] = 1 - flipped[i];
        CHECK(forward_difference(model, flipped)[i] == Approx(-here[i]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("one-hot differences vanish at the current level") {
  const auto model = random_table_model(Domain(3, 3, Encoding::one_hot), 11);
  for (const auto& s : enumerate_states(model.domain())) {
    const auto d = forward_difference(model, s);
    REQUIRE(d.values.size() == 9);
    for (int i = 0; i < 3; ++i) {
      CHECK(d.at(i, s[i]) == 0.0);
      for (int l = 0; l < 3; ++l) {
        State t = s;
        t[i] = l;
        CHECK(d.at(i, l) == Approx(model.energy(t) - model.energy(s)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("ordinal differences use the backward step at the top level") {
  const SquareModel model(3);
  CHECK(forward_difference(model, State{0, 0})[0] == Approx(1.0));
  CHECK(forward_difference(model, State{1, 0})[0] == Approx(3.0));
  CHECK(forward_difference(model, State{2, 0})[0] == Approx(3.0));
  CHECK(forward_difference(model, State{2, 2})[1] == Approx(0.0));
}

TEST_CASE("multilinear extension basics") {
  const double a = 1.5, b = -0.5;
  const SetFunctionTable f(1, {a, b});
  CHECK(multilinear_extension(f, std::vector<double>{0.5}) == Approx((a + b) / 2));
  CHECK_THROWS_AS(multilinear_extension(f, std::vector<double>{1.5}), InvalidArgument);
  CHECK_THROWS_AS(multilinear_extension(f, std::vector<double>{-0.1}), InvalidArgument);
  CHECK_THROWS_AS(multilinear_extension(f, std::vector<double>{0.2, 0.3}), InvalidArgument);
}

TEST_CASE("multilinear extension agrees with the table at every vertex") {
  for (int d = 1; d <= 10; ++d) {
    const auto model = random_table_model(Domain::binary(d), 100 + d);
    const auto f = SetFunctionTable::from_model(model);
    for (const auto& s : enumerate_states(model.domain())) {
      const std::vector<double> x(s.begin(), s.end());
      REQUIRE(multilinear_extension(f, x) == f(s));
    }
  }
}

TEST_CASE("multilinear extension matches a Bernoulli Monte Carlo estimate") {
  const auto model = random_table_model(Domain::binary(4), 404);
  const auto f = SetFunctionTable::from_model(model);
  const std::vector<double> x{0.2, 0.7, 0.5, 0.9};
  RngStream rng(9);
  const int n = 1000000;
  double sum = 0.0, sq = 0.0;
  State s(4);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < 4; ++i) s[i] = rng.uniform() < x[i] ? 1 : 0;
    const double v = f(s);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  CHECK(std::abs(multilinear_extension(f, x) - mean) < 3.0 * se);
}

TEST_CASE("multilinear gradient") {
  RngStream rng(3);
  for (int d = 2; d <= 6; ++d) {
    const auto model = random_table_model(Domain::binary(d), 200 + d);
    const auto f = SetFunctionTable::from_model(model);
    // vertex: f(S + i) - f(S - i)
    for (const auto& s : enumerate_states(model.domain())) {
      const std::vector<double> x(s.begin(), s.end());
      const auto g = multilinear_gradient(f, x);
      for (int i = 0; i < d; ++i) {
        State up = s, down = s;
        up[i] = 1;
        down[i] = 0;
        CHECK(g[i] == Approx(f(up) - f(down)).epsilon(1e-12));
      }
    }
    // interior: central differences
    for (int trial = 0; trial < 10; ++trial) {
      const auto x = random_point(rng, d, 0.05, 0.95);
      const auto g = multilinear_gradient(f, x);
      for (int i = 0; i < d; ++i) {
        auto hi = x, lo = x;
        hi[i] += 1e-6;
        lo[i] -= 1e-6;
        const double fd = (multilinear_extension(f, hi) - multilinear_extension(f, lo)) / 2e-6;
        CHECK(std::abs(fd - g[i]) <= 1e-5 * std::max(1.0, std::abs(g[i])));
      }
    }
  }
}

TEST_CASE("second-order modular tables have a quadratic extension") {
  RngStream rng(17);
  for (int d = 2; d <= 4; ++d) {
    const auto form = oracle::random_symmetric_form(d, rng);
    const QuadraticModel model(form);
    const auto f = SetFunctionTable::from_model(model);
    for (int trial = 0; trial < 100; ++trial) {
      const auto x = random_point(rng, d);
      CHECK(multilinear_extension(f, x) == Approx(oracle::quadratic_value(form, x)).epsilon(1e-9));
      const auto g = multilinear_gradient(f, x);
      const auto expected = oracle::quadratic_gradient_expanded(form, x);
      for (int i = 0; i < d; ++i) CHECK(g[i] == Approx(expected[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("flip differences equal the signed multilinear gradient") {
  for (int d = 1; d <= 8; ++d) {
    const auto model = random_table_model(Domain::binary(d), 300 + d);
    const auto f = SetFunctionTable::from_model(model);
    for (const auto& s : enumerate_states(model.domain())) {
      const std::vector<double> x(s.begin(), s.end());
      const auto g = multilinear_gradient(f, x);
      const auto diff = forward_difference(model, s);
      for (int i = 0; i < d; ++i) REQUIRE(std::abs(diff[i] - (1 - 2 * s[i]) * g[i]) <= 1e-10);
    }
  }
}

TEST_CASE("submodular tables have non-positive mixed second differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto model = generate_facility_instance(8, 6, MixtureParams{}, 0.5, seed);
    const auto f = SetFunctionTable::from_model(model);
    RngStream rng(seed);
    for (int trial = 0; trial < 20; ++trial) {
      auto x = random_point(rng, 6);
      for (int i = 0; i < 6; ++i)
        for (int j = i + 1; j < 6; ++j) {
          auto p = x;
          auto eval = [&](double a, double b) {
            p[i] = a;
            p[j] = b;
            return multilinear_extension(f, p);
          };
          const double mixed = eval(1, 1) - eval(1, 0) - eval(0, 1) + eval(0, 0);
          CHECK(mixed <= 1e-9);
        }
    }
  }
}

TEST_CASE("generalized extension reproduces the d=2, L=3 polynomial") {
  const auto model = random_table_model(Domain(2, 3, Encoding::one_hot), 23);
  auto f = [&](int a, int b) { return model.energy(State{a, b}); };
  RngStream rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    // rows inside the simplex
    double r[2][2];
    for (auto& row : r) {
      const double u = rng.uniform(), v = rng.uniform();
      row[0] = std::min(u, v);
      row[1] = std::max(u, v) - std::min(u, v);
    }
    const MarginalVector rho(2, 3, {r[0][0], r[0][1], r[1][0], r[1][1]});
    const double p10 = 1 - r[0][0] - r[0][1], p20 = 1 - r[1][0] - r[1][1];
    const double poly = f(0, 0) * p10 * p20 + f(2, 2) * r[0][1] * r[1][1] +
                        f(1, 0) * r[0][0] * p20 + f(0, 1) * p10 * r[1][0] +
                        f(2, 0) * r[0][1] * p20 + f(0, 2) * p10 * r[1][1] +
                        f(1, 1) * r[0][0] * r[1][0] + f(1, 2) * r[0][0] * r[1][1] +
                        f(2, 1) * r[0][1] * r[1][0];
    CHECK(std::abs(generalized_multilinear_extension(model, rho) - poly) <= 1e-12);
  }
}

TEST_CASE("generalized extension at a vertex and by Monte Carlo") {
  const auto model = random_table_model(Domain(3, 3, Encoding::one_hot), 31);
  for (const auto& s : enumerate_states(model.domain()))
    CHECK(generalized_multilinear_extension(model, MarginalVector::vertex(s, 3)) ==
          Approx(model.energy(s)).epsilon(1e-12));

  const MarginalVector rho(3, 3, {0.2, 0.3, 0.5, 0.1, 0.0, 0.6});
  RngStream rng(77);
  const int n = 1000000;
  double sum = 0.0, sq = 0.0;
  State s(3);
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < 3; ++i) {
      const double u = rng.uniform();
      s[i] = u < rho.probability(i, 0) ? 0 : (u < rho.probability(i, 0) + rho(i, 1) ? 1 : 2);
    }
    const double v = model.energy(s);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  CHECK(std::abs(generalized_multilinear_extension(model, rho) - mean) < 3.0 * se);
}

TEST_CASE("marginal vector validation") {
  CHECK_THROWS_AS(MarginalVector(2, 3, {0.6, 0.5, 0.1, 0.1}), InvalidArgument);
  CHECK_THROWS_AS(MarginalVector(2, 3, {-0.1, 0.5, 0.1, 0.1}), InvalidArgument);
  CHECK_THROWS_AS(MarginalVector(2, 3, {0.1, 0.5, 0.1}), InvalidArgument);
  CHECK_NOTHROW(MarginalVector(1, 3, {0.5, 0.5 + 1e-13}));
  const auto big = random_table_model(Domain(4, 3, Encoding::one_hot), 1);
  CHECK_THROWS_AS(generalized_multilinear_extension(big, MarginalVector(4, 3, std::vector<double>(8, 0.1)), 16),
                  StateSpaceTooLarge);
}

TEST_CASE("generalized partial derivative") {
  // f depends on coordinate 0 only
  std::vector<double> values;
  const Domain domain(3, 3, Encoding::one_hot);
  for (const auto& s : enumerate_states(domain)) values.push_back(1.0 + 2.0 * s[0] - s[0] * s[0]);
  const TableModel flat(domain, values);
  const MarginalVector rho(3, 3, {0.2, 0.3, 0.25, 0.25, 0.1, 0.4});
  CHECK(generalized_partial_derivative(flat, rho, 1, 1) == Approx(0.0).epsilon(1e-15));
  CHECK(generalized_partial_derivative(flat, rho, 2, 2) == Approx(0.0).epsilon(1e-15));

  const auto model = random_table_model(domain, 5);
  for (int i = 0; i < 3; ++i)
    for (int j = 1; j < 3; ++j) {
      auto raw = std::vector<double>{0.2, 0.3, 0.25, 0.25, 0.1, 0.4};
      const double analytic = generalized_partial_derivative(model, MarginalVector(3, 3, raw), i, j);
      const std::size_t k = static_cast<std::size_t>(i) * 2 + (j - 1);
      raw[k] += 1e-6;
      const double hi = generalized_multilinear_extension(model, MarginalVector(3, 3, raw));
      raw[k] -= 2e-6;
      const double lo = generalized_multilinear_extension(model, MarginalVector(3, 3, raw));
      CHECK(std::abs((hi - lo) / 2e-6 - analytic) <= 1e-5 * std::max(1.0, std::abs(analytic)));
    }

  for (const auto& s : enumerate_states(domain)) {
    const auto levels = forward_difference(model, s);
    const auto vertex = MarginalVector::vertex(s, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 1; j < 3; ++j)
        CHECK(generalized_partial_derivative(model, vertex, i, j) ==
              Approx(levels.at(i, j) - levels.at(i, 0)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(generalized_partial_derivative(model, rho, 0, 0), InvalidArgument);
  CHECK_THROWS_AS(generalized_partial_derivative(model, rho, 0, 3), InvalidArgument);
}

TEST_CASE("set function tables load and save") {
  const auto dir = std::filesystem::temp_directory_path() / "newtonmc_table_test";
  std::filesystem::create_directories(dir);
  const auto model = random_table_model(Domain::binary(4), 8);
  const auto f = SetFunctionTable::from_model(model);
  f.save(dir / "t.txt");
  const auto g = SetFunctionTable::load(dir / "t.txt");
  REQUIRE(g.dim() == 4);
  for (std::size_t k = 0; k < 16; ++k) CHECK(g.values()[k] == f.values()[k]);

  {
    std::ofstream out(dir / "small.txt");
    out << "# comment\n00 0\n01 1.5\n10 -2\n11 2.5\n";
  }
  const auto h = SetFunctionTable::load(dir / "small.txt");
  CHECK(h(State{0, 1}) == 1.5);
  CHECK(h(State{1, 0}) == -2.0);
  {
    std::ofstream out(dir / "bad.txt");
    out << "00 0\n01 1\n10 2\n";
  }
  CHECK_THROWS_AS(SetFunctionTable::load(dir / "bad.txt"), InvalidArgument);
  CHECK_THROWS_AS(SetFunctionTable(3, std::vector<double>(7)), InvalidArgument);
  std::filesystem::remove_all(dir);
}
