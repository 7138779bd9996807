#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "newtonmc/finite_diff.hpp"
#include "newtonmc/models.hpp"
#include "newtonmc/proposals.hpp"
#include "newtonmc/rng.hpp"

using namespace newtonmc;
using doctest::Approx;

namespace {

State random_state(const Domain& domain, RngStream& rng) {
  State s(static_cast<std::size_t>(domain.dim()));
  for (int& v : s) v = static_cast<int>(rng.uniform() * domain.levels());
  return s;
}

void check_against_generic(const EnergyModel& model, const State& s, double tol) {
  const auto fast = model.differences(s);
  const auto slow = generic_forward_difference(model, s);
  REQUIRE(fast.values.size() == slow.values.size());
  for (std::size_t k = 0; k < fast.values.size(); ++k)
    REQUIRE(std::abs(fast.values[k] - slow.values[k]) <= tol);
}

}  // namespace

TEST_CASE("lattice adjacency") {
  const Lattice grid(2, 3);
  CHECK(grid.sites() == 6);
  CHECK(grid.edges().size() == 7);
  CHECK(grid.neighbors(0).size() == 2);
  CHECK(grid.neighbors(1).size() == 3);
  CHECK(Lattice(1, 1).edges().empty());
}

TEST_CASE("ising flip differences") {
  const IsingModel single(1, 1, 0.1, 0.2);
  CHECK(single.flip_difference(State{1}, 0) == Approx(-0.4));
  CHECK(single.flip_difference(State{0}, 0) == Approx(0.4));

  const IsingModel small(2, 2, 0.1, 0.2);
  const State up{1, 1, 1, 1};
  for (int u = 0; u < 4; ++u) CHECK(small.differences(up)[u] == Approx(-0.8));

  const IsingModel big(4, 4, 0.3, -0.2);
  RngStream rng(1);
  for (int trial = 0; trial < 100; ++trial) check_against_generic(big, random_state(big.domain(), rng), 1e-12);
}

TEST_CASE("ising quadratic form reproduces the energy") {
  const IsingModel model(2, 2, 0.1, 0.2);
  const auto form = model.quadratic_form();
  REQUIRE(form.has_value());
  for (const auto& s : enumerate_states(model.domain())) {
    const std::vector<double> x(s.begin(), s.end());
    CHECK(form->evaluate(x) == Approx(model.energy(s)).epsilon(1e-14));
  }
  for (int i = 0; i < 4; ++i) CHECK(form->a[static_cast<std::size_t>(i) * 4 + i] == 0.0);
}

TEST_CASE("exhaustive agreement with the generic differences") {
  const IsingModel ising(3, 4, 0.2, 0.1);
  for (const auto& s : enumerate_states(ising.domain())) check_against_generic(ising, s, 1e-10);

  const PottsModel potts(2, 3, 0.4, {0.1, -0.3, 0.2}, Encoding::one_hot);
  for (const auto& s : enumerate_states(potts.domain())) check_against_generic(potts, s, 1e-10);

  const PottsModel ordinal(2, 3, 0.4, {0.1, -0.3, 0.2}, Encoding::ordinal);
  for (const auto& s : enumerate_states(ordinal.domain())) check_against_generic(ordinal, s, 1e-10);

  const auto facility = generate_facility_instance(6, 10, MixtureParams{}, 1.0, 3);
  for (const auto& s : enumerate_states(facility.domain())) check_against_generic(facility, s, 1e-10);

  RngStream rng(8);
  const auto quadratic = QuadraticModel(QuadraticForm{
      5, std::vector<double>(25, 0.0), {0.3, -0.1, 0.2, 0.0, 1.0}, 0.7});
  for (const auto& s : enumerate_states(quadratic.domain())) check_against_generic(quadratic, s, 1e-10);
}

TEST_CASE("potts level differences") {
  const PottsModel potts(3, 3, 0.5, {0.2, -0.1, 0.4}, Encoding::one_hot);
  RngStream rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_state(potts.domain(), rng);
    check_against_generic(potts, s, 1e-12);
    const auto d = potts.differences(s);
    for (int u = 0; u < 9; ++u)
      for (int l = 0; l < 3; ++l) {
        int at_l = 0, at_cur = 0;
        for (int v : potts.lattice().neighbors(u)) {
          at_l += s[v] == l;
          at_cur += s[v] == s[u];
        }
        CHECK(d.at(u, l) == Approx(0.5 * (at_l - at_cur) + potts.bias()[l] - potts.bias()[s[u]]));
      }
  }
  const PottsModel lone(1, 1, 0.5, {0.3, 0.3, 0.3});
  const auto d = lone.differences(State{1});
  for (int l = 0; l < 3; ++l) CHECK(d.at(0, l) == 0.0);
}

TEST_CASE("two-level potts matches an affinely equivalent ising model") {
  // [s_u == s_v] = (1 + x_u x_v) / 2 and bias[s] = b0 + (b1 - b0)(1 + x) / 2
  const double a = 0.6, b0 = 0.1, b1 = -0.3;
  const PottsModel potts(3, 3, a, {b0, b1}, Encoding::binary);
  const IsingModel ising(3, 3, a / 2, (b1 - b0) / 2);
  RngStream rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = random_state(ising.domain(), rng);
    const auto qp = newton_proposal(potts, s, 0.7);
    const auto qi = newton_proposal(ising, s, 0.7);
    for (int u = 0; u < 9; ++u) {
      const int argmax_p = qp.prob(u, 1) > qp.prob(u, 0) ? 1 : 0;
      const int argmax_i = qi.prob(u, 1) > qi.prob(u, 0) ? 1 : 0;
      CHECK(argmax_p == argmax_i);
      CHECK(qp.prob(u, 1) == Approx(qi.prob(u, 1)).epsilon(1e-12));
    }
  }
}

TEST_CASE("facility location energy") {
  const Matrix c = [] {
    Matrix m(3, 4);
    const double values[] = {1, 2, 0, 4, 3, 0, 1, 1, -1, 5, 2, 0};
    std::copy(std::begin(values), std::end(values), m.data.begin());
    return m;
  }();
  const FacilityLocationModel model(c, 2.0);
  CHECK(model.energy(State{0, 0, 0}) == 0.0);
  CHECK(model.energy(State{1, 0, 0}) == Approx(7.0 - 2.0));
  CHECK(model.energy(State{0, 0, 1}) == Approx(6.0 - 2.0));
  // per customer: max(1,3)=3, max(2,0)=2, max(0,1)=1, max(4,1)=4
  CHECK(model.energy(State{1, 1, 0}) == Approx(10.0 - 4.0));
  CHECK(model.energy(State{1, 1, 1}) == Approx(3 + 5 + 2 + 4 - 6.0));

  const auto random = generate_facility_instance(16, 10, MixtureParams{}, 2.0, 5);
  RngStream rng(6);
  for (int trial = 0; trial < 100; ++trial) check_against_generic(random, random_state(random.domain(), rng), 1e-10);

  // relabelling customers leaves f unchanged
  Matrix permuted(10, 16);
  std::vector<int> order(16);
  std::iota(order.begin(), order.end(), 0);
  std::reverse(order.begin(), order.end());
  std::swap(order[0], order[5]);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 16; ++j) permuted(i, j) = random.utility()(i, order[j]);
  const FacilityLocationModel shuffled(permuted, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_state(random.domain(), rng);
    CHECK(shuffled.energy(s) == Approx(random.energy(s)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(FacilityLocationModel(c, -1.0), InvalidArgument);
}

TEST_CASE("facility instance generator") {
  const auto a = generate_facility_utilities(16, 10, MixtureParams{}, 42);
  const auto b = generate_facility_utilities(16, 10, MixtureParams{}, 42);
  CHECK(a == b);
  CHECK_FALSE(a == generate_facility_utilities(16, 10, MixtureParams{}, 43));

  const MixtureParams degenerate{{0.5, 0.5}, {0.0, 0.0}, {0.0, 0.0}};
  const auto zero = generate_facility_utilities(8, 5, degenerate, 1);
  CHECK(std::all_of(zero.data.begin(), zero.data.end(), [](double v) { return v == 0.0; }));

  // mean 2.5, variance 1 + 2.5^2 = 7.25 for the default mixture
  const auto big = generate_facility_utilities(1000, 100, MixtureParams{}, 7);
  const double mean = std::accumulate(big.data.begin(), big.data.end(), 0.0) / big.data.size();
  CHECK(std::abs(mean - 2.5) < 3.0 * std::sqrt(7.25 / big.data.size()));

  CHECK_THROWS_AS(generate_facility_utilities(0, 5, MixtureParams{}, 1), InvalidArgument);
  CHECK_THROWS_AS(generate_facility_utilities(5, 5, MixtureParams{{1.0}, {0.0, 1.0}, {1.0}}, 1),
                  InvalidArgument);
}

TEST_CASE("utility matrices round trip through CSV") {
  const auto dir = std::filesystem::temp_directory_path() / "newtonmc_models_test";
  std::filesystem::create_directories(dir);
  const auto m = generate_facility_utilities(7, 4, MixtureParams{}, 2);
  save_matrix_csv(m, dir / "c.csv");
  CHECK(load_matrix_csv(dir / "c.csv") == m);
  std::filesystem::remove_all(dir);
}

TEST_CASE("table and quadratic models") {
  CHECK_THROWS_AS(TableModel(Domain::binary(3), std::vector<double>(7)), InvalidArgument);
  const auto t = random_table_model(Domain(2, 3, Encoding::one_hot), 9);
  CHECK(t.energy(State{2, 1}) == t.values()[7]);
  CHECK(random_table_model(Domain::binary(3), 9).values() == random_table_model(Domain::binary(3), 9).values());

  // diagonal entries are folded into the linear term, A is symmetrized
  const QuadraticModel q(QuadraticForm{2, {1.0, 2.0, 0.0, 3.0}, {0.5, -1.0}, 0.25});
  const auto form = *q.quadratic_form();
  CHECK(form.a[0] == 0.0);
  CHECK(form.a[3] == 0.0);
  CHECK(form.a[1] == Approx(1.0));
  CHECK(form.a[2] == Approx(1.0));
  for (const auto& s : enumerate_states(q.domain())) {
    const double x0 = s[0], x1 = s[1];
    const double direct = x0 * x0 + 2 * x0 * x1 + 3 * x1 * x1 + 0.5 * x0 - x1 + 0.25;
    CHECK(q.energy(s) == Approx(direct));
  }
}
