#include <doctest.h>

#include "newtonmc/core.hpp"
#include "newtonmc/models.hpp"

using namespace newtonmc;

TEST_CASE("enumerate_states lists states lexicographically") {
  const auto one = enumerate_states(Domain::binary(1));
  REQUIRE(one.size() == 2);
  CHECK(one[0] == State{0});
  CHECK(one[1] == State{1});

  const auto two = enumerate_states(Domain::binary(2));
  CHECK(two == std::vector<State>{{0, 0}, {0, 1}, {1, 0}, {1, 1}});

  const auto ternary = enumerate_states(Domain(2, 3, Encoding::ordinal));
  REQUIRE(ternary.size() == 9);
  CHECK(ternary[0] == State{0, 0});
  CHECK(ternary[1] == State{0, 1});
  CHECK(ternary[2] == State{0, 2});
  CHECK(ternary[3] == State{1, 0});
}

TEST_CASE("enumerate_states refuses spaces above the cap") {
  CHECK_THROWS_AS(enumerate_states(Domain::binary(21)), StateSpaceTooLarge);
  CHECK_THROWS_AS(enumerate_states(Domain::binary(5), 16), StateSpaceTooLarge);
  CHECK(enumerate_states(Domain::binary(4), 16).size() == 16);
  CHECK_FALSE(Domain(40, 3, Encoding::one_hot).state_count().has_value());
  CHECK(Domain(3, 4, Encoding::one_hot).state_count() == 64u);
}

TEST_CASE("state_index and index_state") {
  CHECK(state_index(State{1, 1}, Domain::binary(2)) == 3);
  CHECK(state_index(State{0, 2}, Domain(2, 3, Encoding::ordinal)) == 2);
  const Domain d3 = Domain::binary(3);
  for (std::uint64_t k = 0; k < 8; ++k) CHECK(state_index(index_state(k, d3), d3) == k);
  CHECK_THROWS_AS(index_state(8, d3), InvalidArgument);
  CHECK_THROWS_AS(state_index(State{0, 2, 0}, d3), InvalidArgument);
}

TEST_CASE("index round trip over every small domain") {
  for (int levels = 2; levels <= 4; ++levels) {
    for (int dim = 1; dim <= 12; ++dim) {
      const Domain domain(dim, levels, levels == 2 ? Encoding::binary : Encoding::ordinal);
      const auto count = domain.state_count(std::uint64_t{1} << 12);
      if (!count) break;
      const auto states = enumerate_states(domain);
      REQUIRE(states.size() == *count);
      for (std::uint64_t k = 0; k < *count; ++k) {
        REQUIRE(state_index(states[k], domain) == k);
        REQUIRE(index_state(k, domain) == states[k]);
      }
    }
  }
}

TEST_CASE("domain invariants") {
  CHECK_THROWS_AS(Domain(3, 3, Encoding::binary), InvalidArgument);
  CHECK_THROWS_AS(Domain(0, 2, Encoding::binary), InvalidArgument);
  CHECK_THROWS_AS(Domain(2, 1, Encoding::ordinal), InvalidArgument);
  CHECK(parse_encoding(to_string(Encoding::one_hot)) == Encoding::one_hot);
  CHECK_THROWS_AS(parse_encoding("gray"), InvalidArgument);
}

TEST_CASE("validate_state and hamming_distance") {
  const Domain d(3, 3, Encoding::one_hot);
  CHECK_NOTHROW(validate_state(State{0, 1, 2}, d));
  CHECK_THROWS_AS(validate_state(State{0, 3, 2}, d), InvalidArgument);
  CHECK_THROWS_AS(validate_state(State{0, -1, 2}, d), InvalidArgument);
  CHECK_THROWS_AS(validate_state(State{0, 1}, d), InvalidArgument);
  CHECK(hamming_distance(State{0, 1, 2}, State{0, 2, 2}) == 1);
  CHECK(hamming_distance(State{0, 1, 2}, State{1, 2, 0}) == 3);
}

TEST_CASE("energies are pure") {
  const IsingModel ising(3, 3, 0.3, -0.2);
  const State s{1, 0, 1, 1, 0, 0, 1, 0, 1};
  const double first = ising.energy(s);
  for (int k = 0; k < 10; ++k) CHECK(ising.energy(s) == first);
}
