#include "newtonmc/core.hpp"

#include <cstdlib>
#include <limits>

#include "newtonmc/finite_diff.hpp"

namespace newtonmc {

std::string to_string(Encoding encoding) {
  switch (encoding) {
    case Encoding::binary:
      return "binary";
    case Encoding::ordinal:
      return "ordinal";
    case Encoding::one_hot:
      return "one-hot";
  }
  return "unknown";
}

Encoding parse_encoding(const std::string& text) {
  if (text == "binary") return Encoding::binary;
  if (text == "ordinal") return Encoding::ordinal;
  if (text == "one-hot" || text == "one_hot") return Encoding::one_hot;
  throw InvalidArgument("unknown encoding '" + text + "'");
}

Domain::Domain(int dim, int levels, Encoding encoding)
    : dim_(dim), levels_(levels), encoding_(encoding) {
  if (dim < 1) throw InvalidArgument("domain dimension must be positive");
  if (levels < 2) throw InvalidArgument("domain needs at least two levels");
  if (encoding == Encoding::binary && levels != 2)
    throw InvalidArgument("binary encoding requires exactly two levels");
}

std::optional<std::uint64_t> Domain::state_count(std::uint64_t cap) const {
  std::uint64_t count = 1;
  const auto levels = static_cast<std::uint64_t>(levels_);
  for (int i = 0; i < dim_; ++i) {
    if (count > cap / levels) return std::nullopt;
    count *= levels;
  }
  if (count > cap) return std::nullopt;
  return count;
}

std::uint64_t Domain::checked_state_count(std::uint64_t cap) const {
  auto count = state_count(cap);
  if (!count) {
    throw StateSpaceTooLarge("state space too large: " + std::to_string(levels_) +
                             "^" + std::to_string(dim_) + " exceeds cap " +
                             std::to_string(cap));
  }
  return *count;
}

void validate_state(std::span<const int> state, const Domain& domain) {
  if (static_cast<int>(state.size()) != domain.dim())
    throw InvalidArgument("state length " + std::to_string(state.size()) +
                          " does not match dimension " + std::to_string(domain.dim()));
  for (int v : state) {
    if (v < 0 || v >= domain.levels())
      throw InvalidArgument("state entry " + std::to_string(v) + " outside [0, " +
                            std::to_string(domain.levels() - 1) + "]");
  }
}

int hamming_distance(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw InvalidArgument("hamming_distance: length mismatch");
  int count = 0;
  for (std::size_t i = 0; i < a.size(); ++i) count += a[i] != b[i];
  return count;
}

std::vector<State> enumerate_states(const Domain& domain, std::uint64_t cap) {
  const auto count = domain.checked_state_count(cap);
  std::vector<State> states;
  states.reserve(count);
  State current(static_cast<std::size_t>(domain.dim()), 0);
  for (std::uint64_t k = 0; k < count; ++k) {
    states.push_back(current);
    for (int i = domain.dim() - 1; i >= 0; --i) {
      if (++current[i] < domain.levels()) break;
      current[i] = 0;
    }
  }
  return states;
}

std::uint64_t state_index(std::span<const int> state, const Domain& domain) {
  validate_state(state, domain);
  domain.checked_state_count(std::numeric_limits<std::uint64_t>::max());
  std::uint64_t index = 0;
  for (int v : state) index = index * domain.levels() + static_cast<std::uint64_t>(v);
  return index;
}

State index_state(std::uint64_t index, const Domain& domain) {
  const auto count = domain.checked_state_count(std::numeric_limits<std::uint64_t>::max());
  if (index >= count)
    throw InvalidArgument("state index " + std::to_string(index) + " out of range [0, " +
                          std::to_string(count) + ")");
  State state(static_cast<std::size_t>(domain.dim()));
  const auto levels = static_cast<std::uint64_t>(domain.levels());
  for (int i = domain.dim() - 1; i >= 0; --i) {
    state[i] = static_cast<int>(index % levels);
    index /= levels;
  }
  return state;
}

double QuadraticForm::evaluate(std::span<const double> x) const {
  double value = offset;
  for (int i = 0; i < dim; ++i) {
    double row = 0.0;
    for (int j = 0; j < dim; ++j) row += a[static_cast<std::size_t>(i) * dim + j] * x[j];
    value += x[i] * row + b[i] * x[i];
  }
  return value;
}

FlipDifferences EnergyModel::differences(std::span<const int> state) const {
  return generic_forward_difference(*this, state);
}

double EnergyModel::coordinate_difference(std::span<const int> state, int i,
                                          int level) const {
  State modified(state.begin(), state.end());
  modified[i] = level;
  return energy(modified) - energy(state);
}

}  // namespace newtonmc
