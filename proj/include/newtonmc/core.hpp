#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace newtonmc {

/// Raised when an argument violates an operation's precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an exact computation would enumerate more states than allowed.
class StateSpaceTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an iterative numerical routine fails to reach its tolerance.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t kDefaultStateCap = std::uint64_t{1} << 20;

enum class Encoding { binary, ordinal, one_hot };

std::string to_string(Encoding encoding);
Encoding parse_encoding(const std::string& text);

/// Factorized domain {0, ..., levels-1}^dim with a uniform level count.
class Domain {
 public:
  Domain(int dim, int levels, Encoding encoding);

  static Domain binary(int dim) { return {dim, 2, Encoding::binary}; }

  int dim() const { return dim_; }
  int levels() const { return levels_; }
  Encoding encoding() const { return encoding_; }

  /// levels^dim, or nullopt if it exceeds `cap`.
  std::optional<std::uint64_t> state_count(std::uint64_t cap = kDefaultStateCap) const;
  /// levels^dim; throws StateSpaceTooLarge above `cap`.
  std::uint64_t checked_state_count(std::uint64_t cap = kDefaultStateCap) const;

  bool operator==(const Domain&) const = default;

 private:
  int dim_;
  int levels_;
  Encoding encoding_;
};

using State = std::vector<int>;

void validate_state(std::span<const int> state, const Domain& domain);

/// Hamming distance between two equal-length states.
int hamming_distance(std::span<const int> a, std::span<const int> b);

/// All states in lexicographic order of the value vector (last coordinate fastest).
std::vector<State> enumerate_states(const Domain& domain,
                                    std::uint64_t cap = kDefaultStateCap);

std::uint64_t state_index(std::span<const int> state, const Domain& domain);
State index_state(std::uint64_t index, const Domain& domain);

/// Energy differences at a state.
///
/// Binary: `values[i] = U(flip_i s) - U(s)`.
/// Ordinal: `values[i] = U(s + e_i) - U(s)`, or `U(s) - U(s - e_i)` when
/// `s_i == levels - 1`.
/// One-hot: row-major dim x levels matrix, `(i, l) = U(s with s_i = l) - U(s)`.
struct FlipDifferences {
  Encoding encoding = Encoding::binary;
  int dim = 0;
  int levels = 2;
  std::vector<double> values;

  double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }
  double at(int i, int level) const {
    return values[static_cast<std::size_t>(i) * levels + level];
  }
};

/// Target quadratic form U(s) = s^T A s + b^T s + offset over binary states.
/// `a` is row-major, symmetric and zero on the diagonal.
struct QuadraticForm {
  int dim = 0;
  std::vector<double> a;
  std::vector<double> b;
  double offset = 0.0;

  double evaluate(std::span<const double> x) const;
};

/// A target pi(s) proportional to exp(U(s)). Implementations must be immutable
/// after construction so evaluations can run concurrently.
class EnergyModel {
 public:
  virtual ~EnergyModel() = default;

  virtual const Domain& domain() const = 0;
  virtual double energy(std::span<const int> state) const = 0;

  /// Defaults to the generic full-evaluation finite differences.
  virtual FlipDifferences differences(std::span<const int> state) const;

  /// U(state with coordinate i set to level) - U(state).
  virtual double coordinate_difference(std::span<const int> state, int i,
                                       int level) const;

  /// Certified quadratic representation, if the energy is second-order modular.
  virtual std::optional<QuadraticForm> quadratic_form() const { return std::nullopt; }
};

}  // namespace newtonmc
