#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "newtonmc/core.hpp"

namespace newtonmc {

/// Finite differences by full energy evaluation: d evaluations for
/// binary/ordinal encodings, d*L for one-hot.
FlipDifferences generic_forward_difference(const EnergyModel& model,
                                           std::span<const int> state);

/// Validates the state and dispatches to the model (which may be incremental).
FlipDifferences forward_difference(const EnergyModel& model, std::span<const int> state);

/// The difference vector in the "+1 step" convention used by the Newton
/// expansion: binary entries are (1 - 2 s_i) * flip difference, ordinal entries
/// are returned as stored. Undefined for one-hot.
std::vector<double> directional_differences(const FlipDifferences& diffs,
                                            std::span<const int> state);

/// dim x levels matrix of U(s with s_i = l) - U(s) for any encoding.
FlipDifferences level_differences(const EnergyModel& model, std::span<const int> state);

/// First-order Newton estimate of U(to) - U(from), built from differences at `from`.
double newton_linear_term(const FlipDifferences& diffs_at_from, std::span<const int> from,
                          std::span<const int> to);

/// Squared distance between states under the encoding's embedding: integer
/// Euclidean for binary/ordinal, one-hot Euclidean (2 per changed coordinate).
double embedded_squared_distance(Encoding encoding, std::span<const int> a,
                                 std::span<const int> b);

/// Explicit set function over the subsets of {0, ..., dim-1}. Entries are
/// indexed lexicographically by indicator vector, matching state_index.
class SetFunctionTable {
 public:
  static constexpr int kMaxDim = 20;

  SetFunctionTable(int dim, std::vector<double> values);

  static SetFunctionTable from_model(const EnergyModel& model);
  /// Text format: one line per subset, "<bitstring> <value>".
  static SetFunctionTable load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  int dim() const { return dim_; }
  std::span<const double> values() const { return values_; }
  double operator()(std::span<const int> indicator) const;

 private:
  int dim_;
  std::vector<double> values_;
};

/// sum_S f(S) prod_{i in S} x_i prod_{i not in S} (1 - x_i).
double multilinear_extension(const SetFunctionTable& f, std::span<const double> x);

/// dF/dx_i = F(x with x_i = 1) - F(x with x_i = 0).
std::vector<double> multilinear_gradient(const SetFunctionTable& f,
                                         std::span<const double> x);

/// Per-coordinate categorical marginals; row i holds P(level 1..L-1), level 0
/// takes the remaining mass.
class MarginalVector {
 public:
  MarginalVector(int dim, int levels, std::vector<double> rho);

  /// Degenerate marginals placing all mass on `state`.
  static MarginalVector vertex(std::span<const int> state, int levels);

  int dim() const { return dim_; }
  int levels() const { return levels_; }
  double operator()(int i, int level) const {
    return rho_[static_cast<std::size_t>(i) * (levels_ - 1) + (level - 1)];
  }
  /// Probability of `level` (including level 0) for coordinate i.
  double probability(int i, int level) const;
  void set_row(int i, std::span<const double> row);

 private:
  int dim_;
  int levels_;
  std::vector<double> rho_;
};

/// E_{s ~ rho}[f(s)] by exact summation over all L^d outcomes. `values` holds f
/// at every state of `domain` in enumeration order.
double generalized_multilinear_extension(const Domain& domain, std::span<const double> values,
                                         const MarginalVector& rho);
double generalized_multilinear_extension(const EnergyModel& model, const MarginalVector& rho,
                                         std::uint64_t cap = kDefaultStateCap);

/// dF/drho_{ij} = F(rho_i = e_j) - F(rho_i = 0), for 1 <= j <= L-1.
double generalized_partial_derivative(const Domain& domain, std::span<const double> values,
                                      const MarginalVector& rho, int i, int j);
double generalized_partial_derivative(const EnergyModel& model, const MarginalVector& rho,
                                      int i, int j, std::uint64_t cap = kDefaultStateCap);

/// f evaluated at every state in enumeration order.
std::vector<double> energy_table(const EnergyModel& model, std::uint64_t cap = kDefaultStateCap);

}  // namespace newtonmc
