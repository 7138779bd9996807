#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "newtonmc/core.hpp"
#include "newtonmc/finite_diff.hpp"

namespace newtonmc {

/// Non-periodic 4-neighbour grid; sites are numbered row-major.
class Lattice {
 public:
  Lattice(int height, int width);

  int height() const { return height_; }
  int width() const { return width_; }
  int sites() const { return height_ * width_; }
  const std::vector<int>& neighbors(int site) const { return neighbors_[site]; }
  /// Each undirected edge once, as (u, v) with u < v.
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

 private:
  int height_;
  int width_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<std::pair<int, int>> edges_;
};

/// U(s) = a * sum_{(u,v) in E} x_u x_v + b * sum_u x_u with spins x = 2s - 1.
class IsingModel final : public EnergyModel {
 public:
  IsingModel(int height, int width, double coupling, double bias);

  const Domain& domain() const override { return domain_; }
  double energy(std::span<const int> state) const override;
  FlipDifferences differences(std::span<const int> state) const override;
  double coordinate_difference(std::span<const int> state, int i, int level) const override;
  std::optional<QuadraticForm> quadratic_form() const override;

  const Lattice& lattice() const { return lattice_; }
  double coupling() const { return coupling_; }
  double bias() const { return bias_; }

  /// -2 x_u (a sum_{v ~ u} x_v + b).
  double flip_difference(std::span<const int> state, int site) const;

 private:
  Lattice lattice_;
  Domain domain_;
  double coupling_;
  double bias_;
};

/// U(s) = a * sum_{(u,v) in E} [s_u == s_v] + sum_u bias[s_u].
class PottsModel final : public EnergyModel {
 public:
  PottsModel(int height, int width, double coupling, std::vector<double> bias,
             Encoding encoding = Encoding::one_hot);

  const Domain& domain() const override { return domain_; }
  double energy(std::span<const int> state) const override;
  FlipDifferences differences(std::span<const int> state) const override;
  double coordinate_difference(std::span<const int> state, int i, int level) const override;

  const Lattice& lattice() const { return lattice_; }
  double coupling() const { return coupling_; }
  const std::vector<double>& bias() const { return bias_; }

 private:
  Lattice lattice_;
  Domain domain_;
  double coupling_;
  std::vector<double> bias_;
};

/// Dense row-major real matrix.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}
  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  bool operator==(const Matrix&) const = default;
};

/// Utility matrix CSV: one row per facility, one column per customer.
Matrix load_matrix_csv(const std::filesystem::path& path);
void save_matrix_csv(const Matrix& matrix, const std::filesystem::path& path);

/// f(S) = sum_j max_{i in S} c_ij - penalty * |S|, with the empty max taken as 0.
class FacilityLocationModel final : public EnergyModel {
 public:
  FacilityLocationModel(Matrix utility, double penalty);

  const Domain& domain() const override { return domain_; }
  double energy(std::span<const int> state) const override;
  FlipDifferences differences(std::span<const int> state) const override;
  double coordinate_difference(std::span<const int> state, int i, int level) const override;

  const Matrix& utility() const { return utility_; }
  double penalty() const { return penalty_; }
  int facilities() const { return utility_.rows; }
  int customers() const { return utility_.cols; }

 private:
  Matrix utility_;
  double penalty_;
  Domain domain_;
};

struct MixtureParams {
  std::vector<double> weights{0.5, 0.5};
  std::vector<double> means{0.0, 5.0};
  std::vector<double> stddevs{1.0, 1.0};
};

/// Utility entries drawn i.i.d. from a Gaussian mixture; deterministic in `seed`.
Matrix generate_facility_utilities(int customers, int facilities, const MixtureParams& mixture,
                                   std::uint64_t seed);
FacilityLocationModel generate_facility_instance(int customers, int facilities,
                                                 const MixtureParams& mixture, double penalty,
                                                 std::uint64_t seed);

/// Explicit energy per state, indexed by state_index.
class TableModel final : public EnergyModel {
 public:
  TableModel(Domain domain, std::vector<double> values);
  explicit TableModel(const SetFunctionTable& table);

  const Domain& domain() const override { return domain_; }
  double energy(std::span<const int> state) const override;
  const std::vector<double>& values() const { return values_; }

 private:
  Domain domain_;
  std::vector<double> values_;
};

/// Table with i.i.d. N(0, scale^2) energies.
TableModel random_table_model(const Domain& domain, std::uint64_t seed, double scale = 1.0);

/// Binary energy s^T A s + b^T s + offset. Construction folds the diagonal of A
/// into b and symmetrizes, so the stored form is the multilinear one.
class QuadraticModel final : public EnergyModel {
 public:
  explicit QuadraticModel(QuadraticForm form);

  const Domain& domain() const override { return domain_; }
  double energy(std::span<const int> state) const override;
  FlipDifferences differences(std::span<const int> state) const override;
  std::optional<QuadraticForm> quadratic_form() const override { return form_; }

  /// Gradient 2 A x + b of the quadratic.
  std::vector<double> gradient(std::span<const double> x) const;

 private:
  QuadraticForm form_;
  Domain domain_;
};

/// Gradient 2 A x + b of a (symmetric) quadratic form.
std::vector<double> quadratic_gradient(const QuadraticForm& form, std::span<const double> x);

}  // namespace newtonmc
