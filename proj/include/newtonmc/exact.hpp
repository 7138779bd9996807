#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "newtonmc/core.hpp"

namespace newtonmc {

/// Spectral routines are dense; above this many states they refuse to run.
inline constexpr std::uint64_t kSpectralStateCap = std::uint64_t{1} << 12;

enum class KernelKind { una_proposal, mana, lb_mh, q0_mh };

std::string to_string(KernelKind kind);

/// Row-stochastic transition matrix over the lexicographically enumerated
/// state space; entry (r, c) is the probability of moving from state r to c.
struct DenseKernel {
  Eigen::MatrixXd matrix;
  KernelKind kind = KernelKind::una_proposal;

  Eigen::Index size() const { return matrix.rows(); }
};

/// Unnormalised log-target U over all states.
std::vector<double> log_target(const EnergyModel& model, std::uint64_t cap = kSpectralStateCap);
/// Normalised pi over all states.
Eigen::VectorXd target_distribution(const EnergyModel& model,
                                    std::uint64_t cap = kSpectralStateCap);

/// Newton proposal joint q(s'|s), as the product of the per-coordinate rows.
DenseKernel build_una_kernel(const EnergyModel& model, double alpha,
                             std::uint64_t cap = kSpectralStateCap);

/// Full-space informed proposal q0(s'|s) ~ exp((U(s') - U(s)) / 2 - |s' - s|^2 / (2 alpha)).
Eigen::MatrixXd q0_proposal(const EnergyModel& model, double alpha,
                            std::uint64_t cap = kSpectralStateCap);

/// Window-1 locally-balanced proposal (self excluded unless requested).
Eigen::MatrixXd lb_proposal_matrix(const EnergyModel& model, bool include_self = false,
                                   std::uint64_t cap = kSpectralStateCap);

/// Metropolis-Hastings kernel for `proposal` targeting exp(log_target);
/// rejected mass lands on the diagonal.
DenseKernel build_mh_kernel(const Eigen::MatrixXd& proposal, std::span<const double> log_target,
                            KernelKind kind = KernelKind::mana);

DenseKernel build_mana_kernel(const EnergyModel& model, double alpha,
                              std::uint64_t cap = kSpectralStateCap);
DenseKernel build_lb_kernel(const EnergyModel& model, bool include_self = false,
                            std::uint64_t cap = kSpectralStateCap);
DenseKernel build_q0_kernel(const EnergyModel& model, double alpha,
                            std::uint64_t cap = kSpectralStateCap);

/// Largest |row sum - 1|, or infinity if any entry is negative.
double stochasticity_residual(const Eigen::MatrixXd& kernel);

/// Stationary vector of an irreducible kernel. Direct elimination followed by
/// power-iteration polishing until |pi K - pi|_1 <= tolerance.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& kernel, double tolerance = 1e-12,
                                        int max_iterations = 100000);

/// max_{r,c} |pi_r K_rc - pi_c K_cr|.
double detailed_balance_residual(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& pi);

/// Closed-form UNA stationary law for a binary quadratic target:
/// pi_alpha(s) ~ Z_alpha(s) pi(s), with
/// Z_alpha(s) = sum_x exp((F(x) - F(s)) / 2 - (x - s)^T (I / (2 alpha) + A / 2) (x - s)).
Eigen::VectorXd una_stationary_closed_form(const QuadraticForm& form, double alpha);

/// Smallest eigenvalue of (A + A^T) / 2.
double min_eigenvalue(const QuadraticForm& form);

struct TheoremOneReport {
  double alpha = 0.0;
  double l1_distance = 0.0;
  double bound = 0.0;
  double lambda_min = 0.0;
  double partition_function = 0.0;
  double reversibility_residual = 0.0;
  double max_pointwise_difference = 0.0;
  /// |pi_alpha(kernel) - pi_alpha(closed form)|_inf.
  double closed_form_error = 0.0;

  bool holds(double tolerance = 1e-9) const { return l1_distance <= bound + tolerance; }
};

using KernelHook = std::function<void(Eigen::MatrixXd&)>;

/// Requires a quadratic-certified binary model within the spectral cap.
/// `hook`, when set, edits each UNA kernel before its stationary law is taken.
std::vector<TheoremOneReport> verify_theorem_one(const EnergyModel& model,
                                                 std::span<const double> alphas,
                                                 const KernelHook& hook = {},
                                                 std::uint64_t cap = kSpectralStateCap);

struct LipschitzReport {
  double lipschitz = 0.0;  // L
  double diameter = 0.0;   // D
};

/// L = max over ordered pairs of 2|D~(s', s) - D(s', s)| / |s' - s|^2 and
/// D = max pairwise distance, both in the encoding's embedded metric.
LipschitzReport lipschitz_constant(const EnergyModel& model,
                                   std::uint64_t cap = kSpectralStateCap);

/// Eigenvalues of D^{1/2} K D^{-1/2}, descending. Throws NumericalError if
/// K is not reversible with respect to pi.
Eigen::VectorXd reversible_spectrum(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& pi,
                                    double reversibility_tolerance = 1e-9);

/// 1 - lambda_2 of the pi-symmetrised kernel.
double spectral_gap(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& pi);
double spectral_gap(const Eigen::MatrixXd& kernel);

/// sum_{i>=2} (1 + l_i) / (1 - l_i) <h - E h, f_i>_pi^2.
double asymptotic_variance(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& pi,
                           const Eigen::VectorXd& h);
double stationary_variance(const Eigen::VectorXd& pi, const Eigen::VectorXd& h);

using StateFunction = std::function<double(std::span<const int>)>;

/// h evaluated on every state in enumeration order.
Eigen::VectorXd tabulate(const Domain& domain, const StateFunction& h,
                         std::uint64_t cap = kSpectralStateCap);

struct TheoremTwoReport {
  double alpha = 0.0;
  double lipschitz_L = 0.0;
  double diameter_D = 0.0;
  double c = 0.0;
  double gap_q = 0.0;
  double gap_qtilde = 0.0;
  double var_q = 0.0;
  double var_qtilde = 0.0;
  double var_pi = 0.0;
  double variance_bound = 0.0;
  /// min over off-diagonal pairs with Q > 0 of Q~ / Q.
  double min_kernel_ratio = 0.0;
  bool gap_check = false;
  bool asymvar_ratio_check = false;

  bool holds() const { return gap_check && asymvar_ratio_check; }
};

TheoremTwoReport verify_theorem_two(const EnergyModel& model, double alpha,
                                    const StateFunction& h,
                                    std::uint64_t cap = kSpectralStateCap);

/// Sum of the state's coordinates; the default test function.
double hamming_weight(std::span<const int> state);

}  // namespace newtonmc
