#include "newtonmc/exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "newtonmc/finite_diff.hpp"
#include "newtonmc/proposals.hpp"

namespace newtonmc {

namespace {

// All states as one flat row-major array.
struct StateGrid {
  int dim = 0;
  Eigen::Index count = 0;
  std::vector<int> flat;

  std::span<const int> operator[](Eigen::Index k) const {
    return std::span<const int>(flat).subspan(static_cast<std::size_t>(k) * dim,
                                              static_cast<std::size_t>(dim));
  }
};

StateGrid grid_for(const Domain& domain, std::uint64_t cap) {
  StateGrid grid;
  grid.dim = domain.dim();
  grid.count = static_cast<Eigen::Index>(domain.checked_state_count(cap));
  grid.flat.reserve(static_cast<std::size_t>(grid.count) * grid.dim);
  for (Eigen::Index k = 0; k < grid.count; ++k) {
    const State s = index_state(static_cast<std::uint64_t>(k), domain);
    grid.flat.insert(grid.flat.end(), s.begin(), s.end());
  }
  return grid;
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("stepsize alpha must be positive");
}

// Rows of exp(logits) normalised with a per-row shift.
void exponentiate_rows(Eigen::MatrixXd& logits) {
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double peak = logits.row(r).maxCoeff();
    logits.row(r) = (logits.row(r).array() - peak).exp();
    logits.row(r) /= logits.row(r).sum();
  }
}

Eigen::VectorXd normalized_exp(std::span<const double> log_weights) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(log_weights.size()));
  const double peak = *std::max_element(log_weights.begin(), log_weights.end());
  for (std::size_t k = 0; k < log_weights.size(); ++k)
    out[static_cast<Eigen::Index>(k)] = std::exp(log_weights[k] - peak);
  return out / out.sum();
}

Eigen::MatrixXd symmetric_a(const QuadraticForm& form) {
  const int d = form.dim;
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      a(i, j) = 0.5 * (form.a[static_cast<std::size_t>(i) * d + j] +
                       form.a[static_cast<std::size_t>(j) * d + i]);
  return a;
}

// s^T A s + b^T s without the offset, diagonal of A folded into b.
double offset_free_quadratic(const QuadraticForm& form, std::span<const int> s) {
  const int d = form.dim;
  double total = 0.0;
  for (int i = 0; i < d; ++i) {
    if (!s[i]) continue;
    total += form.b[i];
    for (int j = 0; j < d; ++j)
      if (s[j]) total += form.a[static_cast<std::size_t>(i) * d + j];
  }
  return total;
}

// Slopes used by the Newton linear term at every state.
std::vector<FlipDifferences> newton_slopes(const EnergyModel& model, const StateGrid& grid) {
  std::vector<FlipDifferences> out;
  out.reserve(static_cast<std::size_t>(grid.count));
  const bool one_hot = model.domain().encoding() == Encoding::one_hot;
  for (Eigen::Index k = 0; k < grid.count; ++k)
    out.push_back(one_hot ? level_differences(model, grid[k]) : forward_difference(model, grid[k]));
  return out;
}

}  // namespace

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::una_proposal:
      return "una-proposal";
    case KernelKind::mana:
      return "mana";
    case KernelKind::lb_mh:
      return "lb-mh";
    case KernelKind::q0_mh:
      return "q0-mh";
  }
  return "unknown";
}

std::vector<double> log_target(const EnergyModel& model, std::uint64_t cap) {
  return energy_table(model, cap);
}

Eigen::VectorXd target_distribution(const EnergyModel& model, std::uint64_t cap) {
  return normalized_exp(log_target(model, cap));
}

DenseKernel build_una_kernel(const EnergyModel& model, double alpha, std::uint64_t cap) {
  require_alpha(alpha);
  const Domain& domain = model.domain();
  const StateGrid grid = grid_for(domain, cap);
  Eigen::MatrixXd kernel(grid.count, grid.count);
  for (Eigen::Index r = 0; r < grid.count; ++r) {
    const auto q = newton_proposal(model, grid[r], alpha);
    for (Eigen::Index c = 0; c < grid.count; ++c) kernel(r, c) = std::exp(q.log_prob(grid[c]));
  }
  return {std::move(kernel), KernelKind::una_proposal};
}

Eigen::MatrixXd q0_proposal(const EnergyModel& model, double alpha, std::uint64_t cap) {
  require_alpha(alpha);
  const Domain& domain = model.domain();
  const StateGrid grid = grid_for(domain, cap);
  const auto u = log_target(model, cap);
  Eigen::MatrixXd logits(grid.count, grid.count);
  for (Eigen::Index r = 0; r < grid.count; ++r)
    for (Eigen::Index c = 0; c < grid.count; ++c)
      logits(r, c) = 0.5 * (u[c] - u[r]) -
                     embedded_squared_distance(domain.encoding(), grid[r], grid[c]) / (2.0 * alpha);
  exponentiate_rows(logits);
  return logits;
}

Eigen::MatrixXd lb_proposal_matrix(const EnergyModel& model, bool include_self,
                                   std::uint64_t cap) {
  const Domain& domain = model.domain();
  const StateGrid grid = grid_for(domain, cap);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(grid.count, grid.count);
  for (Eigen::Index r = 0; r < grid.count; ++r) {
    const auto lb = lb_proposal(model, grid[r], include_self);
    State target(grid[r].begin(), grid[r].end());
    for (std::size_t k = 0; k < lb.moves().size(); ++k) {
      const auto& move = lb.moves()[k];
      if (move.coordinate < 0) {
        out(r, r) += lb.prob(k);
        continue;
      }
      const int previous = target[move.coordinate];
      target[move.coordinate] = move.level;
      out(r, static_cast<Eigen::Index>(state_index(target, domain))) += lb.prob(k);
      target[move.coordinate] = previous;
    }
  }
  return out;
}

DenseKernel build_mh_kernel(const Eigen::MatrixXd& proposal, std::span<const double> log_target,
                            KernelKind kind) {
  const Eigen::Index n = proposal.rows();
  if (proposal.cols() != n || static_cast<Eigen::Index>(log_target.size()) != n)
    throw InvalidArgument("MH kernel: proposal and target sizes disagree");
  Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    double moved = 0.0;
    for (Eigen::Index c = 0; c < n; ++c) {
      if (c == r || proposal(r, c) <= 0.0) continue;
      // q_rc min(1, pi_c q_cr / (pi_r q_rc)) = min(q_rc, pi_c / pi_r q_cr)
      const double reverse = std::exp(log_target[c] - log_target[r]) * proposal(c, r);
      kernel(r, c) = std::min(proposal(r, c), reverse);
      moved += kernel(r, c);
    }
    kernel(r, r) = std::max(0.0, 1.0 - moved);
  }
  return {std::move(kernel), kind};
}

DenseKernel build_mana_kernel(const EnergyModel& model, double alpha, std::uint64_t cap) {
  const auto una = build_una_kernel(model, alpha, cap);
  return build_mh_kernel(una.matrix, log_target(model, cap), KernelKind::mana);
}

DenseKernel build_lb_kernel(const EnergyModel& model, bool include_self, std::uint64_t cap) {
  return build_mh_kernel(lb_proposal_matrix(model, include_self, cap), log_target(model, cap),
                         KernelKind::lb_mh);
}

DenseKernel build_q0_kernel(const EnergyModel& model, double alpha, std::uint64_t cap) {
  return build_mh_kernel(q0_proposal(model, alpha, cap), log_target(model, cap),
                         KernelKind::q0_mh);
}

double stochasticity_residual(const Eigen::MatrixXd& kernel) {
  if ((kernel.array() < 0.0).any()) return std::numeric_limits<double>::infinity();
  return (kernel.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& kernel, double tolerance,
                                        int max_iterations) {
  const Eigen::Index n = kernel.rows();
  if (n == 0 || kernel.cols() != n) throw InvalidArgument("stationary_distribution needs a square kernel");
  if (stochasticity_residual(kernel) > 1e-8) throw InvalidArgument("kernel is not row-stochastic");

  // Grassmann-Taylor-Heyman elimination: subtraction-free, so accurate even
  // when the chain mixes very slowly.
  Eigen::MatrixXd a = kernel;
  for (Eigen::Index k = n - 1; k > 0; --k) {
    const double s = a.row(k).head(k).sum();
    if (!(s > 0.0)) throw NumericalError("kernel is reducible; stationary law is not unique");
    a.col(k).head(k) /= s;
    a.topLeftCorner(k, k).noalias() += a.col(k).head(k) * a.row(k).head(k);
  }
  Eigen::VectorXd pi(n);
  pi[0] = 1.0;
  for (Eigen::Index k = 1; k < n; ++k) pi[k] = pi.head(k).dot(a.col(k).head(k));
  pi /= pi.sum();

  const Eigen::MatrixXd kt = kernel.transpose();
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd next = kt * pi;
    next /= next.sum();
    const double residual = (next - pi).lpNorm<1>();
    pi = std::move(next);
    if (residual <= tolerance) return pi;
  }
  throw NumericalError("stationary distribution did not reach residual " + std::to_string(tolerance));
}

double detailed_balance_residual(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& pi) {
  const Eigen::MatrixXd flow = pi.asDiagonal() * kernel;
  return (flow - flow.transpose()).cwiseAbs().maxCoeff();
}

Eigen::VectorXd una_stationary_closed_form(const QuadraticForm& form, double alpha) {
  require_alpha(alpha);
  const Domain domain = Domain::binary(form.dim);
  const StateGrid grid = grid_for(domain, kSpectralStateCap);
  const Eigen::MatrixXd a = symmetric_a(form);
  const Eigen::MatrixXd metric =
      Eigen::MatrixXd::Identity(form.dim, form.dim) / (2.0 * alpha) + a / 2.0;
  std::vector<double> f(static_cast<std::size_t>(grid.count));
  for (Eigen::Index k = 0; k < grid.count; ++k) f[k] = offset_free_quadratic(form, grid[k]);

  // log(Z_alpha(s) pi(s)) up to a constant.
  std::vector<double> log_weight(static_cast<std::size_t>(grid.count));
  Eigen::VectorXd delta(form.dim);
  std::vector<double> terms(static_cast<std::size_t>(grid.count));
  for (Eigen::Index s = 0; s < grid.count; ++s) {
    for (Eigen::Index x = 0; x < grid.count; ++x) {
      for (int i = 0; i < form.dim; ++i) delta[i] = grid[x][i] - grid[s][i];
      terms[x] = 0.5 * (f[x] - f[s]) - delta.dot(metric * delta);
    }
    const double peak = *std::max_element(terms.begin(), terms.end());
    double total = 0.0;
    for (double t : terms) total += std::exp(t - peak);
    log_weight[s] = peak + std::log(total) + f[s];
  }
  return normalized_exp(log_weight);
}

double min_eigenvalue(const QuadraticForm& form) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric_a(form), Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

std::vector<TheoremOneReport> verify_theorem_one(const EnergyModel& model,
                                                 std::span<const double> alphas,
                                                 const KernelHook& hook, std::uint64_t cap) {
  const auto form = model.quadratic_form();
  if (!form) throw InvalidArgument("theorem one needs a model with a certified quadratic form");
  if (model.domain().encoding() != Encoding::binary)
    throw InvalidArgument("theorem one applies to binary domains");
  const Domain& domain = model.domain();
  const StateGrid grid = grid_for(domain, cap);

  const Eigen::VectorXd pi = target_distribution(model, cap);
  const double lambda_min = min_eigenvalue(*form);
  double z = 0.0;
  for (Eigen::Index k = 0; k < grid.count; ++k) z += std::exp(offset_free_quadratic(*form, grid[k]));

  std::vector<TheoremOneReport> reports;
  for (double alpha : alphas) {
    TheoremOneReport report;
    report.alpha = alpha;
    report.lambda_min = lambda_min;
    report.partition_function = z;
    auto kernel = build_una_kernel(model, alpha, cap).matrix;
    if (hook) hook(kernel);
    const Eigen::VectorXd pi_alpha = stationary_distribution(kernel);
    const Eigen::VectorXd closed = una_stationary_closed_form(*form, alpha);
    report.l1_distance = (pi_alpha - pi).lpNorm<1>();
    report.max_pointwise_difference = (pi_alpha - pi).lpNorm<Eigen::Infinity>();
    report.bound = z * std::exp(-1.0 / (2.0 * alpha) - lambda_min / 2.0);
    report.reversibility_residual = detailed_balance_residual(kernel, closed);
    report.closed_form_error = (pi_alpha - closed).lpNorm<Eigen::Infinity>();
    reports.push_back(report);
  }
  return reports;
}

LipschitzReport lipschitz_constant(const EnergyModel& model, std::uint64_t cap) {
  const Domain& domain = model.domain();
  const StateGrid grid = grid_for(domain, cap);
  const auto u = log_target(model, cap);
  const auto slopes = newton_slopes(model, grid);
  LipschitzReport report;
  double max_sq = 0.0;
  for (Eigen::Index r = 0; r < grid.count; ++r) {
    for (Eigen::Index c = 0; c < grid.count; ++c) {
      if (r == c) continue;
      const double sq = embedded_squared_distance(domain.encoding(), grid[r], grid[c]);
      max_sq = std::max(max_sq, sq);
      const double approx = newton_linear_term(slopes[r], grid[r], grid[c]);
      report.lipschitz = std::max(report.lipschitz, 2.0 * std::abs(approx - (u[c] - u[r])) / sq);
    }
  }
  report.diameter = std::sqrt(max_sq);
  return report;
}

Eigen::VectorXd reversible_spectrum(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& pi,
                                    double reversibility_tolerance) {
  if (kernel.rows() != pi.size()) throw InvalidArgument("spectrum: kernel and pi sizes disagree");
  if ((pi.array() <= 0.0).any()) throw NumericalError("spectrum needs a strictly positive pi");
  if (detailed_balance_residual(kernel, pi) > reversibility_tolerance)
    throw NumericalError("kernel is not reversible with respect to pi");
  const Eigen::VectorXd root = pi.cwiseSqrt();
  Eigen::MatrixXd sym = root.asDiagonal() * kernel * root.cwiseInverse().asDiagonal();
  sym = 0.5 * (sym + sym.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().reverse();
}

double spectral_gap(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& pi) {
  if (kernel.rows() < 2) return 0.0;
  const Eigen::VectorXd values = reversible_spectrum(kernel, pi);
  return 1.0 - values[1];
}

double spectral_gap(const Eigen::MatrixXd& kernel) {
  const Eigen::Index n = kernel.rows();
  // Symmetric kernels are reversible w.r.t. uniform, which also covers
  // reducible cases such as the identity.
  if ((kernel - kernel.transpose()).cwiseAbs().maxCoeff() <= 1e-14)
    return spectral_gap(kernel, Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
  return spectral_gap(kernel, stationary_distribution(kernel));
}

double stationary_variance(const Eigen::VectorXd& pi, const Eigen::VectorXd& h) {
  const double mean = pi.dot(h);
  return pi.dot((h.array() - mean).square().matrix());
}

double asymptotic_variance(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& pi,
                           const Eigen::VectorXd& h) {
  if (h.size() != pi.size()) throw InvalidArgument("asymptotic_variance: h has the wrong length");
  if (detailed_balance_residual(kernel, pi) > 1e-9)
    throw NumericalError("kernel is not reversible with respect to pi");
  const Eigen::VectorXd root = pi.cwiseSqrt();
  Eigen::MatrixXd sym = root.asDiagonal() * kernel * root.cwiseInverse().asDiagonal();
  sym = 0.5 * (sym + sym.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  const Eigen::VectorXd centered = h.array() - pi.dot(h);
  const Eigen::VectorXd weighted = root.cwiseProduct(centered);
  const Eigen::VectorXd coefficients = solver.eigenvectors().transpose() * weighted;
  const Eigen::VectorXd& values = solver.eigenvalues();
  const double scale = std::max(1e-300, weighted.squaredNorm());

  // The top eigenvector is sqrt(pi), orthogonal to the centred h.
  double total = 0.0;
  for (Eigen::Index i = 0; i + 1 < values.size(); ++i) {
    const double weight = coefficients[i] * coefficients[i];
    if (values[i] >= 1.0 - 1e-12) {
      if (weight > 1e-20 * scale) throw NumericalError("asymptotic variance diverges: eigenvalue at 1");
      continue;
    }
    total += (1.0 + values[i]) / (1.0 - values[i]) * weight;
  }
  return total;
}

Eigen::VectorXd tabulate(const Domain& domain, const StateFunction& h, std::uint64_t cap) {
  const StateGrid grid = grid_for(domain, cap);
  Eigen::VectorXd out(grid.count);
  for (Eigen::Index k = 0; k < grid.count; ++k) out[k] = h(grid[k]);
  return out;
}

double hamming_weight(std::span<const int> state) {
  double total = 0.0;
  for (int v : state) total += v;
  return total;
}

TheoremTwoReport verify_theorem_two(const EnergyModel& model, double alpha, const StateFunction& h,
                                    std::uint64_t cap) {
  require_alpha(alpha);
  TheoremTwoReport report;
  report.alpha = alpha;
  const auto lip = lipschitz_constant(model, cap);
  report.lipschitz_L = lip.lipschitz;
  report.diameter_D = lip.diameter;
  report.c = std::exp(-0.5 * lip.lipschitz * lip.diameter * lip.diameter);

  const Eigen::VectorXd pi = target_distribution(model, cap);
  const auto q = build_q0_kernel(model, alpha, cap).matrix;
  const auto qt = build_mana_kernel(model, alpha, cap).matrix;
  const Eigen::VectorXd hv = tabulate(model.domain(), h, cap);

  report.gap_q = spectral_gap(q, pi);
  report.gap_qtilde = spectral_gap(qt, pi);
  report.var_pi = stationary_variance(pi, hv);
  report.var_q = asymptotic_variance(q, pi, hv);
  report.var_qtilde = asymptotic_variance(qt, pi, hv);
  report.variance_bound = report.var_q / report.c + (1.0 - report.c) / report.c * report.var_pi;

  report.min_kernel_ratio = std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < q.rows(); ++r)
    for (Eigen::Index c = 0; c < q.cols(); ++c)
      if (r != c && q(r, c) > 0.0) report.min_kernel_ratio = std::min(report.min_kernel_ratio, qt(r, c) / q(r, c));

  const double slack = 1e-9;
  report.gap_check = report.gap_qtilde >= report.c * report.gap_q - slack;
  report.asymvar_ratio_check =
      report.var_qtilde <= report.variance_bound + slack * std::max(1.0, report.variance_bound);
  return report;
}

}  // namespace newtonmc
