#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "newtonmc/core.hpp"
#include "newtonmc/diagnostics.hpp"
#include "newtonmc/rng.hpp"

namespace newtonmc {

enum class ProposalFamily { newton, locally_balanced, gibbs };

std::string to_string(ProposalFamily family);
ProposalFamily parse_proposal_family(const std::string& text);

struct ProposalSpec {
  ProposalFamily family = ProposalFamily::newton;
  double alpha = 1.0;
  bool mh = true;
  /// Exponential stepsize decay: alpha_t = alpha * decay^t.
  double decay = 1.0;
  /// Locally-balanced only: keep the current state in the neighbourhood.
  bool lb_include_self = false;

  void validate() const;
  double alpha_at(std::uint64_t step) const;
  bool operator==(const ProposalSpec&) const = default;
};

/// Independent per-coordinate categorical tables q_i(v | s); column v is the
/// proposed level of coordinate i.
class ProposalDistribution {
 public:
  ProposalDistribution(int dim, int levels, std::vector<double> log_probs);

  int dim() const { return dim_; }
  int levels() const { return levels_; }
  double log_prob(int i, int level) const {
    return log_probs_[static_cast<std::size_t>(i) * levels_ + level];
  }
  double prob(int i, int level) const;
  /// sum_i log q_i(target_i | s).
  double log_prob(std::span<const int> target) const;
  /// Inverse-CDF draw for each coordinate in order 0..d-1, one uniform each.
  State sample(RngStream& rng) const;

 private:
  int dim_;
  int levels_;
  std::vector<double> log_probs_;
};

/// Newton proposal from precomputed differences at `state`.
///   binary/ordinal: softmax_v( g_i (v - s_i) / 2 - (v - s_i)^2 / (2 alpha) ),
///     g the directional differences;
///   one-hot: softmax_l( D_{i,l} / 2 - [l != s_i] / alpha ).
ProposalDistribution newton_proposal(const FlipDifferences& diffs, std::span<const int> state,
                                     double alpha);
ProposalDistribution newton_proposal(const EnergyModel& model, std::span<const int> state,
                                     double alpha);
/// Same form driven by an arbitrary slope vector (e.g. a gradient) in the
/// "+1 step" convention; binary/ordinal domains only.
ProposalDistribution newton_proposal_from_slopes(const Domain& domain,
                                                 std::span<const double> slopes,
                                                 std::span<const int> state, double alpha);

/// Window-1 locally-balanced proposal with g(t) = sqrt(t): weights
/// exp((U(s') - U(s)) / 2) over single-coordinate changes.
struct LocalMove {
  int coordinate = -1;  // -1 encodes the self move
  int level = 0;
};

class LocallyBalancedProposal {
 public:
  LocallyBalancedProposal(const FlipDifferences& level_diffs, std::span<const int> state,
                          bool include_self);

  const std::vector<LocalMove>& moves() const { return moves_; }
  const std::vector<double>& log_weights() const { return log_weights_; }
  double log_normalizer() const { return log_normalizer_; }
  double prob(std::size_t k) const;
  /// Probability of moving from the base state to `target` (0 if not a neighbour).
  double log_prob_of(std::span<const int> base, std::span<const int> target) const;
  std::size_t sample_index(RngStream& rng) const;

 private:
  std::vector<LocalMove> moves_;
  std::vector<double> log_weights_;
  double log_normalizer_ = 0.0;
};

LocallyBalancedProposal lb_proposal(const EnergyModel& model, std::span<const int> state,
                                    bool include_self = false);

struct StepOutcome {
  State proposed;
  bool accepted = true;
  double acceptance_probability = 1.0;
  int changed_coordinates = 0;
  double forward_logprob = 0.0;
  double reverse_logprob = 0.0;
  double current_energy = 0.0;
  double proposed_energy = 0.0;
  double alpha = 0.0;
  int coordinate = -1;  // gibbs only

  /// U(s') - U(s) + log q(s|s') - log q(s'|s).
  double log_ratio() const {
    return proposed_energy - current_energy + reverse_logprob - forward_logprob;
  }
};

/// Resamples coordinate i from its exact conditional using one uniform.
State gibbs_step(const EnergyModel& model, std::span<const int> state, int coordinate,
                 RngStream& rng);

/// A single sampler chain. Caches the energy and differences of the current
/// state, so rejected or self moves do not recompute them.
class Chain {
 public:
  Chain(const EnergyModel& model, ProposalSpec spec, State initial, RngStream rng);

  StepOutcome step();

  const State& state() const { return point_.state; }
  double energy() const { return point_.energy; }
  std::uint64_t steps_taken() const { return step_; }
  const ProposalSpec& spec() const { return spec_; }
  const RngStream& rng() const { return rng_; }

 private:
  struct Point {
    State state;
    double energy = 0.0;
    FlipDifferences diffs;
  };
  Point make_point(State state) const;

  StepOutcome newton_step(double alpha);
  StepOutcome lb_step();
  StepOutcome gibbs_step_at(int coordinate);

  const EnergyModel& model_;
  ProposalSpec spec_;
  RngStream rng_;
  Point point_;
  std::uint64_t step_ = 0;
};

/// One step from `state` (no caching). For the gibbs family, `step` selects
/// the coordinate (step mod d).
StepOutcome sample_step(const EnergyModel& model, std::span<const int> state,
                        const ProposalSpec& spec, RngStream& rng, std::uint64_t step = 0);

struct RunOptions {
  std::uint64_t steps = 1;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  std::optional<State> initial;  // defaults to all zeros
  std::uint64_t thin = 1;
  bool keep_samples = true;
};

RunTrace run_chain(const EnergyModel& model, const ProposalSpec& spec, const RunOptions& options);

}  // namespace newtonmc
