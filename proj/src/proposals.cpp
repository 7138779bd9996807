#include "newtonmc/proposals.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "newtonmc/finite_diff.hpp"

namespace newtonmc {

namespace {

// In-place log-softmax over a row.
void log_normalize(std::span<double> row) {
  const double peak = *std::max_element(row.begin(), row.end());
  double total = 0.0;
  for (double v : row) total += std::exp(v - peak);
  const double log_z = peak + std::log(total);
  for (double& v : row) v -= log_z;
}

double log_sum_exp(std::span<const double> values) {
  const double peak = *std::max_element(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += std::exp(v - peak);
  return peak + std::log(total);
}

// Inverse CDF in increasing index order; falls back to the last index with
// positive mass if rounding leaves u above the final cumulative sum.
template <typename Prob>
std::size_t inverse_cdf(std::size_t count, double u, Prob prob) {
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double p = prob(k);
    if (p > 0.0) last_positive = k;
    cumulative += p;
    if (u < cumulative) return k;
  }
  return last_positive;
}

}  // namespace

std::string to_string(ProposalFamily family) {
  switch (family) {
    case ProposalFamily::newton:
      return "newton";
    case ProposalFamily::locally_balanced:
      return "locally-balanced";
    case ProposalFamily::gibbs:
      return "gibbs";
  }
  return "unknown";
}

ProposalFamily parse_proposal_family(const std::string& text) {
  if (text == "newton") return ProposalFamily::newton;
  if (text == "locally-balanced" || text == "lb") return ProposalFamily::locally_balanced;
  if (text == "gibbs") return ProposalFamily::gibbs;
  throw InvalidArgument("unknown proposal family '" + text + "'");
}

void ProposalSpec::validate() const {
  if (family == ProposalFamily::gibbs) return;  // exact conditional draws
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("stepsize alpha must be positive");
  if (!(decay > 0.0 && decay <= 1.0)) throw InvalidArgument("decay must lie in (0, 1]");
}

double ProposalSpec::alpha_at(std::uint64_t step) const {
  if (decay == 1.0) return alpha;
  return alpha * std::pow(decay, static_cast<double>(step));
}

// ---------------------------------------------------------------------------

ProposalDistribution::ProposalDistribution(int dim, int levels, std::vector<double> log_probs)
    : dim_(dim), levels_(levels), log_probs_(std::move(log_probs)) {
  if (log_probs_.size() != static_cast<std::size_t>(dim) * levels)
    throw InvalidArgument("proposal table must be dim x levels");
}

double ProposalDistribution::prob(int i, int level) const { return std::exp(log_prob(i, level)); }

double ProposalDistribution::log_prob(std::span<const int> target) const {
  double total = 0.0;
  for (int i = 0; i < dim_; ++i) total += log_prob(i, target[i]);
  return total;
}

State ProposalDistribution::sample(RngStream& rng) const {
  State out(static_cast<std::size_t>(dim_));
  for (int i = 0; i < dim_; ++i) {
    const double u = rng.uniform();
    out[i] = static_cast<int>(
        inverse_cdf(static_cast<std::size_t>(levels_), u, [&](std::size_t l) {
          return prob(i, static_cast<int>(l));
        }));
  }
  return out;
}

ProposalDistribution newton_proposal_from_slopes(const Domain& domain,
                                                 std::span<const double> slopes,
                                                 std::span<const int> state, double alpha) {
  if (domain.encoding() == Encoding::one_hot)
    throw InvalidArgument("slope-driven Newton proposal needs a binary or ordinal domain");
  if (!(alpha > 0.0)) throw InvalidArgument("stepsize alpha must be positive");
  const int d = domain.dim();
  const int levels = domain.levels();
  std::vector<double> table(static_cast<std::size_t>(d) * levels);
  for (int i = 0; i < d; ++i) {
    std::span<double> row(table.data() + static_cast<std::size_t>(i) * levels,
                          static_cast<std::size_t>(levels));
    for (int v = 0; v < levels; ++v) {
      const double step = v - state[i];
      row[v] = 0.5 * slopes[i] * step - step * step / (2.0 * alpha);
    }
    log_normalize(row);
  }
  return {d, levels, std::move(table)};
}

ProposalDistribution newton_proposal(const FlipDifferences& diffs, std::span<const int> state,
                                     double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("stepsize alpha must be positive");
  const int d = diffs.dim;
  const int levels = diffs.levels;
  std::vector<double> table(static_cast<std::size_t>(d) * levels);
  switch (diffs.encoding) {
    case Encoding::binary:
      for (int i = 0; i < d; ++i) {
        // Closed-form two-way softmax with logit x = flipdiff / 2 - 1 / (2 alpha).
        const double x = 0.5 * diffs[i] - 1.0 / (2.0 * alpha);
        const double log_flip = -std::log1p(std::exp(-std::abs(x))) + std::min(x, 0.0);
        const double log_stay = -std::log1p(std::exp(-std::abs(x))) + std::min(-x, 0.0);
        table[static_cast<std::size_t>(i) * 2 + state[i]] = log_stay;
        table[static_cast<std::size_t>(i) * 2 + 1 - state[i]] = log_flip;
      }
      break;
    case Encoding::ordinal: {
      const Domain domain(d, levels, Encoding::ordinal);
      return newton_proposal_from_slopes(domain, diffs.values, state, alpha);
    }
    case Encoding::one_hot:
      for (int i = 0; i < d; ++i) {
        std::span<double> row(table.data() + static_cast<std::size_t>(i) * levels,
                              static_cast<std::size_t>(levels));
        for (int l = 0; l < levels; ++l)
          row[l] = l == state[i] ? 0.0 : 0.5 * diffs.at(i, l) - 1.0 / alpha;
        log_normalize(row);
      }
      break;
  }
  return {d, levels, std::move(table)};
}

ProposalDistribution newton_proposal(const EnergyModel& model, std::span<const int> state,
                                     double alpha) {
  return newton_proposal(forward_difference(model, state), state, alpha);
}

// ---------------------------------------------------------------------------

LocallyBalancedProposal::LocallyBalancedProposal(const FlipDifferences& level_diffs,
                                                 std::span<const int> state, bool include_self) {
  if (level_diffs.encoding != Encoding::one_hot)
    throw InvalidArgument("locally-balanced proposal needs level differences");
  if (include_self) {
    moves_.push_back({-1, 0});
    log_weights_.push_back(0.0);
  }
  for (int i = 0; i < level_diffs.dim; ++i) {
    for (int l = 0; l < level_diffs.levels; ++l) {
      if (l == state[i]) continue;
      moves_.push_back({i, l});
      log_weights_.push_back(0.5 * level_diffs.at(i, l));
    }
  }
  log_normalizer_ = log_sum_exp(log_weights_);
}

double LocallyBalancedProposal::prob(std::size_t k) const {
  return std::exp(log_weights_[k] - log_normalizer_);
}

double LocallyBalancedProposal::log_prob_of(std::span<const int> base,
                                            std::span<const int> target) const {
  int coordinate = -1;
  int distance = 0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (base[i] != target[i]) {
      coordinate = static_cast<int>(i);
      ++distance;
    }
  }
  if (distance > 1) return -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < moves_.size(); ++k) {
    const auto& move = moves_[k];
    if (move.coordinate == coordinate && (coordinate < 0 || move.level == target[coordinate]))
      return log_weights_[k] - log_normalizer_;
  }
  return -std::numeric_limits<double>::infinity();
}

std::size_t LocallyBalancedProposal::sample_index(RngStream& rng) const {
  const double u = rng.uniform();
  return inverse_cdf(moves_.size(), u, [&](std::size_t k) { return prob(k); });
}

LocallyBalancedProposal lb_proposal(const EnergyModel& model, std::span<const int> state,
                                    bool include_self) {
  validate_state(state, model.domain());
  return {level_differences(model, state), state, include_self};
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> conditional_log_probs(const EnergyModel& model, std::span<const int> state,
                                          int coordinate) {
  const int levels = model.domain().levels();
  std::vector<double> logits(static_cast<std::size_t>(levels));
  for (int l = 0; l < levels; ++l)
    logits[l] = l == state[coordinate] ? 0.0 : model.coordinate_difference(state, coordinate, l);
  log_normalize(logits);
  return logits;
}

}  // namespace

State gibbs_step(const EnergyModel& model, std::span<const int> state, int coordinate,
                 RngStream& rng) {
  validate_state(state, model.domain());
  if (coordinate < 0 || coordinate >= model.domain().dim())
    throw InvalidArgument("gibbs coordinate out of range");
  const auto logp = conditional_log_probs(model, state, coordinate);
  const double u = rng.uniform();
  State out(state.begin(), state.end());
  out[coordinate] = static_cast<int>(
      inverse_cdf(logp.size(), u, [&](std::size_t l) { return std::exp(logp[l]); }));
  return out;
}

// ---------------------------------------------------------------------------

Chain::Chain(const EnergyModel& model, ProposalSpec spec, State initial, RngStream rng)
    : model_(model), spec_(spec), rng_(rng) {
  spec_.validate();
  validate_state(initial, model_.domain());
  point_ = make_point(std::move(initial));
}

Chain::Point Chain::make_point(State state) const {
  Point p;
  p.energy = model_.energy(state);
  switch (spec_.family) {
    case ProposalFamily::newton:
      p.diffs = model_.differences(state);
      break;
    case ProposalFamily::locally_balanced:
      p.diffs = level_differences(model_, state);
      break;
    case ProposalFamily::gibbs:
      break;
  }
  p.state = std::move(state);
  return p;
}

StepOutcome Chain::step() {
  StepOutcome out;
  switch (spec_.family) {
    case ProposalFamily::newton:
      out = newton_step(spec_.alpha_at(step_));
      break;
    case ProposalFamily::locally_balanced:
      out = lb_step();
      break;
    case ProposalFamily::gibbs:
      out = gibbs_step_at(static_cast<int>(step_ % static_cast<std::uint64_t>(model_.domain().dim())));
      break;
  }
  ++step_;
  return out;
}

StepOutcome Chain::newton_step(double alpha) {
  StepOutcome out;
  out.alpha = alpha;
  out.current_energy = point_.energy;
  const auto forward = newton_proposal(point_.diffs, point_.state, alpha);
  State proposed = forward.sample(rng_);
  out.forward_logprob = forward.log_prob(proposed);
  out.changed_coordinates = hamming_distance(point_.state, proposed);
  out.proposed = proposed;

  if (!spec_.mh) {
    Point next = make_point(std::move(proposed));
    out.proposed_energy = next.energy;
    out.reverse_logprob = newton_proposal(next.diffs, next.state, alpha).log_prob(point_.state);
    point_ = std::move(next);
    return out;
  }

  const double u = rng_.uniform();
  if (out.changed_coordinates == 0) {
    out.proposed_energy = point_.energy;
    out.reverse_logprob = out.forward_logprob;
    return out;
  }
  Point candidate = make_point(std::move(proposed));
  out.proposed_energy = candidate.energy;
  out.reverse_logprob = newton_proposal(candidate.diffs, candidate.state, alpha).log_prob(point_.state);
  const double log_ratio = out.log_ratio();
  out.acceptance_probability = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
  out.accepted = u < out.acceptance_probability;
  if (out.accepted) point_ = std::move(candidate);
  return out;
}

StepOutcome Chain::lb_step() {
  StepOutcome out;
  out.alpha = spec_.alpha;
  out.current_energy = point_.energy;
  const LocallyBalancedProposal forward(point_.diffs, point_.state, spec_.lb_include_self);
  const auto k = forward.sample_index(rng_);
  const auto move = forward.moves()[k];
  State proposed = point_.state;
  if (move.coordinate >= 0) proposed[move.coordinate] = move.level;
  out.forward_logprob = forward.log_weights()[k] - forward.log_normalizer();
  out.changed_coordinates = move.coordinate >= 0 ? 1 : 0;
  out.proposed = proposed;

  const double u = spec_.mh ? rng_.uniform() : 0.0;
  if (move.coordinate < 0) {
    out.proposed_energy = point_.energy;
    out.reverse_logprob = out.forward_logprob;
    return out;
  }
  Point candidate = make_point(std::move(proposed));
  out.proposed_energy = candidate.energy;
  const LocallyBalancedProposal reverse(candidate.diffs, candidate.state, spec_.lb_include_self);
  out.reverse_logprob = reverse.log_prob_of(candidate.state, point_.state);
  if (spec_.mh) {
    const double log_ratio = out.log_ratio();
    out.acceptance_probability = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
    out.accepted = u < out.acceptance_probability;
  }
  if (out.accepted) point_ = std::move(candidate);
  return out;
}

StepOutcome Chain::gibbs_step_at(int coordinate) {
  StepOutcome out;
  out.alpha = spec_.alpha;
  out.coordinate = coordinate;
  out.current_energy = point_.energy;
  const auto logp = conditional_log_probs(model_, point_.state, coordinate);
  const double u = rng_.uniform();
  const auto level = static_cast<int>(
      inverse_cdf(logp.size(), u, [&](std::size_t l) { return std::exp(logp[l]); }));
  out.forward_logprob = logp[level];
  out.reverse_logprob = logp[point_.state[coordinate]];
  out.proposed = point_.state;
  out.proposed[coordinate] = level;
  out.changed_coordinates = level != point_.state[coordinate] ? 1 : 0;
  if (out.changed_coordinates) {
    point_.state[coordinate] = level;
    point_.energy = model_.energy(point_.state);
  }
  out.proposed_energy = point_.energy;
  return out;
}

StepOutcome sample_step(const EnergyModel& model, std::span<const int> state,
                        const ProposalSpec& spec, RngStream& rng, std::uint64_t step) {
  Chain chain(model, spec, State(state.begin(), state.end()), rng);
  StepOutcome out;
  switch (spec.family) {
    case ProposalFamily::newton:
    case ProposalFamily::locally_balanced:
      out = chain.step();
      break;
    case ProposalFamily::gibbs: {
      const int coordinate =
          static_cast<int>(step % static_cast<std::uint64_t>(model.domain().dim()));
      State next = gibbs_step(model, state, coordinate, rng);
      out.coordinate = coordinate;
      out.current_energy = model.energy(state);
      out.proposed_energy = model.energy(next);
      out.changed_coordinates = hamming_distance(state, next);
      out.proposed = std::move(next);
      out.alpha = spec.alpha;
      return out;
    }
  }
  rng = chain.rng();
  return out;
}

RunTrace run_chain(const EnergyModel& model, const ProposalSpec& spec, const RunOptions& options) {
  if (options.steps < 1) throw InvalidArgument("run_chain needs at least one step");
  if (options.thin < 1) throw InvalidArgument("thinning must be at least 1");
  const Domain& domain = model.domain();
  State initial = options.initial.value_or(State(static_cast<std::size_t>(domain.dim()), 0));
  Chain chain(model, spec, std::move(initial), RngStream(options.seed, options.stream_id));

  RunTrace trace;
  trace.dim = domain.dim();
  trace.thin = static_cast<int>(options.thin);
  trace.records.reserve(options.steps);
  const auto start = std::chrono::steady_clock::now();
  for (std::uint64_t t = 0; t < options.steps; ++t) {
    const StepOutcome out = chain.step();
    StepRecord record;
    record.step = t;
    record.energy = chain.energy();
    record.accepted = out.accepted;
    record.acceptance_probability = out.acceptance_probability;
    record.changed = out.changed_coordinates;
    record.alpha = out.alpha;
    record.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    trace.records.push_back(record);
    if (options.keep_samples && (t + 1) % options.thin == 0) trace.retain(t, chain.state());
  }
  return trace;
}

}  // namespace newtonmc
