#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "newtonmc/harness.hpp"

namespace newtonmc::harness {

namespace {

using nlohmann::json;

// NaN and infinities are not JSON numbers.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json numbers(const std::vector<double>& values) {
  json out = json::array();
  for (double v : values) out.push_back(number(v));
  return out;
}

std::filesystem::path prepare_output(const ExperimentConfig& config, const CommandOptions& options) {
  std::filesystem::path dir = options.out.empty() ? std::filesystem::path(config.output_dir) : options.out;
  if (dir.empty()) throw ConfigError("output.dir", "no output directory (set --out or [output] dir)");
  if (std::filesystem::exists(dir)) {
    if (!std::filesystem::is_directory(dir))
      throw ConfigError("output.dir", dir.string() + " exists and is not a directory");
    if (!std::filesystem::is_empty(dir) && !options.overwrite)
      throw ConfigError("output.dir", dir.string() + " already exists; pass --overwrite to replace it");
  }
  std::filesystem::create_directories(dir);
  return dir;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<std::uint64_t> effective_seeds(const ExperimentConfig& config, const CommandOptions& options) {
  if (options.seed) return {*options.seed};
  return config.run.seeds;
}

std::vector<std::uint64_t> checkpoints_for(const RunConfig& run) {
  std::vector<std::uint64_t> out;
  const auto n = static_cast<std::uint64_t>(run.checkpoints);
  for (std::uint64_t k = 1; k <= n; ++k) {
    const std::uint64_t step = run.steps * k / n;
    if (step > run.burn_in && (out.empty() || out.back() != step)) out.push_back(step);
  }
  if (out.empty() || out.back() != run.steps) out.push_back(run.steps);
  return out;
}

// Runs f(0..n-1) on up to `threads` workers; rethrows the first failure.
template <typename F>
void parallel_for(std::size_t n, int threads, F f) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      try {
        f(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const auto count = static_cast<std::size_t>(std::max(1, threads));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < std::min(count, n); ++t) pool.emplace_back(worker);
    worker();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct Job {
  const NamedProposal* proposal;
  std::uint64_t seed;
};

ChainSummary run_job(const EnergyModel& model, const ExperimentConfig& config, const Job& job,
                     const GroundTruth& truth, std::string* csv) {
  RunOptions options;
  options.steps = config.run.steps;
  options.seed = job.seed;
  options.thin = config.run.thin;
  const RunTrace trace = run_chain(model, job.proposal->spec, options);

  ChainSummary s;
  s.proposal = job.proposal->name;
  s.seed = job.seed;
  s.checkpoints = checkpoints_for(config.run);
  s.rmse_curve = rmse_curve(trace, truth.mean, config.run.burn_in, s.checkpoints);
  for (auto step : s.checkpoints) s.wall_seconds.push_back(trace.records[step - 1].wall_ns * 1e-9);
  s.mean = sample_mean(trace, config.run.burn_in);
  s.final_rmse = rmse(s.mean, truth.mean);
  s.acceptance = acceptance_stats(std::span<const StepRecord>(trace.records).subspan(config.run.burn_in));

  std::vector<double> series;
  if (config.run.ess_target == "energy") {
    for (std::size_t t = config.run.burn_in; t < trace.records.size(); ++t)
      series.push_back(trace.records[t].energy);
  } else {
    const auto i = std::stoull(config.run.ess_target);
    if (i >= static_cast<std::uint64_t>(trace.dim))
      throw ConfigError("run.ess_target", "coordinate index out of range");
    for (std::size_t k = 0; k < trace.sample_steps.size(); ++k)
      if (trace.sample_steps[k] >= config.run.burn_in) series.push_back(trace.sample(k)[i]);
  }
  s.ess = series.size() >= 10 ? effective_sample_size(series) : std::nan("");
  if (csv) *csv = trace_csv(trace);
  return s;
}

json proposal_json(const NamedProposal& p) {
  return {{"name", p.name},
          {"family", to_string(p.spec.family)},
          {"alpha", p.spec.alpha},
          {"mh", p.spec.mh},
          {"decay", p.spec.decay},
          {"include_self", p.spec.lb_include_self}};
}

json truth_json(const GroundTruth& truth) {
  json out{{"provenance", to_string(truth.provenance)}, {"mean", numbers(truth.mean)}};
  out["standard_error"] = truth.standard_error ? numbers(*truth.standard_error) : json(nullptr);
  return out;
}

json chain_json(const ChainSummary& s) {
  json curve = json::array();
  for (std::size_t k = 0; k < s.checkpoints.size(); ++k)
    curve.push_back({{"step", s.checkpoints[k]},
                     {"rmse", number(s.rmse_curve[k])},
                     {"wall_seconds", s.wall_seconds[k]}});
  return {{"proposal", s.proposal},
          {"seed", s.seed},
          {"rmse", number(s.final_rmse)},
          {"ess", number(s.ess)},
          {"acceptance_rate", s.acceptance.acceptance_rate},
          {"mean_changed_proposed", s.acceptance.mean_changed_proposed},
          {"mean_changed_accepted", s.acceptance.mean_changed_accepted},
          {"mean", numbers(s.mean)},
          {"rmse_curve", curve}};
}

json aggregate_json(const std::vector<const ChainSummary*>& chains) {
  double rmse_sum = 0.0, rmse_max = 0.0, ess_sum = 0.0, acc_sum = 0.0, changed_sum = 0.0;
  for (const auto* s : chains) {
    rmse_sum += s->final_rmse;
    rmse_max = std::max(rmse_max, s->final_rmse);
    ess_sum += s->ess;
    acc_sum += s->acceptance.acceptance_rate;
    changed_sum += s->acceptance.mean_changed_accepted;
  }
  const double n = static_cast<double>(chains.size());
  return {{"chains", chains.size()},
          {"mean_rmse", number(rmse_sum / n)},
          {"max_rmse", number(rmse_max)},
          {"mean_ess", number(ess_sum / n)},
          {"mean_acceptance_rate", number(acc_sum / n)},
          {"mean_changed_accepted", number(changed_sum / n)}};
}

json model_json(const EnergyModel& model, const ExperimentConfig& config) {
  const auto count = model.domain().state_count(config.exact.truth_cap);
  return {{"kind", config.model.kind},
          {"dim", model.domain().dim()},
          {"levels", model.domain().levels()},
          {"encoding", to_string(model.domain().encoding())},
          {"states", count ? json(*count) : json(nullptr)}};
}

std::filesystem::path config_dir(const CommandOptions& options) { return options.config_dir; }

}  // namespace

std::vector<ChainSummary> cmd_sample(const ExperimentConfig& config, const CommandOptions& options) {
  config.validate();
  if (config.proposals.size() != 1)
    throw ConfigError("proposal", "sample runs exactly one proposal; use bench to compare several");
  const auto model = build_model(config.model, config_dir(options));
  const auto seeds = effective_seeds(config, options);
  const auto dir = prepare_output(config, options);
  const GroundTruth truth = ground_truth(*model, config);

  std::vector<ChainSummary> summaries(seeds.size());
  parallel_for(seeds.size(), options.threads, [&](std::size_t k) {
    std::string csv;
    summaries[k] = run_job(*model, config, {&config.proposals.front(), seeds[k]}, truth, &csv);
    write_file(dir / ("trace_seed" + std::to_string(seeds[k]) + ".csv"), csv);
  });

  ExperimentConfig resolved = config;
  resolved.run.seeds = seeds;
  resolved.output_dir = dir.string();
  write_file(dir / "config.ini", serialize_config(resolved));

  json summary{{"command", "sample"},
               {"model", model_json(*model, config)},
               {"proposal", proposal_json(config.proposals.front())},
               {"steps", config.run.steps},
               {"burn_in", config.run.burn_in},
               {"thin", config.run.thin},
               {"ess_target", config.run.ess_target},
               {"ground_truth", truth_json(truth)}};
  json chains = json::array();
  std::vector<const ChainSummary*> all;
  for (const auto& s : summaries) {
    json c = chain_json(s);
    c["trace"] = "trace_seed" + std::to_string(s.seed) + ".csv";
    chains.push_back(std::move(c));
    all.push_back(&s);
  }
  summary["chains"] = std::move(chains);
  summary["aggregate"] = aggregate_json(all);
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  return summaries;
}

std::vector<ChainSummary> cmd_bench(const ExperimentConfig& config, const CommandOptions& options) {
  config.validate();
  if (config.proposals.size() < 2)
    throw ConfigError("proposal", "bench needs at least two proposals");
  const auto model = build_model(config.model, config_dir(options));
  const auto seeds = effective_seeds(config, options);
  const auto dir = prepare_output(config, options);
  const GroundTruth truth = ground_truth(*model, config);

  std::vector<Job> jobs;
  for (const auto& p : config.proposals)
    for (auto seed : seeds) jobs.push_back({&p, seed});
  std::vector<ChainSummary> summaries(jobs.size());
  parallel_for(jobs.size(), options.threads,
               [&](std::size_t k) { summaries[k] = run_job(*model, config, jobs[k], truth, nullptr); });

  std::ostringstream by_iter, by_time, ess;
  by_iter << "proposal,seed,step,rmse\n";
  by_time << "proposal,seed,wall_seconds,rmse\n";
  ess << "proposal,seed,ess,acceptance_rate,mean_changed_proposed,mean_changed_accepted,final_rmse\n";
  for (const auto& s : summaries) {
    for (std::size_t k = 0; k < s.checkpoints.size(); ++k) {
      by_iter << s.proposal << ',' << s.seed << ',' << s.checkpoints[k] << ','
              << format_double(s.rmse_curve[k]) << '\n';
      by_time << s.proposal << ',' << s.seed << ',' << format_double(s.wall_seconds[k]) << ','
              << format_double(s.rmse_curve[k]) << '\n';
    }
    ess << s.proposal << ',' << s.seed << ',' << format_double(s.ess) << ','
        << format_double(s.acceptance.acceptance_rate) << ','
        << format_double(s.acceptance.mean_changed_proposed) << ','
        << format_double(s.acceptance.mean_changed_accepted) << ',' << format_double(s.final_rmse)
        << '\n';
  }
  write_file(dir / "rmse_vs_iteration.csv", by_iter.str());
  write_file(dir / "rmse_vs_wallclock.csv", by_time.str());
  write_file(dir / "ess.csv", ess.str());

  ExperimentConfig resolved = config;
  resolved.run.seeds = seeds;
  resolved.output_dir = dir.string();
  write_file(dir / "config.ini", serialize_config(resolved));

  json summary{{"command", "bench"},
               {"model", model_json(*model, config)},
               {"steps", config.run.steps},
               {"burn_in", config.run.burn_in},
               {"thin", config.run.thin},
               {"ess_target", config.run.ess_target},
               {"ground_truth", truth_json(truth)}};
  json proposals = json::array();
  for (const auto& p : config.proposals) {
    json entry = proposal_json(p);
    json chains = json::array();
    std::vector<const ChainSummary*> mine;
    for (const auto& s : summaries)
      if (s.proposal == p.name) {
        chains.push_back(chain_json(s));
        mine.push_back(&s);
      }
    entry["chains"] = std::move(chains);
    entry["aggregate"] = aggregate_json(mine);
    proposals.push_back(std::move(entry));
  }
  summary["proposals"] = std::move(proposals);
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  return summaries;
}

ExactOutcome cmd_exact(const ExperimentConfig& config, const CommandOptions& options) {
  config.validate();
  const auto model = build_model(config.model, config_dir(options));
  const auto cap = config.exact.state_cap;
  const auto states = model->domain().checked_state_count(cap);
  const auto dir = prepare_output(config, options);

  ExactOutcome outcome;
  json report{{"command", "exact"}, {"model", model_json(*model, config)}, {"state_cap", cap}};

  if (!config.exact.theorem_one_alphas.empty()) {
    if (!model->quadratic_form())
      throw ConfigError("exact.theorem_one_alphas",
                        "theorem one needs a model with a certified quadratic form");
    KernelHook hook;
    if (config.exact.corrupt_kernel)
      hook = [](Eigen::MatrixXd& k) {
        k = 0.5 * k + Eigen::MatrixXd::Constant(k.rows(), k.cols(), 0.5 / static_cast<double>(k.rows()));
      };
    outcome.theorem_one = verify_theorem_one(*model, config.exact.theorem_one_alphas, hook, cap);
    json rows = json::array();
    std::ostringstream csv;
    csv << "alpha,l1_distance,bound,lambda_min,partition_function,reversibility_residual,"
           "max_pointwise_difference\n";
    bool monotone = true;
    for (std::size_t k = 0; k < outcome.theorem_one.size(); ++k) {
      const auto& r = outcome.theorem_one[k];
      const bool holds = r.holds() && r.reversibility_residual <= 1e-10;
      outcome.violated |= !holds;
      if (k > 0) {
        const auto& prev = outcome.theorem_one[k - 1];
        if (r.alpha < prev.alpha && !(r.l1_distance < prev.l1_distance)) monotone = false;
      }
      rows.push_back({{"alpha", r.alpha},
                      {"l1_distance", r.l1_distance},
                      {"bound", number(r.bound)},
                      {"lambda_min", r.lambda_min},
                      {"partition_function", r.partition_function},
                      {"reversibility_residual", r.reversibility_residual},
                      {"max_pointwise_difference", r.max_pointwise_difference},
                      {"holds", holds}});
      csv << format_double(r.alpha) << ',' << format_double(r.l1_distance) << ','
          << format_double(r.bound) << ',' << format_double(r.lambda_min) << ','
          << format_double(r.partition_function) << ',' << format_double(r.reversibility_residual)
          << ',' << format_double(r.max_pointwise_difference) << '\n';
    }
    report["theorem_one"] = std::move(rows);
    report["theorem_one_monotone"] = monotone;
    write_file(dir / "theorem_one.csv", csv.str());
  }

  if (config.exact.theorem_two) {
    const auto h = build_test_function(config.exact.test_function, model->domain().dim());
    const auto r = verify_theorem_two(*model, config.exact.theorem_two_alpha, h, cap);
    outcome.theorem_two = r;
    outcome.violated |= !r.holds();
    report["theorem_two"] = {{"alpha", r.alpha},
                             {"lipschitz_L", r.lipschitz_L},
                             {"diameter_D", r.diameter_D},
                             {"c", r.c},
                             {"gap_q", r.gap_q},
                             {"gap_qtilde", r.gap_qtilde},
                             {"var_q", r.var_q},
                             {"var_qtilde", r.var_qtilde},
                             {"var_pi", r.var_pi},
                             {"variance_bound", number(r.variance_bound)},
                             {"min_kernel_ratio", number(r.min_kernel_ratio)},
                             {"gap_check", r.gap_check},
                             {"asymvar_ratio_check", r.asymvar_ratio_check},
                             {"test_function", config.exact.test_function}};
  }
  report["states"] = states;
  report["violated"] = outcome.violated;

  write_file(dir / "config.ini", serialize_config(config));
  write_file(dir / "exact_report.json", report.dump(2) + "\n");
  return outcome;
}

}  // namespace newtonmc::harness
