#include <cmath>
#include <sstream>

#include "newtonmc/finite_diff.hpp"
#include "newtonmc/harness.hpp"

namespace newtonmc::harness {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& file) {
  const std::filesystem::path p(file);
  return p.is_absolute() || base.empty() ? p : base / p;
}

// Reference chains read from a stream id no experiment seed reaches.
constexpr std::uint64_t kReferenceStream = std::uint64_t{1} << 62;

}  // namespace

std::unique_ptr<EnergyModel> build_model(const ModelConfig& m, const std::filesystem::path& base_dir) {
  if (m.kind == "ising") {
    if (m.encoding && *m.encoding != Encoding::binary)
      throw ConfigError("model.encoding", "ising models are binary");
    return std::make_unique<IsingModel>(m.height, m.width, m.coupling, m.bias);
  }
  if (m.kind == "potts") {
    std::vector<double> bias = m.potts_bias.empty()
                                   ? std::vector<double>(static_cast<std::size_t>(m.levels), 0.0)
                                   : m.potts_bias;
    const Encoding enc = m.encoding.value_or(Encoding::one_hot);
    if (enc == Encoding::binary && m.levels != 2)
      throw ConfigError("model.encoding", "binary encoding needs levels = 2");
    return std::make_unique<PottsModel>(m.height, m.width, m.coupling, std::move(bias), enc);
  }
  if (m.kind == "facility") {
    if (m.encoding && *m.encoding != Encoding::binary)
      throw ConfigError("model.encoding", "facility location models are binary");
    if (!m.data_file.empty())
      return std::make_unique<FacilityLocationModel>(load_matrix_csv(resolve(base_dir, m.data_file)),
                                                     m.penalty);
    MixtureParams mixture{m.mixture_weights, m.mixture_means, m.mixture_stddevs};
    return std::make_unique<FacilityLocationModel>(
        generate_facility_instance(m.customers, m.facilities, mixture, m.penalty, m.instance_seed));
  }
  if (m.kind == "table") {
    return std::make_unique<TableModel>(SetFunctionTable::load(resolve(base_dir, m.data_file)));
  }
  if (m.kind == "random-table") {
    const Encoding enc = m.encoding.value_or(m.levels == 2 ? Encoding::binary : Encoding::one_hot);
    return std::make_unique<TableModel>(
        random_table_model(Domain(m.dim, m.levels, enc), m.instance_seed, m.scale));
  }
  if (m.kind == "quadratic") {
    const int d = static_cast<int>(m.linear.size());
    QuadraticForm form{d, m.pairwise, m.linear, 0.0};
    if (form.a.empty()) form.a.assign(static_cast<std::size_t>(d) * d, 0.0);
    return std::make_unique<QuadraticModel>(std::move(form));
  }
  throw ConfigError("model.kind", "unknown model kind '" + m.kind + "'");
}

StateFunction build_test_function(const std::string& spec, int dim) {
  if (spec == "hamming") return hamming_weight;
  if (spec.rfind("coordinate:", 0) == 0) {
    int i = -1;
    try {
      i = std::stoi(spec.substr(11));
    } catch (const std::exception&) {
      throw ConfigError("exact.test_function", "bad coordinate index in '" + spec + "'");
    }
    if (i < 0 || i >= dim)
      throw ConfigError("exact.test_function", "coordinate index out of range");
    return [i](std::span<const int> s) { return static_cast<double>(s[i]); };
  }
  throw ConfigError("exact.test_function", "expected 'hamming' or 'coordinate:<i>'");
}

GroundTruth ground_truth(const EnergyModel& model, const ExperimentConfig& config) {
  if (model.domain().state_count(config.exact.truth_cap)) return exact_mean(model, config.exact.truth_cap);

  ProposalSpec reference;
  for (const auto& p : config.proposals)
    if (p.spec.family == ProposalFamily::newton) {
      reference.alpha = p.spec.alpha;
      break;
    }
  RunOptions options;
  options.steps = config.run.steps * static_cast<std::uint64_t>(config.run.reference_multiplier);
  options.seed = config.run.seeds.front();
  options.stream_id = kReferenceStream;
  const RunTrace trace = run_chain(model, reference, options);
  const std::uint64_t burn_in = config.run.burn_in * static_cast<std::uint64_t>(config.run.reference_multiplier);

  GroundTruth truth;
  truth.provenance = TruthProvenance::reference;
  truth.mean = sample_mean(trace, burn_in);
  std::vector<double> se;
  std::vector<double> series;
  for (int i = 0; i < trace.dim; ++i) {
    series.clear();
    for (std::size_t k = 0; k < trace.sample_steps.size(); ++k)
      if (trace.sample_steps[k] >= burn_in) series.push_back(trace.sample(k)[i]);
    const double v = series.size() >= 200 ? batch_means_variance(series) : 0.0;
    se.push_back(std::sqrt(v / static_cast<double>(series.size())));
  }
  truth.standard_error = std::move(se);
  return truth;
}

std::string trace_csv(const RunTrace& trace) {
  std::ostringstream out;
  out << "step,energy,accepted,acc_prob,changed,alpha,wall_ns\n";
  for (const auto& r : trace.records) {
    out << r.step << ',' << format_double(r.energy) << ',' << (r.accepted ? 1 : 0) << ','
        << format_double(r.acceptance_probability) << ',' << r.changed << ','
        << format_double(r.alpha) << ',' << r.wall_ns << '\n';
  }
  return out.str();
}

}  // namespace newtonmc::harness
