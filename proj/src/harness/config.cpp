#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "newtonmc/harness.hpp"

namespace newtonmc::harness {

namespace {

std::string trim(std::string_view text) {
  auto begin = text.begin();
  auto end = text.end();
  while (begin != end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
  while (end != begin && std::isspace(static_cast<unsigned char>(*(end - 1)))) --end;
  return std::string(begin, end);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  if (trim(value).empty()) return items;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) items.push_back(trim(item));
  return items;
}

double parse_double(const std::string& path, const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty())
    throw ConfigError(path, "expected a number, got '" + text + "'");
  return value;
}

std::uint64_t parse_u64(const std::string& path, const std::string& text) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError(path, "expected a non-negative integer, got '" + text + "'");
  return value;
}

int parse_int(const std::string& path, const std::string& text) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError(path, "expected an integer, got '" + text + "'");
  return value;
}

bool parse_bool(const std::string& path, const std::string& text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "true" || lower == "yes" || lower == "on" || lower == "1") return true;
  if (lower == "false" || lower == "no" || lower == "off" || lower == "0") return false;
  throw ConfigError(path, "expected a boolean, got '" + text + "'");
}

std::vector<double> parse_doubles(const std::string& path, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_double(path, item));
  return out;
}

std::vector<std::uint64_t> parse_u64s(const std::string& path, const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(text)) out.push_back(parse_u64(path, item));
  return out;
}

std::string default_proposal_name(const ProposalSpec& spec) {
  switch (spec.family) {
    case ProposalFamily::newton:
      return spec.mh ? "mana" : "una";
    case ProposalFamily::locally_balanced:
      return "lb";
    case ProposalFamily::gibbs:
      return "gibbs";
  }
  return "proposal";
}

void set_model_key(ModelConfig& m, const std::string& key, const std::string& value,
                   const std::string& path) {
  if (key == "kind") m.kind = value;
  else if (key == "encoding") {
    try {
      if (value.empty()) m.encoding.reset();
      else m.encoding = parse_encoding(value);
    } catch (const InvalidArgument& e) {
      throw ConfigError(path, e.what());
    }
  } else if (key == "height") m.height = parse_int(path, value);
  else if (key == "width") m.width = parse_int(path, value);
  else if (key == "coupling") m.coupling = parse_double(path, value);
  else if (key == "bias") m.bias = parse_double(path, value);
  else if (key == "levels") m.levels = parse_int(path, value);
  else if (key == "potts_bias") m.potts_bias = parse_doubles(path, value);
  else if (key == "facilities") m.facilities = parse_int(path, value);
  else if (key == "customers") m.customers = parse_int(path, value);
  else if (key == "penalty") m.penalty = parse_double(path, value);
  else if (key == "mixture_weights") m.mixture_weights = parse_doubles(path, value);
  else if (key == "mixture_means") m.mixture_means = parse_doubles(path, value);
  else if (key == "mixture_stddevs") m.mixture_stddevs = parse_doubles(path, value);
  else if (key == "dim") m.dim = parse_int(path, value);
  else if (key == "scale") m.scale = parse_double(path, value);
  else if (key == "linear") m.linear = parse_doubles(path, value);
  else if (key == "pairwise") m.pairwise = parse_doubles(path, value);
  else if (key == "instance_seed") m.instance_seed = parse_u64(path, value);
  else if (key == "data_file") m.data_file = value;
  else throw ConfigError(path, "unknown key");
}

void set_proposal_key(ProposalSpec& p, const std::string& key, const std::string& value,
                      const std::string& path) {
  if (key == "family") {
    try {
      p.family = parse_proposal_family(value);
    } catch (const InvalidArgument& e) {
      throw ConfigError(path, e.what());
    }
  } else if (key == "alpha") p.alpha = parse_double(path, value);
  else if (key == "mh") p.mh = parse_bool(path, value);
  else if (key == "decay") p.decay = parse_double(path, value);
  else if (key == "include_self") p.lb_include_self = parse_bool(path, value);
  else throw ConfigError(path, "unknown key");
}

void set_run_key(RunConfig& r, const std::string& key, const std::string& value,
                 const std::string& path) {
  if (key == "steps") r.steps = parse_u64(path, value);
  else if (key == "burn_in") r.burn_in = parse_u64(path, value);
  else if (key == "thin") r.thin = parse_u64(path, value);
  else if (key == "seeds") r.seeds = parse_u64s(path, value);
  else if (key == "ess_target") r.ess_target = value;
  else if (key == "checkpoints") r.checkpoints = parse_int(path, value);
  else if (key == "reference_multiplier") r.reference_multiplier = parse_int(path, value);
  else throw ConfigError(path, "unknown key");
}

void set_exact_key(ExactConfig& x, const std::string& key, const std::string& value,
                   const std::string& path) {
  if (key == "theorem_one_alphas") x.theorem_one_alphas = parse_doubles(path, value);
  else if (key == "theorem_two") x.theorem_two = parse_bool(path, value);
  else if (key == "theorem_two_alpha") x.theorem_two_alpha = parse_double(path, value);
  else if (key == "test_function") x.test_function = value;
  else if (key == "state_cap") x.state_cap = parse_u64(path, value);
  else if (key == "truth_cap") x.truth_cap = parse_u64(path, value);
  else if (key == "corrupt_kernel") x.corrupt_kernel = parse_bool(path, value);
  else throw ConfigError(path, "unknown key");
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) out += ", ";
    if constexpr (std::is_floating_point_v<T>) out += format_double(values[k]);
    else out += std::to_string(values[k]);
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

void ExperimentConfig::validate() const {
  static const std::vector<std::string> kinds{"ising",        "potts",     "facility", "table",
                                              "random-table", "quadratic"};
  if (std::find(kinds.begin(), kinds.end(), model.kind) == kinds.end())
    throw ConfigError("model.kind", "unknown model kind '" + model.kind + "'");
  if ((model.kind == "ising" || model.kind == "potts") && (model.height < 1 || model.width < 1))
    throw ConfigError("model.height", "lattice sides must be positive");
  if (model.kind == "potts" && model.levels < 2) throw ConfigError("model.levels", "need at least 2 levels");
  if (model.kind == "potts" && !model.potts_bias.empty() &&
      static_cast<int>(model.potts_bias.size()) != model.levels)
    throw ConfigError("model.potts_bias", "needs one entry per level");
  if (model.kind == "facility" && model.data_file.empty()) {
    if (model.facilities < 1 || model.customers < 1)
      throw ConfigError("model.facilities", "instance sizes must be positive");
    const auto k = model.mixture_weights.size();
    if (k == 0 || model.mixture_means.size() != k || model.mixture_stddevs.size() != k)
      throw ConfigError("model.mixture_weights", "mixture lists must be non-empty and equally long");
  }
  if (model.kind == "facility" && model.penalty < 0.0)
    throw ConfigError("model.penalty", "penalty must be non-negative");
  if (model.kind == "table" && model.data_file.empty())
    throw ConfigError("model.data_file", "table models need a data file");
  if (model.kind == "random-table" && (model.dim < 1 || model.levels < 2))
    throw ConfigError("model.dim", "random tables need dim >= 1 and levels >= 2");
  if (model.kind == "quadratic") {
    if (model.linear.empty()) throw ConfigError("model.linear", "quadratic models need a linear term");
    const auto d = model.linear.size();
    if (!model.pairwise.empty() && model.pairwise.size() != d * d)
      throw ConfigError("model.pairwise", "pairwise term must be a row-major dim x dim list");
  }

  if (proposals.empty()) throw ConfigError("proposal", "at least one proposal is required");
  for (const auto& p : proposals) {
    const std::string base = "proposal." + p.name;
    if (p.spec.family == ProposalFamily::gibbs) continue;
    if (!(p.spec.alpha > 0.0)) throw ConfigError(base + ".alpha", "stepsize must be positive");
    if (!(p.spec.decay > 0.0 && p.spec.decay <= 1.0))
      throw ConfigError(base + ".decay", "decay must lie in (0, 1]");
  }
  for (std::size_t a = 0; a < proposals.size(); ++a)
    for (std::size_t b = a + 1; b < proposals.size(); ++b)
      if (proposals[a].name == proposals[b].name)
        throw ConfigError("proposal." + proposals[a].name, "duplicate proposal name");

  if (run.seeds.empty()) throw ConfigError("run.seeds", "at least one seed is required");
  if (run.steps < 1) throw ConfigError("run.steps", "steps must be positive");
  if (run.burn_in >= run.steps) throw ConfigError("run.burn_in", "burn-in must be smaller than steps");
  if (run.thin < 1) throw ConfigError("run.thin", "thinning must be at least 1");
  if (run.checkpoints < 1) throw ConfigError("run.checkpoints", "need at least one checkpoint");
  if (run.reference_multiplier < 1)
    throw ConfigError("run.reference_multiplier", "multiplier must be at least 1");
  if (run.ess_target != "energy") {
    try {
      parse_u64("run.ess_target", run.ess_target);
    } catch (const ConfigError&) {
      throw ConfigError("run.ess_target", "expected 'energy' or a coordinate index");
    }
  }
  for (double alpha : exact.theorem_one_alphas)
    if (!(alpha > 0.0)) throw ConfigError("exact.theorem_one_alphas", "stepsizes must be positive");
  if (!(exact.theorem_two_alpha > 0.0))
    throw ConfigError("exact.theorem_two_alpha", "stepsize must be positive");
  if (exact.test_function != "hamming" && exact.test_function.rfind("coordinate:", 0) != 0)
    throw ConfigError("exact.test_function", "expected 'hamming' or 'coordinate:<i>'");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig config;
  std::vector<NamedProposal> proposals;
  std::vector<bool> named;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  std::map<std::string, int> seen;

  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find_first_of("#;");
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("", "line " + std::to_string(line_no) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section == "proposal" || section.rfind("proposal.", 0) == 0) {
        NamedProposal p;
        p.name = section == "proposal" ? "" : section.substr(9);
        if (section != "proposal" && p.name.empty())
          throw ConfigError(section, "empty proposal name");
        proposals.push_back(p);
        named.push_back(section != "proposal");
      } else if (section != "model" && section != "run" && section != "exact" && section != "output") {
        throw ConfigError(section, "unknown section");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(section, "line " + std::to_string(line_no) + ": expected key = value");
    if (section.empty())
      throw ConfigError("", "line " + std::to_string(line_no) + ": key outside any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const bool in_proposal = section == "proposal" || section.rfind("proposal.", 0) == 0;
    const std::string path =
        (in_proposal ? "proposal[" + std::to_string(proposals.size() - 1) + "]" : section) + "." + key;
    if (seen[path]++) throw ConfigError(section + "." + key, "duplicate key");

    if (section == "model") set_model_key(config.model, key, value, section + "." + key);
    else if (in_proposal) set_proposal_key(proposals.back().spec, key, value, section + "." + key);
    else if (section == "run") set_run_key(config.run, key, value, section + "." + key);
    else if (section == "exact") set_exact_key(config.exact, key, value, section + "." + key);
    else if (section == "output") {
      if (key == "dir") config.output_dir = value;
      else throw ConfigError(section + "." + key, "unknown key");
    }
  }

  if (!proposals.empty()) {
    for (std::size_t k = 0; k < proposals.size(); ++k)
      if (!named[k]) proposals[k].name = default_proposal_name(proposals[k].spec);
    config.proposals = std::move(proposals);
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream out;
  const auto& m = c.model;
  out << "[model]\n"
      << "kind = " << m.kind << "\n"
      << "encoding = " << (m.encoding ? to_string(*m.encoding) : "") << "\n"
      << "height = " << m.height << "\n"
      << "width = " << m.width << "\n"
      << "coupling = " << format_double(m.coupling) << "\n"
      << "bias = " << format_double(m.bias) << "\n"
      << "levels = " << m.levels << "\n"
      << "potts_bias = " << join(m.potts_bias) << "\n"
      << "facilities = " << m.facilities << "\n"
      << "customers = " << m.customers << "\n"
      << "penalty = " << format_double(m.penalty) << "\n"
      << "mixture_weights = " << join(m.mixture_weights) << "\n"
      << "mixture_means = " << join(m.mixture_means) << "\n"
      << "mixture_stddevs = " << join(m.mixture_stddevs) << "\n"
      << "dim = " << m.dim << "\n"
      << "scale = " << format_double(m.scale) << "\n"
      << "linear = " << join(m.linear) << "\n"
      << "pairwise = " << join(m.pairwise) << "\n"
      << "instance_seed = " << m.instance_seed << "\n"
      << "data_file = " << m.data_file << "\n";
  for (const auto& p : c.proposals) {
    out << "\n[proposal." << p.name << "]\n"
        << "family = " << to_string(p.spec.family) << "\n"
        << "alpha = " << format_double(p.spec.alpha) << "\n"
        << "mh = " << (p.spec.mh ? "true" : "false") << "\n"
        << "decay = " << format_double(p.spec.decay) << "\n"
        << "include_self = " << (p.spec.lb_include_self ? "true" : "false") << "\n";
  }
  const auto& r = c.run;
  out << "\n[run]\n"
      << "steps = " << r.steps << "\n"
      << "burn_in = " << r.burn_in << "\n"
      << "thin = " << r.thin << "\n"
      << "seeds = " << join(r.seeds) << "\n"
      << "ess_target = " << r.ess_target << "\n"
      << "checkpoints = " << r.checkpoints << "\n"
      << "reference_multiplier = " << r.reference_multiplier << "\n";
  const auto& x = c.exact;
  out << "\n[exact]\n"
      << "theorem_one_alphas = " << join(x.theorem_one_alphas) << "\n"
      << "theorem_two = " << (x.theorem_two ? "true" : "false") << "\n"
      << "theorem_two_alpha = " << format_double(x.theorem_two_alpha) << "\n"
      << "test_function = " << x.test_function << "\n"
      << "state_cap = " << x.state_cap << "\n"
      << "truth_cap = " << x.truth_cap << "\n"
      << "corrupt_kernel = " << (x.corrupt_kernel ? "true" : "false") << "\n";
  out << "\n[output]\n"
      << "dir = " << c.output_dir << "\n";
  return out.str();
}

}  // namespace newtonmc::harness
