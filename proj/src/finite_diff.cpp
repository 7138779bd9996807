#include "newtonmc/finite_diff.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

namespace newtonmc {

namespace {

constexpr double kSimplexTolerance = 1e-12;

// Contracts a lexicographically ordered table one coordinate at a time, last
// coordinate first. weight(i, level) gives the marginal for coordinate i.
template <typename Weight>
double contract_table(std::span<const double> values, int dim, int levels, Weight weight) {
  std::vector<double> work(values.begin(), values.end());
  std::size_t size = work.size();
  for (int i = dim - 1; i >= 0; --i) {
    const std::size_t next = size / levels;
    for (std::size_t k = 0; k < next; ++k) {
      double acc = 0.0;
      for (int l = 0; l < levels; ++l) acc += weight(i, l) * work[k * levels + l];
      work[k] = acc;
    }
    size = next;
  }
  return work[0];
}

}  // namespace

FlipDifferences generic_forward_difference(const EnergyModel& model,
                                           std::span<const int> state) {
  const Domain& domain = model.domain();
  const double base = model.energy(state);
  State work(state.begin(), state.end());
  FlipDifferences out;
  out.encoding = domain.encoding();
  out.dim = domain.dim();
  out.levels = domain.levels();

  switch (domain.encoding()) {
    case Encoding::binary:
      out.values.resize(domain.dim());
      for (int i = 0; i < domain.dim(); ++i) {
        work[i] = 1 - state[i];
        out.values[i] = model.energy(work) - base;
        work[i] = state[i];
      }
      break;
    case Encoding::ordinal:
      out.values.resize(domain.dim());
      for (int i = 0; i < domain.dim(); ++i) {
        if (state[i] < domain.levels() - 1) {
          work[i] = state[i] + 1;
          out.values[i] = model.energy(work) - base;
        } else {
          work[i] = state[i] - 1;
          out.values[i] = base - model.energy(work);
        }
        work[i] = state[i];
      }
      break;
    case Encoding::one_hot:
      out.values.assign(static_cast<std::size_t>(domain.dim()) * domain.levels(), 0.0);
      for (int i = 0; i < domain.dim(); ++i) {
        for (int l = 0; l < domain.levels(); ++l) {
          if (l == state[i]) continue;
          work[i] = l;
          out.values[static_cast<std::size_t>(i) * domain.levels() + l] =
              model.energy(work) - base;
        }
        work[i] = state[i];
      }
      break;
  }
  return out;
}

FlipDifferences forward_difference(const EnergyModel& model, std::span<const int> state) {
  validate_state(state, model.domain());
  return model.differences(state);
}

std::vector<double> directional_differences(const FlipDifferences& diffs,
                                            std::span<const int> state) {
  switch (diffs.encoding) {
    case Encoding::binary: {
      std::vector<double> out(diffs.values.size());
      for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = state[i] == 0 ? diffs.values[i] : -diffs.values[i];
      return out;
    }
    case Encoding::ordinal:
      return diffs.values;
    case Encoding::one_hot:
      break;
  }
  throw InvalidArgument("directional differences are undefined for one-hot encoding");
}

FlipDifferences level_differences(const EnergyModel& model, std::span<const int> state) {
  const Domain& domain = model.domain();
  FlipDifferences diffs = model.differences(state);
  if (diffs.encoding == Encoding::one_hot) return diffs;

  FlipDifferences out;
  out.encoding = Encoding::one_hot;
  out.dim = domain.dim();
  out.levels = domain.levels();
  out.values.assign(static_cast<std::size_t>(out.dim) * out.levels, 0.0);
  for (int i = 0; i < out.dim; ++i) {
    for (int l = 0; l < out.levels; ++l) {
      if (l == state[i]) continue;
      double value;
      if (diffs.encoding == Encoding::binary) {
        value = diffs[i];
      } else if (l == state[i] + 1 && state[i] < out.levels - 1) {
        value = diffs[i];
      } else if (l == state[i] - 1 && state[i] == out.levels - 1) {
        value = -diffs[i];
      } else {
        value = model.coordinate_difference(state, i, l);
      }
      out.values[static_cast<std::size_t>(i) * out.levels + l] = value;
    }
  }
  return out;
}

double newton_linear_term(const FlipDifferences& diffs, std::span<const int> from,
                          std::span<const int> to) {
  double total = 0.0;
  switch (diffs.encoding) {
    case Encoding::binary:
      for (int i = 0; i < diffs.dim; ++i)
        if (to[i] != from[i]) total += diffs[i];
      break;
    case Encoding::ordinal:
      for (int i = 0; i < diffs.dim; ++i) total += diffs[i] * (to[i] - from[i]);
      break;
    case Encoding::one_hot:
      for (int i = 0; i < diffs.dim; ++i)
        if (to[i] != from[i]) total += diffs.at(i, to[i]);
      break;
  }
  return total;
}

double embedded_squared_distance(Encoding encoding, std::span<const int> a,
                                 std::span<const int> b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (encoding == Encoding::one_hot) {
      total += a[i] != b[i] ? 2.0 : 0.0;
    } else {
      const double delta = a[i] - b[i];
      total += delta * delta;
    }
  }
  return total;
}

// ---------------------------------------------------------------------------

SetFunctionTable::SetFunctionTable(int dim, std::vector<double> values)
    : dim_(dim), values_(std::move(values)) {
  if (dim < 1 || dim > kMaxDim)
    throw InvalidArgument("set function tables support 1 <= d <= 20, got " +
                          std::to_string(dim));
  if (values_.size() != (std::size_t{1} << dim))
    throw InvalidArgument("set function table needs 2^d = " +
                          std::to_string(std::size_t{1} << dim) + " entries, got " +
                          std::to_string(values_.size()));
}

SetFunctionTable SetFunctionTable::from_model(const EnergyModel& model) {
  const Domain& domain = model.domain();
  if (domain.levels() != 2) throw InvalidArgument("set functions need a two-level domain");
  if (domain.dim() > kMaxDim) throw StateSpaceTooLarge("set function table limited to d <= 20");
  return {domain.dim(), energy_table(model)};
}

SetFunctionTable SetFunctionTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open set function table " + path.string());
  std::vector<std::pair<std::string, double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string bits;
    if (!(fields >> bits) || bits.front() == '#') continue;
    double value;
    if (!(fields >> value))
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) + ": missing value");
    rows.emplace_back(bits, value);
  }
  if (rows.empty()) throw InvalidArgument(path.string() + ": empty set function table");
  const int dim = static_cast<int>(rows.front().first.size());
  if (dim < 1 || dim > kMaxDim) throw InvalidArgument(path.string() + ": bad bitstring width");
  std::vector<double> values(std::size_t{1} << dim, 0.0);
  std::vector<bool> seen(values.size(), false);
  for (const auto& [bits, value] : rows) {
    if (static_cast<int>(bits.size()) != dim)
      throw InvalidArgument(path.string() + ": inconsistent bitstring width '" + bits + "'");
    std::size_t index = 0;
    for (char c : bits) {
      if (c != '0' && c != '1')
        throw InvalidArgument(path.string() + ": invalid bitstring '" + bits + "'");
      index = index * 2 + static_cast<std::size_t>(c - '0');
    }
    if (seen[index]) throw InvalidArgument(path.string() + ": duplicate subset '" + bits + "'");
    seen[index] = true;
    values[index] = value;
  }
  for (std::size_t k = 0; k < seen.size(); ++k)
    if (!seen[k])
      throw InvalidArgument(path.string() + ": table is missing " +
                            std::to_string(seen.size() - rows.size()) + " subsets");
  return {dim, std::move(values)};
}

void SetFunctionTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  char buffer[64];
  for (std::size_t k = 0; k < values_.size(); ++k) {
    std::string bits(static_cast<std::size_t>(dim_), '0');
    for (int i = 0; i < dim_; ++i)
      if ((k >> (dim_ - 1 - i)) & 1U) bits[i] = '1';
    auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, values_[k]);
    out << bits << ' ' << std::string_view(buffer, end - buffer) << '\n';
  }
}

double SetFunctionTable::operator()(std::span<const int> indicator) const {
  if (static_cast<int>(indicator.size()) != dim_)
    throw InvalidArgument("indicator length does not match table dimension");
  std::size_t index = 0;
  for (int v : indicator) {
    if (v != 0 && v != 1) throw InvalidArgument("indicator entries must be 0 or 1");
    index = index * 2 + static_cast<std::size_t>(v);
  }
  return values_[index];
}

double multilinear_extension(const SetFunctionTable& f, std::span<const double> x) {
  if (static_cast<int>(x.size()) != f.dim())
    throw InvalidArgument("point dimension does not match set function");
  for (double xi : x)
    if (!(xi >= 0.0 && xi <= 1.0))
      throw InvalidArgument("multilinear extension is defined on [0,1]^d only");
  return contract_table(f.values(), f.dim(), 2,
                        [&](int i, int l) { return l == 1 ? x[i] : 1.0 - x[i]; });
}

std::vector<double> multilinear_gradient(const SetFunctionTable& f,
                                         std::span<const double> x) {
  // Validates the cube constraint once.
  multilinear_extension(f, x);
  std::vector<double> point(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    point[i] = 1.0;
    const double high = multilinear_extension(f, point);
    point[i] = 0.0;
    const double low = multilinear_extension(f, point);
    point[i] = x[i];
    grad[i] = high - low;
  }
  return grad;
}

// ---------------------------------------------------------------------------

MarginalVector::MarginalVector(int dim, int levels, std::vector<double> rho)
    : dim_(dim), levels_(levels), rho_(std::move(rho)) {
  if (dim < 1 || levels < 2) throw InvalidArgument("marginals need dim >= 1 and levels >= 2");
  if (rho_.size() != static_cast<std::size_t>(dim) * (levels - 1))
    throw InvalidArgument("marginal matrix must be dim x (levels - 1)");
  for (int i = 0; i < dim_; ++i)
    set_row(i, std::span<const double>(rho_).subspan(static_cast<std::size_t>(i) * (levels_ - 1),
                                                     levels_ - 1));
}

MarginalVector MarginalVector::vertex(std::span<const int> state, int levels) {
  const int dim = static_cast<int>(state.size());
  std::vector<double> rho(static_cast<std::size_t>(dim) * (levels - 1), 0.0);
  for (int i = 0; i < dim; ++i) {
    if (state[i] < 0 || state[i] >= levels) throw InvalidArgument("vertex state out of range");
    if (state[i] > 0) rho[static_cast<std::size_t>(i) * (levels - 1) + state[i] - 1] = 1.0;
  }
  return {dim, levels, std::move(rho)};
}

double MarginalVector::probability(int i, int level) const {
  if (level > 0) return (*this)(i, level);
  double rest = 1.0;
  for (int l = 1; l < levels_; ++l) rest -= (*this)(i, l);
  return rest < 0.0 ? 0.0 : rest;
}

void MarginalVector::set_row(int i, std::span<const double> row) {
  if (static_cast<int>(row.size()) != levels_ - 1)
    throw InvalidArgument("marginal row must have levels - 1 entries");
  double sum = 0.0;
  for (double p : row) {
    if (!(p >= 0.0)) throw InvalidArgument("marginal entries must be non-negative");
    sum += p;
  }
  if (sum > 1.0 + kSimplexTolerance)
    throw InvalidArgument("marginal row " + std::to_string(i) + " sums to more than 1");
  std::copy(row.begin(), row.end(),
            rho_.begin() + static_cast<std::ptrdiff_t>(i) * (levels_ - 1));
}

std::vector<double> energy_table(const EnergyModel& model, std::uint64_t cap) {
  const Domain& domain = model.domain();
  const auto count = domain.checked_state_count(cap);
  std::vector<double> values(count);
  for (std::uint64_t k = 0; k < count; ++k) values[k] = model.energy(index_state(k, domain));
  return values;
}

double generalized_multilinear_extension(const Domain& domain, std::span<const double> values,
                                         const MarginalVector& rho) {
  const auto count = domain.checked_state_count();
  if (values.size() != count) throw InvalidArgument("value table does not match domain size");
  if (rho.dim() != domain.dim() || rho.levels() != domain.levels())
    throw InvalidArgument("marginals do not match domain");
  return contract_table(values, domain.dim(), domain.levels(),
                        [&](int i, int l) { return rho.probability(i, l); });
}

double generalized_multilinear_extension(const EnergyModel& model, const MarginalVector& rho,
                                         std::uint64_t cap) {
  const auto values = energy_table(model, cap);
  return generalized_multilinear_extension(model.domain(), values, rho);
}

double generalized_partial_derivative(const Domain& domain, std::span<const double> values,
                                      const MarginalVector& rho, int i, int j) {
  if (i < 0 || i >= domain.dim()) throw InvalidArgument("coordinate out of range");
  if (j < 1 || j >= domain.levels()) throw InvalidArgument("level must be in [1, L-1]");
  MarginalVector pinned = rho;
  std::vector<double> row(static_cast<std::size_t>(domain.levels() - 1), 0.0);
  pinned.set_row(i, row);
  const double low = generalized_multilinear_extension(domain, values, pinned);
  row[j - 1] = 1.0;
  pinned.set_row(i, row);
  const double high = generalized_multilinear_extension(domain, values, pinned);
  return high - low;
}

double generalized_partial_derivative(const EnergyModel& model, const MarginalVector& rho,
                                      int i, int j, std::uint64_t cap) {
  const auto values = energy_table(model, cap);
  return generalized_partial_derivative(model.domain(), values, rho, i, j);
}

}  // namespace newtonmc
