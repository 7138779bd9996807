#include "newtonmc/models.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "newtonmc/rng.hpp"

namespace newtonmc {

namespace {

inline int spin(int bit) { return 2 * bit - 1; }

void require_binary_level(int level) {
  if (level != 0 && level != 1) throw InvalidArgument("binary level must be 0 or 1");
}

}  // namespace

Lattice::Lattice(int height, int width) : height_(height), width_(width) {
  if (height < 1 || width < 1) throw InvalidArgument("lattice dimensions must be positive");
  neighbors_.resize(static_cast<std::size_t>(sites()));
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const int u = r * width + c;
      if (c + 1 < width) edges_.emplace_back(u, u + 1);
      if (r + 1 < height) edges_.emplace_back(u, u + width);
    }
  }
  for (auto [u, v] : edges_) {
    neighbors_[u].push_back(v);
    neighbors_[v].push_back(u);
  }
  for (auto& list : neighbors_) std::sort(list.begin(), list.end());
}

// ---------------------------------------------------------------------------

IsingModel::IsingModel(int height, int width, double coupling, double bias)
    : lattice_(height, width),
      domain_(Domain::binary(height * width)),
      coupling_(coupling),
      bias_(bias) {}

double IsingModel::energy(std::span<const int> state) const {
  double pair = 0.0;
  for (auto [u, v] : lattice_.edges()) pair += spin(state[u]) * spin(state[v]);
  double field = 0.0;
  for (int u = 0; u < lattice_.sites(); ++u) field += spin(state[u]);
  return coupling_ * pair + bias_ * field;
}

double IsingModel::flip_difference(std::span<const int> state, int site) const {
  int local = 0;
  for (int v : lattice_.neighbors(site)) local += spin(state[v]);
  return -2.0 * spin(state[site]) * (coupling_ * local + bias_);
}

FlipDifferences IsingModel::differences(std::span<const int> state) const {
  FlipDifferences out{Encoding::binary, domain_.dim(), 2, {}};
  out.values.resize(static_cast<std::size_t>(domain_.dim()));
  for (int u = 0; u < domain_.dim(); ++u) out.values[u] = flip_difference(state, u);
  return out;
}

double IsingModel::coordinate_difference(std::span<const int> state, int i, int level) const {
  require_binary_level(level);
  return level == state[i] ? 0.0 : flip_difference(state, i);
}

std::optional<QuadraticForm> IsingModel::quadratic_form() const {
  const int d = domain_.dim();
  QuadraticForm form;
  form.dim = d;
  form.a.assign(static_cast<std::size_t>(d) * d, 0.0);
  form.b.assign(static_cast<std::size_t>(d), 2.0 * bias_);
  // x_u x_v = 4 s_u s_v - 2 s_u - 2 s_v + 1 and x_u = 2 s_u - 1.
  for (auto [u, v] : lattice_.edges()) {
    form.a[static_cast<std::size_t>(u) * d + v] += 2.0 * coupling_;
    form.a[static_cast<std::size_t>(v) * d + u] += 2.0 * coupling_;
    form.b[u] -= 2.0 * coupling_;
    form.b[v] -= 2.0 * coupling_;
  }
  form.offset = coupling_ * static_cast<double>(lattice_.edges().size()) - bias_ * d;
  return form;
}

// ---------------------------------------------------------------------------

PottsModel::PottsModel(int height, int width, double coupling, std::vector<double> bias,
                       Encoding encoding)
    : lattice_(height, width),
      domain_(height * width, static_cast<int>(bias.size()), encoding),
      coupling_(coupling),
      bias_(std::move(bias)) {}

double PottsModel::energy(std::span<const int> state) const {
  int agree = 0;
  for (auto [u, v] : lattice_.edges()) agree += state[u] == state[v];
  double field = 0.0;
  for (int u = 0; u < lattice_.sites(); ++u) field += bias_[state[u]];
  return coupling_ * agree + field;
}

double PottsModel::coordinate_difference(std::span<const int> state, int i, int level) const {
  if (level < 0 || level >= domain_.levels()) throw InvalidArgument("Potts level out of range");
  const int current = state[i];
  if (level == current) return 0.0;
  int at_level = 0;
  int at_current = 0;
  for (int v : lattice_.neighbors(i)) {
    at_level += state[v] == level;
    at_current += state[v] == current;
  }
  return coupling_ * (at_level - at_current) + bias_[level] - bias_[current];
}

FlipDifferences PottsModel::differences(std::span<const int> state) const {
  const int d = domain_.dim();
  const int levels = domain_.levels();
  FlipDifferences out{domain_.encoding(), d, levels, {}};
  switch (domain_.encoding()) {
    case Encoding::one_hot:
      out.values.assign(static_cast<std::size_t>(d) * levels, 0.0);
      for (int i = 0; i < d; ++i)
        for (int l = 0; l < levels; ++l)
          out.values[static_cast<std::size_t>(i) * levels + l] = coordinate_difference(state, i, l);
      break;
    case Encoding::binary:
      out.values.resize(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i) out.values[i] = coordinate_difference(state, i, 1 - state[i]);
      break;
    case Encoding::ordinal:
      out.values.resize(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i)
        out.values[i] = state[i] < levels - 1 ? coordinate_difference(state, i, state[i] + 1)
                                              : -coordinate_difference(state, i, state[i] - 1);
      break;
  }
  return out;
}

// ---------------------------------------------------------------------------

Matrix load_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open matrix file " + path.string());
  Matrix m;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    std::vector<double> row;
    std::stringstream fields(line);
    std::string cell;
    while (std::getline(fields, cell, ',')) {
      const auto first = cell.find_first_not_of(" \t\r");
      const auto last = cell.find_last_not_of(" \t\r");
      if (first == std::string::npos)
        throw InvalidArgument(path.string() + ":" + std::to_string(line_no) + ": empty cell");
      const std::string trimmed = cell.substr(first, last - first + 1);
      double value;
      auto [ptr, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), value);
      if (ec != std::errc() || ptr != trimmed.data() + trimmed.size())
        throw InvalidArgument(path.string() + ":" + std::to_string(line_no) +
                              ": not a number '" + trimmed + "'");
      row.push_back(value);
    }
    if (m.rows == 0) {
      m.cols = static_cast<int>(row.size());
    } else if (static_cast<int>(row.size()) != m.cols) {
      throw InvalidArgument(path.string() + ":" + std::to_string(line_no) +
                            ": ragged row (expected " + std::to_string(m.cols) + " columns)");
    }
    m.data.insert(m.data.end(), row.begin(), row.end());
    ++m.rows;
  }
  if (m.rows == 0 || m.cols == 0) throw InvalidArgument(path.string() + ": empty matrix");
  return m;
}

void save_matrix_csv(const Matrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  char buffer[64];
  for (int r = 0; r < matrix.rows; ++r) {
    for (int c = 0; c < matrix.cols; ++c) {
      auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, matrix(r, c));
      if (c) out << ',';
      out << std::string_view(buffer, end - buffer);
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------

FacilityLocationModel::FacilityLocationModel(Matrix utility, double penalty)
    : utility_(std::move(utility)),
      penalty_(penalty),
      domain_(Domain::binary(std::max(utility_.rows, 1))) {
  if (utility_.rows < 1 || utility_.cols < 1)
    throw InvalidArgument("utility matrix must be non-empty");
  if (!(penalty >= 0.0)) throw InvalidArgument("facility penalty must be non-negative");
}

double FacilityLocationModel::energy(std::span<const int> state) const {
  int opened = 0;
  for (int v : state) opened += v;
  if (opened == 0) return 0.0;
  double total = 0.0;
  for (int j = 0; j < utility_.cols; ++j) {
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < utility_.rows; ++i)
      if (state[i]) best = std::max(best, utility_(i, j));
    total += best;
  }
  return total - penalty_ * opened;
}

FlipDifferences FacilityLocationModel::differences(std::span<const int> state) const {
  const int n = utility_.rows;
  const int m = utility_.cols;
  FlipDifferences out{Encoding::binary, n, 2, std::vector<double>(static_cast<std::size_t>(n))};

  int opened = 0;
  for (int v : state) opened += v;
  if (opened == 0) {
    for (int i = 0; i < n; ++i) {
      double row = 0.0;
      for (int j = 0; j < m; ++j) row += utility_(i, j);
      out.values[i] = row - penalty_;
    }
    return out;
  }

  // Best and second-best opened value per customer.
  constexpr double kNone = -std::numeric_limits<double>::infinity();
  std::vector<double> best(static_cast<std::size_t>(m), kNone);
  std::vector<double> second(static_cast<std::size_t>(m), kNone);
  std::vector<int> best_at(static_cast<std::size_t>(m), -1);
  for (int i = 0; i < n; ++i) {
    if (!state[i]) continue;
    for (int j = 0; j < m; ++j) {
      const double c = utility_(i, j);
      if (c > best[j]) {
        second[j] = best[j];
        best[j] = c;
        best_at[j] = i;
      } else if (c > second[j]) {
        second[j] = c;
      }
    }
  }
  const double current = [&] {
    double total = 0.0;
    for (int j = 0; j < m; ++j) total += best[j];
    return total - penalty_ * opened;
  }();

  for (int i = 0; i < n; ++i) {
    double delta = 0.0;
    if (!state[i]) {
      for (int j = 0; j < m; ++j) delta += std::max(0.0, utility_(i, j) - best[j]);
      delta -= penalty_;
    } else if (opened == 1) {
      delta = -current;
    } else {
      for (int j = 0; j < m; ++j)
        if (best_at[j] == i) delta += second[j] - best[j];
      delta += penalty_;
    }
    out.values[i] = delta;
  }
  return out;
}

double FacilityLocationModel::coordinate_difference(std::span<const int> state, int i,
                                                    int level) const {
  require_binary_level(level);
  if (level == state[i]) return 0.0;
  return EnergyModel::coordinate_difference(state, i, level);
}

Matrix generate_facility_utilities(int customers, int facilities, const MixtureParams& mixture,
                                   std::uint64_t seed) {
  if (customers < 1 || facilities < 1) throw InvalidArgument("instance sizes must be positive");
  const std::size_t k = mixture.weights.size();
  if (k == 0 || mixture.means.size() != k || mixture.stddevs.size() != k)
    throw InvalidArgument("mixture weights, means and stddevs must have equal non-zero length");
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    if (!(mixture.weights[c] >= 0.0) || !(mixture.stddevs[c] >= 0.0))
      throw InvalidArgument("mixture weights and stddevs must be non-negative");
    total += mixture.weights[c];
  }
  if (!(total > 0.0)) throw InvalidArgument("mixture weights must not all be zero");

  RngStream rng(seed, 0);
  Matrix out(facilities, customers);
  for (double& entry : out.data) {
    const double u = rng.uniform() * total;
    std::size_t component = k - 1;
    double cumulative = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      cumulative += mixture.weights[c];
      if (u < cumulative) {
        component = c;
        break;
      }
    }
    entry = mixture.means[component] + mixture.stddevs[component] * rng.normal();
  }
  return out;
}

FacilityLocationModel generate_facility_instance(int customers, int facilities,
                                                 const MixtureParams& mixture, double penalty,
                                                 std::uint64_t seed) {
  return {generate_facility_utilities(customers, facilities, mixture, seed), penalty};
}

// ---------------------------------------------------------------------------

TableModel::TableModel(Domain domain, std::vector<double> values)
    : domain_(domain), values_(std::move(values)) {
  if (values_.size() != domain_.checked_state_count())
    throw InvalidArgument("table size does not match domain state count");
}

TableModel::TableModel(const SetFunctionTable& table)
    : TableModel(Domain::binary(table.dim()),
                 std::vector<double>(table.values().begin(), table.values().end())) {}

double TableModel::energy(std::span<const int> state) const {
  return values_[state_index(state, domain_)];
}

TableModel random_table_model(const Domain& domain, std::uint64_t seed, double scale) {
  RngStream rng(seed, 0);
  std::vector<double> values(domain.checked_state_count());
  for (double& v : values) v = scale * rng.normal();
  return {domain, std::move(values)};
}

// ---------------------------------------------------------------------------

QuadraticModel::QuadraticModel(QuadraticForm form) : domain_(Domain::binary(std::max(form.dim, 1))) {
  const int d = form.dim;
  if (d < 1) throw InvalidArgument("quadratic form dimension must be positive");
  if (form.a.size() != static_cast<std::size_t>(d) * d || form.b.size() != static_cast<std::size_t>(d))
    throw InvalidArgument("quadratic form has inconsistent sizes");
  QuadraticForm normalized{d, std::vector<double>(form.a.size(), 0.0), form.b, form.offset};
  for (int i = 0; i < d; ++i) {
    normalized.b[i] += form.a[static_cast<std::size_t>(i) * d + i];
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      normalized.a[static_cast<std::size_t>(i) * d + j] =
          0.5 * (form.a[static_cast<std::size_t>(i) * d + j] +
                 form.a[static_cast<std::size_t>(j) * d + i]);
    }
  }
  form_ = std::move(normalized);
}

double QuadraticModel::energy(std::span<const int> state) const {
  std::vector<double> x(state.begin(), state.end());
  return form_.evaluate(x);
}

std::vector<double> quadratic_gradient(const QuadraticForm& form, std::span<const double> x) {
  const int d = form.dim;
  std::vector<double> grad(form.b.begin(), form.b.end());
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      grad[i] += (form.a[static_cast<std::size_t>(i) * d + j] +
                  form.a[static_cast<std::size_t>(j) * d + i]) * x[j];
  return grad;
}

std::vector<double> QuadraticModel::gradient(std::span<const double> x) const {
  return quadratic_gradient(form_, x);
}

FlipDifferences QuadraticModel::differences(std::span<const int> state) const {
  const int d = form_.dim;
  std::vector<double> x(state.begin(), state.end());
  const auto grad = gradient(x);
  FlipDifferences out{Encoding::binary, d, 2, std::vector<double>(static_cast<std::size_t>(d))};
  // Zero diagonal makes the gradient at a vertex the exact discrete slope.
  for (int i = 0; i < d; ++i) out.values[i] = state[i] == 0 ? grad[i] : -grad[i];
  return out;
}

}  // namespace newtonmc
