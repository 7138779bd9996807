// Python bindings for the sampler library.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "newtonmc/diagnostics.hpp"
#include "newtonmc/exact.hpp"
#include "newtonmc/finite_diff.hpp"
#include "newtonmc/harness.hpp"
#include "newtonmc/models.hpp"
#include "newtonmc/proposals.hpp"

namespace py = pybind11;
using namespace newtonmc;

namespace {

py::array_t<double> proposal_table(const ProposalDistribution& q) {
  py::array_t<double> out({q.dim(), q.levels()});
  auto view = out.mutable_unchecked<2>();
  for (int i = 0; i < q.dim(); ++i)
    for (int l = 0; l < q.levels(); ++l) view(i, l) = q.prob(i, l);
  return out;
}

py::dict trace_dict(const RunTrace& trace) {
  const auto n = static_cast<py::ssize_t>(trace.records.size());
  py::array_t<std::uint64_t> step(n);
  py::array_t<double> energy(n), acc_prob(n), alpha(n);
  py::array_t<bool> accepted(n);
  py::array_t<int> changed(n);
  py::array_t<std::int64_t> wall(n);
  for (py::ssize_t k = 0; k < n; ++k) {
    const auto& r = trace.records[static_cast<std::size_t>(k)];
    step.mutable_at(k) = r.step;
    energy.mutable_at(k) = r.energy;
    accepted.mutable_at(k) = r.accepted;
    acc_prob.mutable_at(k) = r.acceptance_probability;
    changed.mutable_at(k) = r.changed;
    alpha.mutable_at(k) = r.alpha;
    wall.mutable_at(k) = r.wall_ns;
  }
  py::array_t<int> samples({static_cast<py::ssize_t>(trace.retained), static_cast<py::ssize_t>(trace.dim)});
  std::copy(trace.samples.begin(), trace.samples.end(), samples.mutable_data());
  py::dict out;
  out["step"] = step;
  out["energy"] = energy;
  out["accepted"] = accepted;
  out["acc_prob"] = acc_prob;
  out["changed"] = changed;
  out["alpha"] = alpha;
  out["wall_ns"] = wall;
  out["samples"] = samples;
  out["sample_steps"] = trace.sample_steps;
  out["running_mean"] = trace.running_mean;
  return out;
}

State to_state(const std::vector<int>& s) { return State(s.begin(), s.end()); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Newton-proposal discrete MCMC: samplers, models and exact analysis";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<StateSpaceTooLarge>(m, "StateSpaceTooLarge", PyExc_MemoryError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<harness::ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::enum_<Encoding>(m, "Encoding")
      .value("binary", Encoding::binary)
      .value("ordinal", Encoding::ordinal)
      .value("one_hot", Encoding::one_hot);

  py::class_<Domain>(m, "Domain")
      .def(py::init<int, int, Encoding>(), py::arg("dim"), py::arg("levels"), py::arg("encoding"))
      .def_static("binary", &Domain::binary, py::arg("dim"))
      .def_property_readonly("dim", &Domain::dim)
      .def_property_readonly("levels", &Domain::levels)
      .def_property_readonly("encoding", &Domain::encoding)
      .def("state_count", [](const Domain& d) { return d.state_count(); });

  m.def("enumerate_states", [](const Domain& d, std::uint64_t cap) { return enumerate_states(d, cap); },
        py::arg("domain"), py::arg("cap") = kDefaultStateCap);

  py::class_<QuadraticForm>(m, "QuadraticForm")
      .def_readonly("dim", &QuadraticForm::dim)
      .def_readonly("a", &QuadraticForm::a)
      .def_readonly("b", &QuadraticForm::b)
      .def_readonly("offset", &QuadraticForm::offset);

  py::class_<EnergyModel>(m, "EnergyModel")
      .def_property_readonly("domain", &EnergyModel::domain, py::return_value_policy::reference_internal)
      .def("energy", [](const EnergyModel& e, const std::vector<int>& s) {
        validate_state(s, e.domain());
        return e.energy(s);
      })
      .def("differences", [](const EnergyModel& e, const std::vector<int>& s) {
        return forward_difference(e, s).values;
      })
      .def("quadratic_form", &EnergyModel::quadratic_form);

  py::class_<IsingModel, EnergyModel>(m, "IsingModel")
      .def(py::init<int, int, double, double>(), py::arg("height"), py::arg("width"),
           py::arg("coupling") = 0.1, py::arg("bias") = 0.2);
  py::class_<PottsModel, EnergyModel>(m, "PottsModel")
      .def(py::init<int, int, double, std::vector<double>, Encoding>(), py::arg("height"), py::arg("width"),
           py::arg("coupling"), py::arg("bias"), py::arg("encoding") = Encoding::one_hot);
  py::class_<FacilityLocationModel, EnergyModel>(m, "FacilityLocationModel")
      .def(py::init([](const std::vector<std::vector<double>>& rows, double penalty) {
             Matrix c(static_cast<int>(rows.size()), rows.empty() ? 0 : static_cast<int>(rows[0].size()));
             for (int r = 0; r < c.rows; ++r) {
               if (static_cast<int>(rows[r].size()) != c.cols) throw InvalidArgument("ragged utility matrix");
               for (int j = 0; j < c.cols; ++j) c(r, j) = rows[r][j];
             }
             return FacilityLocationModel(std::move(c), penalty);
           }),
           py::arg("utility"), py::arg("penalty"))
      .def_static(
          "generate",
          [](int customers, int facilities, double penalty, std::uint64_t seed) {
            return generate_facility_instance(customers, facilities, MixtureParams{}, penalty, seed);
          },
          py::arg("customers"), py::arg("facilities"), py::arg("penalty"), py::arg("seed"));
  py::class_<TableModel, EnergyModel>(m, "TableModel")
      .def(py::init<Domain, std::vector<double>>(), py::arg("domain"), py::arg("values"))
      .def_static("random", &random_table_model, py::arg("domain"), py::arg("seed"), py::arg("scale") = 1.0)
      .def_property_readonly("values", &TableModel::values);
  py::class_<QuadraticModel, EnergyModel>(m, "QuadraticModel")
      .def(py::init([](int dim, std::vector<double> a, std::vector<double> b, double offset) {
             return QuadraticModel(QuadraticForm{dim, std::move(a), std::move(b), offset});
           }),
           py::arg("dim"), py::arg("a"), py::arg("b"), py::arg("offset") = 0.0);

  py::enum_<ProposalFamily>(m, "ProposalFamily")
      .value("newton", ProposalFamily::newton)
      .value("locally_balanced", ProposalFamily::locally_balanced)
      .value("gibbs", ProposalFamily::gibbs);

  py::class_<ProposalSpec>(m, "ProposalSpec")
      .def(py::init([](ProposalFamily family, double alpha, bool mh, double decay, bool include_self) {
             ProposalSpec spec{family, alpha, mh, decay, include_self};
             spec.validate();
             return spec;
           }),
           py::arg("family") = ProposalFamily::newton, py::arg("alpha") = 1.0, py::arg("mh") = true,
           py::arg("decay") = 1.0, py::arg("include_self") = false)
      .def_readonly("family", &ProposalSpec::family)
      .def_readonly("alpha", &ProposalSpec::alpha)
      .def_readonly("mh", &ProposalSpec::mh)
      .def_readonly("decay", &ProposalSpec::decay);

  m.def(
      "newton_proposal",
      [](const EnergyModel& model, const std::vector<int>& state, double alpha) {
        return proposal_table(newton_proposal(model, state, alpha));
      },
      py::arg("model"), py::arg("state"), py::arg("alpha"),
      "Per-coordinate proposal probabilities, shape (dim, levels).");

  m.def(
      "run_chain",
      [](const EnergyModel& model, const ProposalSpec& spec, std::uint64_t steps, std::uint64_t seed,
         std::optional<std::vector<int>> initial, std::uint64_t thin) {
        RunOptions options;
        options.steps = steps;
        options.seed = seed;
        options.thin = thin;
        if (initial) {
          validate_state(*initial, model.domain());
          options.initial = to_state(*initial);
        }
        RunTrace trace;
        {
          py::gil_scoped_release release;
          trace = run_chain(model, spec, options);
        }
        return trace_dict(trace);
      },
      py::arg("model"), py::arg("spec"), py::arg("steps"), py::arg("seed") = 0, py::arg("initial") = py::none(),
      py::arg("thin") = 1);

  m.def("exact_mean", [](const EnergyModel& model) { return exact_mean(model).mean; }, py::arg("model"));
  m.def(
      "rmse", [](const std::vector<double>& e, const std::vector<double>& t) { return rmse(e, t); },
      py::arg("estimate"), py::arg("truth"));
  m.def(
      "effective_sample_size", [](const std::vector<double>& x) { return effective_sample_size(x); },
      py::arg("series"));
  m.def(
      "majority_vote",
      [](py::array_t<int, py::array::c_style | py::array::forcecast> samples, int budget) {
        if (samples.ndim() != 2) throw InvalidArgument("samples must be a 2-d array");
        const auto rows = static_cast<int>(samples.shape(0)), cols = static_cast<int>(samples.shape(1));
        return dimension_wise_majority_vote(std::span<const int>(samples.data(), samples.size()), rows, cols,
                                            budget);
      },
      py::arg("samples"), py::arg("budget"));

  m.def(
      "multilinear_extension",
      [](const EnergyModel& model, const std::vector<double>& x) {
        return multilinear_extension(SetFunctionTable::from_model(model), x);
      },
      py::arg("model"), py::arg("x"));
  m.def(
      "multilinear_gradient",
      [](const EnergyModel& model, const std::vector<double>& x) {
        return multilinear_gradient(SetFunctionTable::from_model(model), x);
      },
      py::arg("model"), py::arg("x"));

  m.def("target_distribution", [](const EnergyModel& model) { return target_distribution(model); });
  m.def(
      "una_kernel", [](const EnergyModel& model, double alpha) { return build_una_kernel(model, alpha).matrix; },
      py::arg("model"), py::arg("alpha"));
  m.def(
      "mana_kernel", [](const EnergyModel& model, double alpha) { return build_mana_kernel(model, alpha).matrix; },
      py::arg("model"), py::arg("alpha"));
  m.def(
      "lb_kernel", [](const EnergyModel& model) { return build_lb_kernel(model).matrix; }, py::arg("model"));
  m.def(
      "stationary_distribution",
      [](const Eigen::MatrixXd& kernel) { return stationary_distribution(kernel); }, py::arg("kernel"));
  m.def(
      "spectral_gap", [](const Eigen::MatrixXd& kernel) { return spectral_gap(kernel); }, py::arg("kernel"));

  m.def(
      "verify_theorem_one",
      [](const EnergyModel& model, const std::vector<double>& alphas) {
        py::list out;
        for (const auto& r : verify_theorem_one(model, alphas)) {
          py::dict d;
          d["alpha"] = r.alpha;
          d["l1_distance"] = r.l1_distance;
          d["bound"] = r.bound;
          d["lambda_min"] = r.lambda_min;
          d["partition_function"] = r.partition_function;
          d["reversibility_residual"] = r.reversibility_residual;
          d["holds"] = r.holds();
          out.append(d);
        }
        return out;
      },
      py::arg("model"), py::arg("alphas"));
  m.def(
      "verify_theorem_two",
      [](const EnergyModel& model, double alpha) {
        const auto r = verify_theorem_two(model, alpha, hamming_weight);
        py::dict d;
        d["alpha"] = r.alpha;
        d["lipschitz_L"] = r.lipschitz_L;
        d["diameter_D"] = r.diameter_D;
        d["c"] = r.c;
        d["gap_q"] = r.gap_q;
        d["gap_qtilde"] = r.gap_qtilde;
        d["var_q"] = r.var_q;
        d["var_qtilde"] = r.var_qtilde;
        d["var_pi"] = r.var_pi;
        d["holds"] = r.holds();
        return d;
      },
      py::arg("model"), py::arg("alpha"));

  m.def(
      "run_command",
      [](const std::string& command, const std::string& config_text, const std::filesystem::path& out,
         bool overwrite) {
        const auto config = harness::parse_config(config_text);
        harness::CommandOptions options;
        options.out = out;
        options.overwrite = overwrite;
        py::gil_scoped_release release;
        if (command == "sample") harness::cmd_sample(config, options);
        else if (command == "bench") harness::cmd_bench(config, options);
        else if (command == "exact") return !harness::cmd_exact(config, options).violated;
        else throw InvalidArgument("unknown command '" + command + "'");
        return true;
      },
      py::arg("command"), py::arg("config"), py::arg("out"), py::arg("overwrite") = false,
      "Runs a harness command on config text; returns False if a theorem check fails.");
}
