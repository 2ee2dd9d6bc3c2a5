#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <vector>

#include "fedexprox/algorithms.hpp"
#include "fedexprox/envelope.hpp"
#include "fedexprox/errors.hpp"
#include "fedexprox/problems.hpp"
#include "fedexprox/theory.hpp"

namespace py = pybind11;
using namespace fedexprox;

namespace {

py::object json_to_py(const nlohmann::json& j) {
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      py::dict d;
      for (const auto& [key, value] : j.items()) {
        d[py::str(key)] = json_to_py(value);
      }
      return d;
    }
    case nlohmann::json::value_t::array: {
      py::list l;
      for (const auto& value : j) l.append(json_to_py(value));
      return l;
    }
    case nlohmann::json::value_t::string:
      return py::str(j.get<std::string>());
    case nlohmann::json::value_t::boolean:
      return py::bool_(j.get<bool>());
    case nlohmann::json::value_t::number_integer:
      return py::int_(j.get<std::int64_t>());
    case nlohmann::json::value_t::number_unsigned:
      return py::int_(j.get<std::uint64_t>());
    case nlohmann::json::value_t::number_float:
      return py::float_(j.get<double>());
    default:
      return py::none();
  }
}

AlphaPolicy make_policy(const std::string& policy, double alpha_value,
                        int local_steps) {
  if (policy == "constant") return ConstantAlpha{alpha_value};
  if (policy == "optimal") return OptimalConstantAlpha{};
  if (policy == "grads") return GradsAlpha{};
  if (policy == "grads_prime") return GradsPrimeAlpha{};
  if (policy == "stops") return StopsAlpha{};
  if (policy == "fedexp") return FedExpAlpha{local_steps};
  throw ContractError("unknown alpha policy \"" + policy + "\"");
}

py::array_t<double> column(const std::vector<RoundRecord>& trace,
                           double RoundRecord::* field) {
  py::array_t<double> out(py::ssize_t(trace.size()));
  auto view = out.mutable_unchecked<1>();
  for (std::size_t i = 0; i < trace.size(); ++i) view(i) = trace[i].*field;
  return out;
}

py::dict run_to_dict(const RunResult& result) {
  py::dict out;
  const auto& trace = result.trace;
  py::array_t<std::uint64_t> ks(py::ssize_t(trace.size()));
  auto kview = ks.mutable_unchecked<1>();
  std::vector<std::vector<std::size_t>> sampled;
  sampled.reserve(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    kview(i) = trace[i].k;
    sampled.push_back(trace[i].sampled);
  }
  out["k"] = ks;
  out["f_subopt"] = column(trace, &RoundRecord::f_subopt);
  out["env_subopt"] = column(trace, &RoundRecord::env_subopt);
  out["dist_sq"] = column(trace, &RoundRecord::dist_sq);
  out["alpha"] = column(trace, &RoundRecord::alpha_used);
  out["sampled"] = py::cast(sampled);
  out["status"] = result.status == RunStatus::converged ? "converged"
                                                        : "completed";
  out["final_x"] = result.final_x;
  out["l_gamma"] = result.l_gamma;
  out["l_max"] = py::cast(result.l_max);
  out["l_gamma_tau"] = result.l_gamma_tau;
  out["constant_alpha"] = py::cast(result.constant_alpha);
  return out;
}

}  // namespace

PYBIND11_MODULE(_fedexprox, m) {
  m.doc() =
      "Federated proximal-point optimization with server-side extrapolation: "
      "problem generators, Moreau-envelope calculus, tau-nice runs, and "
      "iteration-complexity constants.";
  m.attr("__version__") = FEDEXPROX_VERSION;

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ContractError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  py::class_<FederatedProblem>(m, "Problem")
      .def_property_readonly("n", &FederatedProblem::n)
      .def_property_readonly("d", &FederatedProblem::d)
      .def_property_readonly("interpolated", &FederatedProblem::interpolated)
      .def_property_readonly("all_smooth", &FederatedProblem::all_smooth)
      .def_property_readonly("l_max", &FederatedProblem::l_max)
      .def_property_readonly("f_star", &FederatedProblem::f_star)
      .def_property_readonly(
          "client_smoothness",
          [](const FederatedProblem& p) { return p.client_smoothness(); })
      .def("objective", &FederatedProblem::objective, py::arg("x"))
      .def("project",
           [](const FederatedProblem& p, const Eigen::VectorXd& x) {
             return p.solution_set().project(x);
           },
           py::arg("x"), "Orthogonal projection onto the solution set.")
      .def("distance_squared",
           [](const FederatedProblem& p, const Eigen::VectorXd& x) {
             return p.solution_set().distance_squared(x);
           },
           py::arg("x"))
      .def_property_readonly("min_norm_point",
                             [](const FederatedProblem& p) {
                               return p.solution_set().min_norm_point();
                             })
      .def("client_value",
           [](const FederatedProblem& p, std::size_t i,
              const Eigen::VectorXd& x) {
             return objective_value(p.client(i), x);
           },
           py::arg("i"), py::arg("x"))
      .def("strong_convexity_constant",
           [](const FederatedProblem& p) { return strong_convexity_constant(p); })
      .def("to_json_string",
           [](const FederatedProblem& p) { return problem_to_json(p).dump(2); });

  m.def("gen_regression", &gen_regression, py::arg("clients"),
        py::arg("rows_per_client"), py::arg("dim"), py::arg("seed") = 0,
        "Interpolated least-squares instance from the counter-based stream.");
  m.def("gen_example1", &gen_example1, py::arg("n"), py::arg("theta") = 1.0,
        "Separable scalar instance: client i holds 0.5*theta*x_i^2.");
  m.def("gen_feasibility", &gen_feasibility, py::arg("clients"),
        py::arg("rows_per_set"), py::arg("dim"), py::arg("seed") = 0,
        "Affine feasibility instance with a guaranteed common point.");
  m.def("save_problem", &save_problem, py::arg("problem"), py::arg("path"));
  m.def("load_problem", &load_problem, py::arg("path"));

  py::class_<EnvelopeContext>(m, "Envelope")
      .def(py::init([](double gamma, const FederatedProblem& p) {
             return EnvelopeContext(gamma, p.clients());
           }),
           py::arg("gamma"), py::arg("problem"),
           "Fixes gamma over the problem's clients and prepares prox maps.")
      .def_property_readonly("gamma", &EnvelopeContext::gamma)
      .def_property_readonly("n", &EnvelopeContext::n)
      .def("prox",
           [](const EnvelopeContext& ctx, std::size_t i,
              const Eigen::VectorXd& x) {
             return prox(ctx.client(i), ctx.gamma(), x);
           },
           py::arg("i"), py::arg("x"))
      .def("moreau_value",
           [](const EnvelopeContext& ctx, std::size_t i,
              const Eigen::VectorXd& x) { return moreau_value(ctx, i, x); },
           py::arg("i"), py::arg("x"))
      .def("moreau_grad",
           [](const EnvelopeContext& ctx, std::size_t i,
              const Eigen::VectorXd& x) { return moreau_grad(ctx, i, x); },
           py::arg("i"), py::arg("x"))
      .def("average_value",
           [](const EnvelopeContext& ctx, const Eigen::VectorXd& x) {
             return average_envelope_value(ctx, x);
           },
           py::arg("x"))
      .def("average_grad",
           [](const EnvelopeContext& ctx, const Eigen::VectorXd& x) {
             return average_envelope_grad(ctx, x);
           },
           py::arg("x"))
      .def("smoothness", [](const EnvelopeContext& ctx) {
        const EnvelopeSmoothness s = envelope_smoothness(ctx);
        return py::make_tuple(s.l_gamma, s.per_client);
      });

  m.def("sample_tau_nice",
        [](std::size_t n, std::size_t tau, std::uint64_t seed,
           std::uint64_t k) { return sample_tau_nice({n, tau, seed}, k); },
        py::arg("n"), py::arg("tau"), py::arg("seed"), py::arg("k"),
        "Uniform tau-subset for round k; pure function of (seed, k).");

  m.def(
      "run",
      [](const FederatedProblem& problem, const std::string& policy,
         double alpha_value, double gamma, std::size_t tau,
         std::uint64_t rounds, std::uint64_t seed, double halt_tolerance,
         bool theory_mode, std::optional<Eigen::VectorXd> x0,
         int local_steps) {
        AlgorithmConfig config;
        config.alpha = make_policy(policy, alpha_value, local_steps);
        config.gamma = gamma;
        config.tau = tau;
        config.rounds = rounds;
        config.seed = seed;
        config.halt_tolerance = halt_tolerance;
        config.theory_mode = theory_mode;
        if (x0) config.x0 = *x0;
        return run_to_dict(run(problem, config));
      },
      py::arg("problem"), py::arg("policy") = "optimal",
      py::arg("alpha_value") = 1.0, py::arg("gamma") = 1.0, py::arg("tau") = 0,
      py::arg("rounds") = 100, py::arg("seed") = 0,
      py::arg("halt_tolerance") = 1e-14, py::arg("theory_mode") = true,
      py::arg("x0") = py::none(), py::arg("local_steps") = 10,
      "Prox-averaged extrapolated rounds; returns the trace and constants. "
      "tau = 0 means full participation.");

  m.def("l_gamma_tau", &l_gamma_tau, py::arg("gamma"), py::arg("n"),
        py::arg("tau"), py::arg("l_max"), py::arg("l_gamma"));
  m.def("l_gamma_tau_nonsmooth", &l_gamma_tau_nonsmooth, py::arg("gamma"),
        py::arg("n"), py::arg("tau"), py::arg("l_gamma"));
  m.def("rate_constant", &rate_constant, py::arg("gamma"), py::arg("alpha"),
        py::arg("l_max"), py::arg("l_gamma_tau"));
  m.def("optimal_alpha", &optimal_alpha, py::arg("gamma"),
        py::arg("l_gamma_tau"));
  m.def("fedprox_speedup", &fedprox_speedup, py::arg("gamma"),
        py::arg("l_gamma_tau"),
        "Exact C(alpha = 1) / C(alpha_opt) for the given constants.");
  m.def("strongly_convex_rate", &strongly_convex_rate, py::arg("mu"),
        py::arg("gamma"), py::arg("alpha"), py::arg("l_max"),
        py::arg("l_gamma_tau"));
  m.def(
      "rate_report",
      [](double gamma, std::size_t n, std::size_t tau,
         std::optional<double> l_max, double l_gamma,
         const std::vector<double>& client_l) {
        return json_to_py(
            rate_report_to_json(make_rate_report(gamma, n, tau, l_max,
                                                 l_gamma, client_l)));
      },
      py::arg("gamma"), py::arg("n"), py::arg("tau"), py::arg("l_max"),
      py::arg("l_gamma"), py::arg("client_l") = std::vector<double>{},
      "Iteration-complexity constants for one (problem, gamma, tau) pair.");
}
