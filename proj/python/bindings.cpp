#include "ope/config.hpp"
#include "ope/dataset.hpp"
#include "ope/direct.hpp"
#include "ope/environments.hpp"
#include "ope/errors.hpp"
#include "ope/experiment.hpp"
#include "ope/hybrid.hpp"
#include "ope/ips.hpp"
#include "ope/metrics.hpp"
#include "ope/oracles.hpp"
#include "ope/report.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace ope;

namespace {

TabularPolicy as_policy(const Eigen::MatrixXd& probs)
{
   return TabularPolicy(probs);
}

IpsVariant ips_variant(const std::string& name)
{
   const auto v = parse_ips_variant(name);
   require(v.has_value(), "unknown IPS variant '" + name + "'");
   return *v;
}

QTable direct_q(
   const std::string& method,
   const Dataset& data,
   const TabularPolicy& pi_e,
   const TabularPolicy& pi_b,
   double gamma,
   const DirectConfig& cfg)
{
   if(method == "AM")
      return am_q(am_fit(data, gamma), pi_e);
   if(method == "FQE")
      return fqe(data, pi_e, gamma, cfg).q;
   if(method == "RETRACE")
      return lambda_backup(BackupVariant::retrace, data, pi_e, pi_b, gamma, cfg).q;
   if(method == "TREE")
      return lambda_backup(BackupVariant::tree, data, pi_e, pi_b, gamma, cfg).q;
   if(method == "QPI")
      return lambda_backup(BackupVariant::qpi_lambda, data, pi_e, pi_b, gamma, cfg).q;
   if(method == "QREG")
      return q_reg(data, pi_e, pi_b, gamma, cfg);
   if(method == "MRDR")
      return mrdr(data, pi_e, pi_b, gamma, cfg);
   fail(ErrorKind::invalid_argument, "no Q table for direct method '" + method + "'");
}

py::dict row_dict(const ReportRow& r)
{
   py::dict d;
   d["env"] = r.env;
   d["T"] = r.T;
   d["gamma"] = r.gamma;
   d["N"] = r.N;
   d["seed"] = r.seed;
   d["estimator"] = r.estimator;
   d["class"] = r.cls;
   d["estimate"] = r.estimate;
   d["true_value"] = r.true_value;
   d["status"] = r.status;
   return d;
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
   m.doc() = "Tabular off-policy evaluation estimators";

   static py::exception<OpeError> ope_error(m, "OpeError", PyExc_ValueError);
   py::register_exception_translator([](std::exception_ptr p) {
      try {
         if(p)
            std::rethrow_exception(p);
      } catch(const OpeError& e) {
         py::object type = ope_error;
         py::object value = type(e.what());
         value.attr("kind") = std::string(to_string(e.kind()));
         PyErr_SetObject(type.ptr(), value.ptr());
      }
   });

   py::class_<TabularMDP>(m, "TabularMDP")
      .def_property_readonly("n_states", &TabularMDP::n_states)
      .def_property_readonly("n_actions", &TabularMDP::n_actions)
      .def_property_readonly("horizon", &TabularMDP::horizon)
      .def_property_readonly("gamma", &TabularMDP::gamma)
      .def_property_readonly("absorbing_state", &TabularMDP::absorbing_state);

   py::class_<Dataset>(m, "Dataset")
      .def("__len__", &Dataset::size)
      .def_readonly("horizon", &Dataset::horizon)
      .def_readonly("seed", &Dataset::seed)
      .def_property_readonly("states", [](const Dataset& d) {
         std::vector<std::vector<StateIndex>> out;
         for(const auto& t : d.trajectories)
            out.push_back(t.states);
         return out;
      })
      .def_property_readonly("actions", [](const Dataset& d) {
         std::vector<std::vector<ActionIndex>> out;
         for(const auto& t : d.trajectories)
            out.push_back(t.actions);
         return out;
      })
      .def_property_readonly("rewards", [](const Dataset& d) {
         std::vector<std::vector<double>> out;
         for(const auto& t : d.trajectories)
            out.push_back(t.rewards);
         return out;
      });

   py::class_<DirectConfig>(m, "DirectConfig")
      .def(py::init<>())
      .def_readwrite("fqe_eps", &DirectConfig::fqe_eps)
      .def_readwrite("fqe_max_iter", &DirectConfig::fqe_max_iter)
      .def_readwrite("backup_eps", &DirectConfig::backup_eps)
      .def_readwrite("backup_max_iter", &DirectConfig::backup_max_iter)
      .def_readwrite("lambda_", &DirectConfig::lambda)
      .def_readwrite("reg_omega", &DirectConfig::reg_omega)
      .def_readwrite("ih_reg", &DirectConfig::ih_reg);

   m.def(
      "graph",
      [](std::size_t T, bool stochastic_env, bool stochastic_rewards, bool sparse_rewards, double gamma) {
         return build_graph({T, stochastic_env, stochastic_rewards, sparse_rewards, gamma});
      },
      py::arg("T") = 4, py::arg("stochastic_env") = false, py::arg("stochastic_rewards") = false,
      py::arg("sparse_rewards") = false, py::arg("gamma") = 0.98);
   m.def(
      "graph_mc",
      [](std::size_t T, double gamma) { return build_graph_mc({T, gamma}); },
      py::arg("T") = 250, py::arg("gamma") = 0.99);
   m.def(
      "gridworld",
      [](std::size_t T, double gamma) { return build_gridworld({default_gridworld_layout(), T, gamma}); },
      py::arg("T") = 25, py::arg("gamma") = 0.98);

   m.def("static_policy", [](std::size_t n, double p0) { return static_policy(n, p0).probs(); });
   m.def("uniform_policy", [](std::size_t n, std::size_t a) { return TabularPolicy::uniform(n, a).probs(); });
   m.def(
      "eps_greedy_policy",
      [](const TabularMDP& mdp, double eps) { return eps_greedy(value_iteration(mdp), eps).probs(); });

   m.def("exact_value", [](const TabularMDP& mdp, const Eigen::MatrixXd& pi) {
      return exact_policy_value(mdp, as_policy(pi));
   });
   m.def(
      "generate_dataset",
      [](const TabularMDP& mdp, const Eigen::MatrixXd& pi_b, std::size_t n, std::uint64_t seed) {
         return generate_dataset(mdp, as_policy(pi_b), n, seed);
      },
      py::arg("mdp"), py::arg("pi_b"), py::arg("n"), py::arg("seed"));

   m.def(
      "ips_estimate",
      [](const std::string& variant, const Dataset& data, const Eigen::MatrixXd& pi_e, const Eigen::MatrixXd& pi_b,
         double gamma) { return ips_estimate(ips_variant(variant), data, as_policy(pi_e), as_policy(pi_b), gamma); },
      py::arg("variant"), py::arg("data"), py::arg("pi_e"), py::arg("pi_b"), py::arg("gamma"));

   m.def(
      "direct_q",
      [](const std::string& method, const Dataset& data, const Eigen::MatrixXd& pi_e, const Eigen::MatrixXd& pi_b,
         double gamma, const DirectConfig& cfg) {
         return direct_q(method, data, as_policy(pi_e), as_policy(pi_b), gamma, cfg).q;
      },
      py::arg("method"), py::arg("data"), py::arg("pi_e"), py::arg("pi_b"), py::arg("gamma"),
      py::arg("config") = DirectConfig{});
   m.def(
      "direct_value",
      [](const Dataset& data, const Eigen::MatrixXd& q, const Eigen::MatrixXd& pi_e) {
         return direct_value(data, QTable{q}, as_policy(pi_e));
      });
   m.def(
      "ih_estimate",
      [](const Dataset& data, const Eigen::MatrixXd& pi_e, const Eigen::MatrixXd& pi_b, double gamma,
         const DirectConfig& cfg) {
         const auto e = as_policy(pi_e);
         const auto b = as_policy(pi_b);
         return ih_estimate(data, ih_fit(data, e, b, gamma, cfg), e, b, gamma);
      },
      py::arg("data"), py::arg("pi_e"), py::arg("pi_b"), py::arg("gamma"), py::arg("config") = DirectConfig{});

   m.def(
      "hybrid_estimate",
      [](const std::string& method, const Dataset& data, const Eigen::MatrixXd& q, const Eigen::MatrixXd& pi_e,
         const Eigen::MatrixXd& pi_b, double gamma, std::uint64_t seed) {
         const auto e = as_policy(pi_e);
         const auto b = as_policy(pi_b);
         if(method == "DR")
            return dr_estimate(data, QTable{q}, e, b, gamma);
         if(method == "WDR")
            return wdr_estimate(data, QTable{q}, e, b, gamma);
         if(method == "MAGIC") {
            MagicConfig cfg;
            cfg.seed = seed;
            return magic(data, QTable{q}, e, b, gamma, cfg).estimate;
         }
         fail(ErrorKind::invalid_argument, "unknown hybrid method '" + method + "'");
      },
      py::arg("method"), py::arg("data"), py::arg("q"), py::arg("pi_e"), py::arg("pi_b"), py::arg("gamma"),
      py::arg("seed") = 0);

   m.def("relative_mse", &relative_mse);
   m.def("near_top_frequency", &near_top_frequency);
   m.def("policy_mismatch", [](const Eigen::MatrixXd& pi_e, const Eigen::MatrixXd& pi_b, std::size_t T) {
      return policy_mismatch(as_policy(pi_e), as_policy(pi_b), T);
   });

   m.def("estimator_names", &estimator_names);
   m.def(
      "run_experiment",
      [](const std::string& config_text, std::size_t threads) {
         std::istringstream in(config_text);
         const auto cfg = parse_config(in);
         ExperimentReport report;
         {
            py::gil_scoped_release release;
            report = run_experiment(cfg, {threads, {}});
         }
         py::list rows;
         for(const auto& r : report.rows)
            rows.append(row_dict(r));
         py::dict out;
         out["rows"] = rows;
         out["true_value"] = report.true_value;
         out["mismatch"] = report.mismatch;
         return out;
      },
      py::arg("config"), py::arg("threads") = 1);
}
