#include "ope/experiment.hpp"

#include "ope/dataset.hpp"
#include "ope/errors.hpp"
#include "ope/ips.hpp"
#include "ope/metrics.hpp"
#include "ope/oracles.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <thread>

namespace ope {

namespace {

TabularMDP build_mdp(const ExperimentConfig& cfg, std::vector<StateIndex>& observation, StateSpace& space, bool& relabel)
{
   const auto T = cfg.horizon();
   const double gamma = cfg.discount();
   GraphSpec graph{T, cfg.stochastic_env, cfg.stochastic_rewards, cfg.sparse_rewards, gamma};
   relabel = false;
   auto identity = [&](const TabularMDP& mdp) {
      observation.resize(mdp.n_states());
      for(StateIndex s = 0; s < mdp.n_states(); ++s)
         observation[s] = s;
      space = mdp.space();
   };
   switch(cfg.env) {
      case EnvKind::graph: {
         auto mdp = build_graph(graph);
         identity(mdp);
         return mdp;
      }
      case EnvKind::graph_pomdp: {
         auto po = build_graph_pomdp({graph, cfg.pomdp_H, cfg.expose_parity});
         observation = std::move(po.observation);
         space = std::move(po.observed_space);
         relabel = ! cfg.expose_parity;
         return std::move(po.mdp);
      }
      case EnvKind::graph_mc: {
         auto mdp = build_graph_mc({T, gamma});
         identity(mdp);
         return mdp;
      }
      case EnvKind::gridworld: {
         GridworldSpec spec;
         if(cfg.layout)
            spec.layout = load_gridworld_layout(*cfg.layout);
         spec.T = T;
         spec.gamma = gamma;
         auto mdp = build_gridworld(spec);
         identity(mdp);
         return mdp;
      }
   }
   fail(ErrorKind::invalid_argument, "unknown environment");
}

TabularPolicy build_policy(const PolicySpec& spec, const TabularMDP& mdp, const StateSpace& space)
{
   switch(spec.kind) {
      case PolicySpec::Kind::uniform: return TabularPolicy::uniform(space.n_states, space.n_actions);
      case PolicySpec::Kind::static_p:
         require(space.n_actions == 2, "static policies need two actions");
         return static_policy(space.n_states, spec.param);
      case PolicySpec::Kind::eps_greedy: return eps_greedy(value_iteration(mdp), spec.param);
   }
   fail(ErrorKind::invalid_argument, "unknown policy kind");
}

std::string status_of(const OpeError& e)
{
   return std::string(to_string(e.kind()));
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m)
{
   nlohmann::json rows = nlohmann::json::array();
   for(Eigen::Index r = 0; r < m.rows(); ++r) {
      std::vector<double> row(m.cols());
      for(Eigen::Index c = 0; c < m.cols(); ++c)
         row[c] = m(r, c);
      rows.push_back(std::move(row));
   }
   return rows;
}

void dump_json(const std::filesystem::path& file, const std::string& text)
{
   std::filesystem::create_directories(file.parent_path());
   std::ofstream out(file);
   out << text << '\n';
}

/// Fitted output of one direct method: its value and, when it has one, a Q table.
struct DirectOutcome {
   double value = std::numeric_limits<double>::quiet_NaN();
   std::string status{status_ok};
   std::optional<QTable> q;
   std::optional<OmegaTable> omega;
};

DirectOutcome run_direct(
   DirectMethod method,
   const Dataset& data,
   const TabularPolicy& pi_e,
   const TabularPolicy& pi_b,
   double gamma,
   const DirectConfig& dcfg)
{
   DirectOutcome out;
   auto from_fit = [&](QFit fit) {
      out.value = direct_value(data, fit.q, pi_e);
      if(! fit.diagnostics.converged)
         out.status = status_non_convergence;
      out.q = std::move(fit.q);
   };
   switch(method) {
      case DirectMethod::AM: {
         const auto model = am_fit(data, gamma);
         out.value = am_value(model, pi_e, dcfg);
         out.q = am_q(model, pi_e);
         break;
      }
      case DirectMethod::FQE: from_fit(fqe(data, pi_e, gamma, dcfg)); break;
      case DirectMethod::RETRACE:
         from_fit(lambda_backup(BackupVariant::retrace, data, pi_e, pi_b, gamma, dcfg));
         break;
      case DirectMethod::TREE: from_fit(lambda_backup(BackupVariant::tree, data, pi_e, pi_b, gamma, dcfg)); break;
      case DirectMethod::QPI:
         from_fit(lambda_backup(BackupVariant::qpi_lambda, data, pi_e, pi_b, gamma, dcfg));
         break;
      case DirectMethod::QREG: {
         auto q = q_reg(data, pi_e, pi_b, gamma, dcfg);
         out.value = direct_value(data, q, pi_e);
         out.q = std::move(q);
         break;
      }
      case DirectMethod::MRDR: {
         auto q = mrdr(data, pi_e, pi_b, gamma, dcfg);
         out.value = direct_value(data, q, pi_e);
         out.q = std::move(q);
         break;
      }
      case DirectMethod::IH: {
         auto omega = ih_fit(data, pi_e, pi_b, gamma, dcfg);
         out.value = ih_estimate(data, omega, pi_e, pi_b, gamma);
         out.omega = std::move(omega);
         break;
      }
   }
   return out;
}

}  // namespace

bool status_has_estimate(std::string_view status) noexcept
{
   return status == status_ok || status == status_non_convergence;
}

ExperimentSetup build_setup(const ExperimentConfig& cfg)
{
   cfg.validate();
   std::vector<StateIndex> observation;
   StateSpace space;
   bool relabel = false;
   TabularMDP mdp = build_mdp(cfg, observation, space, relabel);
   TabularPolicy pi_b = build_policy(cfg.pi_b, mdp, space);
   TabularPolicy pi_e = build_policy(cfg.pi_e, mdp, space);
   TabularPolicy pi_b_sim = relabel ? lift_policy(pi_b, observation) : pi_b;
   TabularPolicy pi_e_sim = relabel ? lift_policy(pi_e, observation) : pi_e;
   return ExperimentSetup{
      std::move(mdp),
      std::move(observation),
      std::move(space),
      relabel,
      std::move(pi_b),
      std::move(pi_e),
      std::move(pi_b_sim),
      std::move(pi_e_sim)};
}

double ground_truth(const ExperimentConfig& cfg, const ExperimentSetup& setup)
{
   if(cfg.ground_truth == GroundTruth::mc)
      return monte_carlo_value(setup.mdp, setup.pi_e_sim, cfg.ground_truth_n, cfg.ground_truth_seed).value;
   return exact_policy_value(setup.mdp, setup.pi_e_sim);
}

std::vector<ReportRow> run_cell(
   const ExperimentConfig& cfg,
   const ExperimentSetup& setup,
   std::size_t n_trajectories,
   std::uint64_t seed,
   double true_value,
   const std::optional<std::filesystem::path>& dump_dir)
{
   const double gamma = cfg.discount();
   const double nan = std::numeric_limits<double>::quiet_NaN();
   std::vector<ReportRow> rows;
   auto emit = [&](std::string name, EstimatorClass cls, double estimate, std::string status) {
      rows.push_back(ReportRow{
         std::string(to_string(cfg.env)),
         cfg.horizon(),
         gamma,
         n_trajectories,
         seed,
         std::move(name),
         std::string(to_string(cls)),
         status_has_estimate(status) ? estimate : nan,
         true_value,
         std::move(status)});
   };

   Dataset sim = generate_dataset(setup.mdp, setup.pi_b_sim, n_trajectories, seed);
   Dataset data = setup.relabel ? observe(sim, setup.observation, setup.space, setup.pi_b) : std::move(sim);
   data.pi_b_known = cfg.pi_b_known;
   if(! cfg.pi_b_known)
      data.pi_b = estimate_behavior_policy(data, cfg.behavior_alpha);
   const TabularPolicy& pi_b = data.pi_b;
   const TabularPolicy& pi_e = setup.pi_e;

   // Importance weights are shared; a support violation fails every weighted estimator.
   std::optional<RhoTable> rho;
   std::string rho_status{status_ok};
   try {
      rho = cumulative_rho(data, pi_e, pi_b);
   } catch(const OpeError& e) {
      rho_status = status_of(e);
   }

   for(auto v : cfg.ips) {
      const auto name = std::string(to_string(v));
      try {
         if(v == IpsVariant::NAIVE) {
            emit(name, EstimatorClass::ips, ips_estimate(v, data, pi_e, pi_b, gamma), std::string(status_ok));
            continue;
         }
         if(! rho) {
            emit(name, EstimatorClass::ips, nan, rho_status);
            continue;
         }
         emit(name, EstimatorClass::ips, ips_estimate(v, data, *rho, gamma), std::string(status_ok));
      } catch(const OpeError& e) {
         emit(name, EstimatorClass::ips, nan, status_of(e));
      }
   }

   const auto cell_tag = std::to_string(n_trajectories) + "_" + std::to_string(seed);
   std::vector<DirectOutcome> outcomes;
   for(auto dm : cfg.direct) {
      DirectOutcome out;
      try {
         out = run_direct(dm, data, pi_e, pi_b, gamma, cfg.direct_cfg);
      } catch(const OpeError& e) {
         out.status = status_of(e);
      }
      emit(std::string(to_string(dm)), EstimatorClass::direct, out.value, out.status);
      if(dump_dir && (out.q || out.omega)) {
         nlohmann::json doc{{"estimator", to_string(dm)}, {"N", n_trajectories}, {"seed", seed}};
         if(out.q)
            doc["q"] = matrix_json(out.q->q);
         if(out.omega)
            doc["omega"] = matrix_json(out.omega->omega);
         dump_json(*dump_dir / "q" / (cell_tag + "_" + std::string(to_string(dm)) + ".json"), doc.dump(1));
      }
      outcomes.push_back(std::move(out));
   }

   for(auto h : cfg.hybrids) {
      for(std::size_t k = 0; k < cfg.direct.size(); ++k) {
         const auto dm = cfg.direct[k];
         if(! produces_q(dm))
            continue;
         const auto& base = outcomes[k];
         const auto name = hybrid_label(h, dm);
         if(! base.q) {
            emit(name, EstimatorClass::hybrid, nan, base.status);
            continue;
         }
         if(! rho) {
            emit(name, EstimatorClass::hybrid, nan, rho_status);
            continue;
         }
         try {
            const auto model = hybrid_model(*base.q, pi_e, data.space);
            double estimate = 0.0;
            switch(h) {
               case HybridMethod::DR: estimate = dr_estimate(data, model, *rho, gamma); break;
               case HybridMethod::WDR: estimate = wdr_estimate(data, model, *rho, gamma); break;
               case HybridMethod::MAGIC: {
                  auto mcfg = cfg.magic_cfg;
                  mcfg.seed = seed;
                  const auto res = magic(data, model, *rho, gamma, mcfg);
                  estimate = res.estimate;
                  if(dump_dir)
                     dump_json(*dump_dir / "magic" / (cell_tag + "_" + std::string(to_string(dm)) + ".json"), magic_diagnostics_json(res));
                  if(! res.qp.converged) {
                     emit(name, EstimatorClass::hybrid, estimate, std::string(status_non_convergence));
                     continue;
                  }
                  break;
               }
            }
            emit(name, EstimatorClass::hybrid, estimate, base.status);
         } catch(const OpeError& e) {
            emit(name, EstimatorClass::hybrid, nan, status_of(e));
         }
      }
   }
   return rows;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opts)
{
   const auto setup = build_setup(cfg);
   ExperimentReport report;
   report.true_value = ground_truth(cfg, setup);
   report.mismatch = policy_mismatch(setup.pi_e, setup.pi_b, cfg.horizon());

   std::vector<std::pair<std::size_t, std::uint64_t>> cells;
   for(auto n : cfg.N)
      for(auto s : cfg.seeds)
         cells.emplace_back(n, s);

   std::vector<std::vector<ReportRow>> results(cells.size());
   std::vector<std::exception_ptr> errors(cells.size());
   std::atomic<std::size_t> next{0};
   auto worker = [&] {
      for(std::size_t k = next++; k < cells.size(); k = next++) {
         try {
            results[k] = run_cell(cfg, setup, cells[k].first, cells[k].second, report.true_value, opts.dump_dir);
         } catch(...) {
            errors[k] = std::current_exception();
         }
      }
   };
   const auto n_threads = std::max<std::size_t>(1, std::min(opts.threads, cells.size()));
   std::vector<std::thread> pool;
   for(std::size_t t = 1; t < n_threads; ++t)
      pool.emplace_back(worker);
   worker();
   for(auto& th : pool)
      th.join();
   for(const auto& e : errors)
      if(e)
         std::rethrow_exception(e);

   for(auto& cell : results)
      for(auto& row : cell)
         report.rows.push_back(std::move(row));
   return report;
}

std::vector<std::string> estimator_names()
{
   std::vector<std::string> names;
   for(auto v : all_ips_variants)
      names.emplace_back(to_string(v));
   for(auto dm : all_direct_methods)
      names.emplace_back(to_string(dm));
   for(auto h : all_hybrid_methods)
      for(auto dm : all_direct_methods)
         if(produces_q(dm))
            names.push_back(hybrid_label(h, dm));
   return names;
}

}  // namespace ope
