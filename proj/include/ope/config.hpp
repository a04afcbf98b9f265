#pragma once

#include "ope/direct.hpp"
#include "ope/hybrid.hpp"
#include "ope/ips.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ope {

enum class EnvKind { graph, graph_pomdp, graph_mc, gridworld };

std::string_view to_string(EnvKind kind) noexcept;

/// How a policy is built for the configured environment:
///   static:p       pi(a=0) = p in every state (binary-action envs)
///   eps_greedy:e   (1 - e) on the optimal action plus e uniform
///   uniform        equal probability on every action
struct PolicySpec {
   enum class Kind { static_p, eps_greedy, uniform } kind = Kind::uniform;
   double param = 0.0;

   static PolicySpec parse(const std::string& text);
   [[nodiscard]] std::string str() const;
};

enum class EstimatorClass { ips, direct, hybrid };

std::string_view to_string(EstimatorClass c) noexcept;

enum class DirectMethod { AM, FQE, RETRACE, TREE, QPI, QREG, MRDR, IH };
enum class HybridMethod { DR, WDR, MAGIC };

inline constexpr std::array all_direct_methods{
   DirectMethod::AM,   DirectMethod::FQE,  DirectMethod::RETRACE, DirectMethod::TREE,
   DirectMethod::QPI,  DirectMethod::QREG, DirectMethod::MRDR,    DirectMethod::IH};
inline constexpr std::array all_hybrid_methods{HybridMethod::DR, HybridMethod::WDR, HybridMethod::MAGIC};

std::string_view to_string(DirectMethod m) noexcept;
std::string_view to_string(HybridMethod m) noexcept;

/// Whether the method yields a Q table that hybrids can correct (all but IH).
bool produces_q(DirectMethod m) noexcept;

/// Report label of a hybrid over a direct method, e.g. "WDR(FQE)".
std::string hybrid_label(HybridMethod h, DirectMethod base);

enum class GroundTruth { dp, mc };

struct ExperimentConfig {
   EnvKind env = EnvKind::graph;
   bool stochastic_env = false;
   bool stochastic_rewards = false;
   bool sparse_rewards = false;
   std::size_t pomdp_H = 2;
   bool expose_parity = false;
   std::optional<std::filesystem::path> layout;  ///< gridworld only

   std::size_t T = 0;  ///< 0 selects the environment default
   std::optional<double> gamma;
   std::vector<std::size_t> N{16, 32, 64, 128, 256, 512, 1024};
   std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};

   PolicySpec pi_b;
   PolicySpec pi_e;
   bool pi_b_known = true;
   double behavior_alpha = 1.0;

   std::vector<IpsVariant> ips{all_ips_variants.begin(), all_ips_variants.end()};
   std::vector<DirectMethod> direct{all_direct_methods.begin(), all_direct_methods.end()};
   std::vector<HybridMethod> hybrids{all_hybrid_methods.begin(), all_hybrid_methods.end()};

   DirectConfig direct_cfg;
   MagicConfig magic_cfg;

   GroundTruth ground_truth = GroundTruth::dp;
   std::size_t ground_truth_n = 10000;
   std::uint64_t ground_truth_seed = 0;

   /// Horizon and discount after environment defaults are applied.
   [[nodiscard]] std::size_t horizon() const;
   [[nodiscard]] double discount() const;

   void validate() const;
};

/// Tabular tolerances for the environment: eps 1e-5 for fitted Q evaluation
/// and 1e-3 (Graph, Graph-POMDP) or 2e-3 (Graph-MC, Gridworld) for the trace
/// backups, 500 iterations, and 4e-4 / 50 iterations on Gridworld.
DirectConfig direct_preset(EnvKind env);

/// Flat `key = value` text, '#' starts a comment. Lists are comma separated.
/// Unknown keys, duplicate keys and malformed values throw invalid_argument
/// naming the line.
///
///   env = graph | graph_pomdp | graph_mc | gridworld
///   env.stochastic_env, env.stochastic_rewards, env.sparse_rewards = true|false
///   env.H, env.expose_parity, env.layout = <path, relative to the config>
///   T, gamma, N = 16,32,..., seeds = 0,1,...
///   pi_b, pi_e = static:<p> | eps_greedy:<eps> | uniform
///   pi_b_known = true|false, behavior.alpha
///   estimators = all | comma list of IS PDIS WIS PDWIS NAIVE AM FQE RETRACE
///                TREE QPI QREG MRDR IH
///   hybrids = none | all | comma list of DR WDR MAGIC (applied to every
///             Q-producing direct method)
///   direct.fqe_eps, direct.fqe_max_iter, direct.backup_eps,
///   direct.backup_max_iter, direct.lambda, direct.reg_omega, direct.ih_reg,
///   direct.am_eval = dp|rollout, direct.am_rollouts,
///   direct.mrdr_weighting = trajectory|per_decision
///   magic.J, magic.bootstrap_B, magic.ci_level, magic.qp_iters, magic.qp_tol,
///   magic.psd_eps
///   ground_truth = dp|mc, ground_truth.n, ground_truth.seed
ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace ope
