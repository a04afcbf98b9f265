#pragma once

#include "ope/importance.hpp"
#include "ope/mdp.hpp"

#include <cstdint>
#include <optional>
#include <string_view>

namespace ope {

enum class AmEvaluation { dp, rollout };

/// Weight on each MRDR residual. `trajectory` uses gamma^{2t} (rho_{0:T-1})^2 rho_t,
/// the form this library defaults to; `per_decision` swaps the squared full
/// trajectory weight for (rho_{0:t-1})^2.
enum class MrdrWeighting { trajectory, per_decision };

struct DirectConfig {
   double fqe_eps = 1e-5;
   std::size_t fqe_max_iter = 10000;
   double backup_eps = 1e-3;  ///< Retrace / Tree / Q^pi(lambda)
   std::size_t backup_max_iter = 500;
   double lambda = 0.9;
   double reg_omega = 1.0;  ///< ridge weight for Q-Reg and MRDR
   double ih_reg = 1e-3;
   AmEvaluation am_eval = AmEvaluation::dp;
   std::size_t am_rollouts = 10000;
   std::uint64_t am_seed = 0;
   MrdrWeighting mrdr_weighting = MrdrWeighting::trajectory;

   void validate() const;
};

/// Iteration record of a fixed-point fit. Non-convergence is a warning carried
/// with the result, never a silent success.
struct FitDiagnostics {
   std::size_t iterations = 0;
   double residual = 0.0;
   bool converged = false;
};

struct QFit {
   QTable q;
   FitDiagnostics diagnostics;
};

/// (1/N) sum_i sum_a pi_e(a|x_0^i) q(x_0^i, a).
double direct_value(const Dataset& data, const QTable& q, const TabularPolicy& pi_e);

// -- model based ------------------------------------------------------------

/// Maximum-likelihood model: count-based transitions and mean rewards per
/// (x, a, x'), empirical initial distribution, and the dataset's terminal set.
/// Unseen (x, a) pairs move to the absorbing state with reward 0.
TabularMDP am_fit(const Dataset& data, double gamma);

/// Value of pi_e on a learned model, by exact DP or by rollouts per `cfg`.
double am_value(const TabularMDP& model, const TabularPolicy& pi_e, const DirectConfig& cfg);

/// Q of pi_e on a learned model, for use by the hybrid estimators.
QTable am_q(const TabularMDP& model, const TabularPolicy& pi_e);

// -- fitted Q -----------------------------------------------------------------

/// Tabular fitted Q evaluation from Q_0 = 0. Each sweep replaces Q(x, a) with
/// the mean over logged transitions from (x, a) of r + gamma * E_{pi_e} Q(x', .).
/// Stops when the largest change drops below cfg.fqe_eps or after
/// cfg.fqe_max_iter sweeps. Unvisited cells and the absorbing state stay 0.
QFit fqe(const Dataset& data, const TabularPolicy& pi_e, double gamma, const DirectConfig& cfg);

enum class BackupVariant { retrace, tree, qpi_lambda };

std::string_view to_string(BackupVariant v) noexcept;

/// Multi-step off-policy backup. Each sweep adds, for every logged (x, a) at
/// time t0, the mean of sum_{t >= t0} gamma^{t - t0} (prod_{s=t0+1}^{t} c_s) delta_t
/// with delta_t = r_t + gamma E_{pi_e} Q(x_{t+1}, .) - Q(x_t, a_t) and the trace
///   retrace:     c_s = lambda * min(1, pi_e/pi_b)
///   tree:        c_s = lambda * pi_e(a_s|x_s)
///   qpi_lambda:  c_s = lambda
/// Stopping uses cfg.backup_eps / cfg.backup_max_iter.
QFit lambda_backup(
   BackupVariant variant,
   const Dataset& data,
   const TabularPolicy& pi_e,
   const TabularPolicy& pi_b,
   double gamma,
   const DirectConfig& cfg);

// -- regression with importance weights ------------------------------------

/// Weighted ridge regression of importance-weighted returns. Per cell
/// Q(x, a) = sum w R / (sum w + reg_omega) with w = gamma^t rho_{0:t} and
/// R_t = sum_{t' >= t} gamma^{t'-t} rho_{t+1:t'} r_{t'}.
QTable q_reg(
   const Dataset& data,
   const TabularPolicy& pi_e,
   const TabularPolicy& pi_b,
   double gamma,
   const DirectConfig& cfg);

/// Omega_{pi_b}(x) = diag(1 / pi_b(.|x)) - e e^T.
Eigen::MatrixXd mrdr_omega(const TabularPolicy& pi_b, StateIndex x);

/// Minimizes, state by state, sum W (D q_x - R e_a)^T Omega(x) (D q_x - R e_a)
/// + reg_omega |q_x|^2 where D = diag(pi_e(.|x)), R = R_{t:T-1} as in q_reg and
/// W per cfg.mrdr_weighting. Requires pi_b(a|x) > 0 for every action at visited
/// states; throws solver_error when the normal equations are singular.
QTable mrdr(
   const Dataset& data,
   const TabularPolicy& pi_e,
   const TabularPolicy& pi_b,
   double gamma,
   const DirectConfig& cfg);

/// Value of the MRDR objective (with its ridge term) at `q`.
double mrdr_objective(
   const Dataset& data,
   const QTable& q,
   const TabularPolicy& pi_e,
   const TabularPolicy& pi_b,
   double gamma,
   const DirectConfig& cfg);

// -- state density ratio ----------------------------------------------------

struct OmegaTable {
   Eigen::VectorXd omega;  ///< d_{pi_e}(x) / d_{pi_b}(x)
};

/// Tabular state-density ratio. With mu_b(x) = sum_{i, t<T} gamma^t 1{x_t = x}
/// and per-step ratios rho_t, solves the discounted balance equations
///
///   omega(x') mu_b(x') = #{i : x_0 = x'}
///                        + gamma sum_{i, t<T-1} gamma^t omega(x_t) rho_t 1{x_{t+1} = x'}
///
/// in the least-squares sense with a ridge of weight cfg.ih_reg toward omega = 1,
/// then clips negative entries to 0. Unvisited states get 0.
OmegaTable ih_fit(
   const Dataset& data,
   const TabularPolicy& pi_e,
   const TabularPolicy& pi_b,
   double gamma,
   const DirectConfig& cfg);

/// Self-normalized density-ratio estimate
///
///   S_T * sum_{i,t} gamma^t omega(x_t) rho_t r_t / sum_{i,t} gamma^t omega(x_t) rho_t
///
/// with S_T = sum_{t<T} gamma^t, so it targets the T-step discounted value. The
/// normalizer runs over the same t = 0..T-1 as the numerator. Throws
/// degenerate_weights on a zero normalizer.
double ih_estimate(
   const Dataset& data,
   const OmegaTable& omega,
   const TabularPolicy& pi_e,
   const TabularPolicy& pi_b,
   double gamma);

}  // namespace ope
