#pragma once

#include "ope/importance.hpp"
#include "ope/mdp.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ope {

/// V-hat and Q-hat used by the hybrid corrections: V(x) = sum_a pi_e(a|x) q(x, a),
/// with both tables zeroed at terminal states so that padded steps contribute
/// nothing. The value after the last logged step, V(x_T), is taken as 0.
struct HybridModel {
   Eigen::MatrixXd q;
   Eigen::VectorXd v;
};

HybridModel hybrid_model(const QTable& qhat, const TabularPolicy& pi_e, const StateSpace& space);

/// V_DR = 1/N sum_i V(x_0) + 1/N sum_{i,t} gamma^t rho_{0:t} [r_t - Q(x_t, a_t) + gamma V(x_{t+1})].
double dr_estimate(
   const Dataset& data,
   const QTable& qhat,
   const TabularPolicy& pi_e,
   const TabularPolicy& pi_b,
   double gamma);

double dr_estimate(const Dataset& data, const HybridModel& model, const RhoTable& rho, double gamma);

/// DR with rho_{0:t} / N replaced by rho_{0:t} / sum_j rho^j_{0:t}. Throws
/// degenerate_weights when the normalizer is zero at some t.
double wdr_estimate(
   const Dataset& data,
   const QTable& qhat,
   const TabularPolicy& pi_e,
   const TabularPolicy& pi_b,
   double gamma);

double wdr_estimate(const Dataset& data, const HybridModel& model, const RhoTable& rho, double gamma);

/// WDR-normalized weights w(i, t) = rho^i_{0:t} / sum_j rho^j_{0:t}; column 0
/// of the result is t = -1 with weight 1/N. `counts` gives each trajectory's
/// multiplicity (all ones when empty) for bootstrap resamples; weights are then
/// per copy, so sum_i counts_i w(i, t) = 1.
Eigen::MatrixXd wdr_weights(const RhoTable& rho, const std::vector<double>& counts = {});

struct MagicConfig {
   std::vector<int> J;  ///< switch indices in [-1, T-1]; empty means the full set
   std::size_t bootstrap_B = 200;
   double ci_level = 0.5;
   std::size_t qp_iters = 10000;
   double qp_tol = 1e-9;
   double psd_eps = 1e-9;
   std::uint64_t seed = 0;

   /// J with the empty default expanded, checked to be sorted, unique, in
   /// range and to contain T-1.
   [[nodiscard]] std::vector<int> resolved_J(std::size_t horizon) const;
   void validate(std::size_t horizon) const;
};

/// Partial-switch estimates. For switch index j,
///
///   g_j = sum_i [ sum_{t<=j} gamma^t (w_t r_t - w_t Q(x_t, a_t) + w_{t-1} V(x_t))
///                 + gamma^{j+1} w_j V(x_{j+1}) ]
///
/// with WDR weights w and w_{-1} = 1/N. g_{-1} is the direct estimate and
/// g_{T-1} the WDR estimate. `contributions(i, k)` is trajectory i's term of
/// g_{J[k]}; the rows sum to g.
struct GVector {
   std::vector<int> J;
   Eigen::VectorXd g;
   Eigen::MatrixXd contributions;
};

GVector g_vector(
   const Dataset& data,
   const HybridModel& model,
   const RhoTable& rho,
   double gamma,
   const std::vector<int>& J);

struct SimplexQpResult {
   Eigen::VectorXd x;
   std::vector<double> objective;  ///< value at the start and after each iteration
   std::size_t iterations = 0;
   bool converged = false;
};

/// Euclidean projection onto {x >= 0, sum x = 1}.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& y);

/// argmin x^T M x over the simplex for symmetric PSD M, by projected gradient
/// with step 1 / (2 lambda_max(M)) from the uniform point. Stops when no
/// coordinate moves more than `tol`, or when a step would raise the objective
/// (rounding at the optimum), in which case that step is discarded.
SimplexQpResult solve_simplex_qp(const Eigen::MatrixXd& m, std::size_t max_iter, double tol);

struct MagicResult {
   double estimate = 0.0;
   GVector g;
   Eigen::VectorXd bias;   ///< b-hat per switch index
   Eigen::MatrixXd omega;  ///< covariance estimate of g
   double ci_low = 0.0;
   double ci_high = 0.0;
   SimplexQpResult qp;
};

/// Blend of partial-switch estimates minimizing estimated MSE. The bias of g_j
/// is its distance to a percentile-bootstrap interval of the WDR estimate; the
/// covariance is N / (N - 1) times the scatter of per-trajectory terms.
MagicResult magic(
   const Dataset& data,
   const QTable& qhat,
   const TabularPolicy& pi_e,
   const TabularPolicy& pi_b,
   double gamma,
   const MagicConfig& cfg);

MagicResult magic(
   const Dataset& data,
   const HybridModel& model,
   const RhoTable& rho,
   double gamma,
   const MagicConfig& cfg);

/// (J, g, b, Omega, x, CI, QP iterations) as a JSON document.
std::string magic_diagnostics_json(const MagicResult& result);

}  // namespace ope
