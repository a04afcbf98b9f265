#include "ope/hybrid.hpp"

#include "ope/errors.hpp"
#include "ope/rng.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ope {

HybridModel hybrid_model(const QTable& qhat, const TabularPolicy& pi_e, const StateSpace& space)
{
   check_policy_shape(pi_e, space);
   require(
      qhat.q.rows() == static_cast<Eigen::Index>(space.n_states)
         && qhat.q.cols() == static_cast<Eigen::Index>(space.n_actions),
      "Q table does not match state space");
   HybridModel m{qhat.q, qhat.state_values(pi_e)};
   for(StateIndex x = 0; x < space.n_states; ++x) {
      if(space.is_terminal(x)) {
         m.q.row(x).setZero();
         m.v(x) = 0.0;
      }
   }
   return m;
}

namespace {

void require_match(const Dataset& data, const RhoTable& rho)
{
   if(data.empty())
      fail(ErrorKind::empty_dataset, "hybrid estimator: empty dataset");
   require(
      rho.n_trajectories() == data.size() && rho.horizon() == data.horizon,
      "weight table does not match dataset");
}

double next_value(const HybridModel& model, const Trajectory& traj, std::size_t t)
{
   return t + 1 < traj.length() ? model.v(traj.states[t + 1]) : 0.0;
}

/// sum_i [ w_{-1} V(x_0) + sum_t gamma^t w_t (r_t - Q(x_t, a_t) + gamma V(x_{t+1})) ]
/// for a weight matrix whose column t + 1 holds w_t.
double hybrid_sum(const Dataset& data, const HybridModel& model, const Eigen::MatrixXd& w, double gamma)
{
   double total = 0.0;
   for(std::size_t i = 0; i < data.size(); ++i) {
      const auto& traj = data.trajectories[i];
      double acc = w(i, 0) * model.v(traj.states.front());
      double disc = 1.0;
      for(std::size_t t = 0; t < traj.length(); ++t, disc *= gamma) {
         const auto x = traj.states[t];
         const double td =
            traj.rewards[t] - model.q(x, traj.actions[t]) + gamma * next_value(model, traj, t);
         acc += disc * w(i, t + 1) * td;
      }
      total += acc;
   }
   return total;
}

}  // namespace

double dr_estimate(const Dataset& data, const HybridModel& model, const RhoTable& rho, double gamma)
{
   require_match(data, rho);
   const auto n = data.size();
   Eigen::MatrixXd w(n, data.horizon + 1);
   const double inv_n = 1.0 / static_cast<double>(n);
   w.col(0).setConstant(inv_n);
   w.rightCols(data.horizon) = rho.cumulatives() * inv_n;
   return hybrid_sum(data, model, w, gamma);
}

double dr_estimate(
   const Dataset& data,
   const QTable& qhat,
   const TabularPolicy& pi_e,
   const TabularPolicy& pi_b,
   double gamma)
{
   return dr_estimate(data, hybrid_model(qhat, pi_e, data.space), cumulative_rho(data, pi_e, pi_b), gamma);
}

Eigen::MatrixXd wdr_weights(const RhoTable& rho, const std::vector<double>& counts)
{
   const auto n = rho.n_trajectories();
   const auto horizon = rho.horizon();
   require(counts.empty() || counts.size() == n, "multiplicity vector does not match dataset");
   Eigen::MatrixXd w(n, horizon + 1);
   w.col(0).setConstant(1.0 / static_cast<double>(n));
   for(std::size_t t = 0; t < horizon; ++t) {
      double norm = 0.0;
      for(std::size_t i = 0; i < n; ++i)
         norm += (counts.empty() ? 1.0 : counts[i]) * rho.cumulative(i, static_cast<std::ptrdiff_t>(t));
      if(norm <= 0.0)
         fail(ErrorKind::degenerate_weights, "WDR: weight normalizer is zero at t=" + std::to_string(t));
      for(std::size_t i = 0; i < n; ++i)
         w(i, t + 1) = rho.cumulative(i, static_cast<std::ptrdiff_t>(t)) / norm;
   }
   return w;
}

double wdr_estimate(const Dataset& data, const HybridModel& model, const RhoTable& rho, double gamma)
{
   require_match(data, rho);
   return hybrid_sum(data, model, wdr_weights(rho), gamma);
}

double wdr_estimate(
   const Dataset& data,
   const QTable& qhat,
   const TabularPolicy& pi_e,
   const TabularPolicy& pi_b,
   double gamma)
{
   return wdr_estimate(data, hybrid_model(qhat, pi_e, data.space), cumulative_rho(data, pi_e, pi_b), gamma);
}

// ---------------------------------------------------------------------------

std::vector<int> MagicConfig::resolved_J(std::size_t horizon) const
{
   std::vector<int> out = J;
   if(out.empty()) {
      out.resize(horizon + 1);
      std::iota(out.begin(), out.end(), -1);
   }
   const int last = static_cast<int>(horizon) - 1;
   require(std::is_sorted(out.begin(), out.end()), "MAGIC switch set must be sorted");
   require(std::adjacent_find(out.begin(), out.end()) == out.end(), "MAGIC switch set has duplicates");
   require(out.front() >= -1 && out.back() <= last, "MAGIC switch index out of range");
   require(out.back() == last, "MAGIC switch set must contain T-1");
   return out;
}

void MagicConfig::validate(std::size_t horizon) const
{
   (void)resolved_J(horizon);
   require(bootstrap_B >= 1, "MAGIC needs at least one bootstrap resample");
   require(ci_level > 0.0 && ci_level < 1.0, "MAGIC CI level must lie in (0, 1)");
   require(qp_iters >= 1 && qp_tol > 0.0, "MAGIC QP settings must be positive");
   require(psd_eps >= 0.0, "MAGIC psd_eps must be non-negative");
}

namespace {

/// Per-trajectory terms of g_j for j = -1..T-1 (column j + 1), with weights
/// whose column t + 1 holds w_t.
Eigen::MatrixXd switch_contributions(
   const Dataset& data,
   const HybridModel& model,
   const Eigen::MatrixXd& w,
   double gamma)
{
   const auto n = data.size();
   const auto horizon = data.horizon;
   Eigen::MatrixXd out(n, horizon + 1);
   for(std::size_t i = 0; i < n; ++i) {
      const auto& traj = data.trajectories[i];
      double prefix = 0.0;
      double disc = 1.0;
      out(i, 0) = w(i, 0) * model.v(traj.states.front());
      for(std::size_t t = 0; t < horizon; ++t, disc *= gamma) {
         const auto x = traj.states[t];
         prefix += disc
                   * (w(i, t + 1) * (traj.rewards[t] - model.q(x, traj.actions[t])) + w(i, t) * model.v(x));
         out(i, t + 1) = prefix + disc * gamma * w(i, t + 1) * next_value(model, traj, t);
      }
   }
   return out;
}

double percentile(std::vector<double> values, double q)
{
   std::sort(values.begin(), values.end());
   const double pos = q * static_cast<double>(values.size() - 1);
   const auto lo = static_cast<std::size_t>(std::floor(pos));
   const auto hi = std::min(lo + 1, values.size() - 1);
   return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace

GVector g_vector(
   const Dataset& data,
   const HybridModel& model,
   const RhoTable& rho,
   double gamma,
   const std::vector<int>& J)
{
   require_match(data, rho);
   const auto all = switch_contributions(data, model, wdr_weights(rho), gamma);
   GVector out;
   out.J = J;
   out.contributions.resize(data.size(), static_cast<Eigen::Index>(J.size()));
   for(std::size_t k = 0; k < J.size(); ++k) {
      require(J[k] >= -1 && J[k] < static_cast<int>(data.horizon), "switch index out of range");
      out.contributions.col(static_cast<Eigen::Index>(k)) = all.col(J[k] + 1);
   }
   out.g = out.contributions.colwise().sum().transpose();
   return out;
}

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& y)
{
   const auto n = y.size();
   require(n >= 1, "cannot project onto an empty simplex");
   std::vector<double> u(y.data(), y.data() + n);
   std::sort(u.begin(), u.end(), std::greater<>());
   double cum = 0.0;
   double theta = 0.0;
   for(Eigen::Index k = 0; k < n; ++k) {
      cum += u[k];
      const double candidate = (cum - 1.0) / static_cast<double>(k + 1);
      if(u[k] - candidate > 0.0)
         theta = candidate;
   }
   return (y.array() - theta).max(0.0).matrix();
}

SimplexQpResult solve_simplex_qp(const Eigen::MatrixXd& m, std::size_t max_iter, double tol)
{
   const auto n = m.rows();
   require(n >= 1 && m.cols() == n, "QP matrix must be square and nonempty");
   const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
   auto objective = [&](const Eigen::VectorXd& x) { return x.dot(sym * x); };

   SimplexQpResult res;
   res.x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
   res.objective.push_back(objective(res.x));
   const double lmax = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly)
                          .eigenvalues()
                          .maxCoeff();
   if(n == 1 || ! (lmax > 0.0)) {
      res.converged = true;
      return res;
   }
   const double step = 1.0 / (2.0 * lmax);
   for(std::size_t k = 1; k <= max_iter; ++k) {
      Eigen::VectorXd next = project_to_simplex(res.x - step * 2.0 * (sym * res.x));
      const double value = objective(next);
      res.iterations = k;
      // A rise can only be rounding noise at the optimum.
      if(value > res.objective.back()) {
         res.converged = true;
         break;
      }
      const double move = (next - res.x).cwiseAbs().maxCoeff();
      res.x = std::move(next);
      res.objective.push_back(value);
      if(move <= tol) {
         res.converged = true;
         break;
      }
   }
   return res;
}

MagicResult magic(
   const Dataset& data,
   const HybridModel& model,
   const RhoTable& rho,
   double gamma,
   const MagicConfig& cfg)
{
   require_match(data, rho);
   cfg.validate(data.horizon);
   const auto J = cfg.resolved_J(data.horizon);
   const auto n = data.size();

   MagicResult res;
   res.g = g_vector(data, model, rho, gamma, J);
   const auto k = static_cast<Eigen::Index>(J.size());

   const Eigen::RowVectorXd mean = res.g.contributions.colwise().mean();
   const Eigen::MatrixXd centered = res.g.contributions.rowwise() - mean;
   res.omega = n > 1 ? Eigen::MatrixXd(centered.transpose() * centered * (static_cast<double>(n) / static_cast<double>(n - 1)))
                     : Eigen::MatrixXd::Zero(k, k);

   // Percentile bootstrap of the WDR estimate over resampled trajectories.
   std::vector<double> boot;
   boot.reserve(cfg.bootstrap_B);
   for(std::size_t b = 0; b < cfg.bootstrap_B; ++b) {
      auto rng = make_stream(cfg.seed, StreamTag::bootstrap, b);
      std::vector<double> counts(n, 0.0);
      for(std::size_t s = 0; s < n; ++s)
         counts[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n))] += 1.0;
      try {
         const auto w = wdr_weights(rho, counts);
         const auto terms = switch_contributions(data, model, w, gamma);
         double total = 0.0;
         for(std::size_t i = 0; i < n; ++i)
            total += counts[i] * terms(i, static_cast<Eigen::Index>(data.horizon));
         boot.push_back(total);
      } catch(const OpeError& e) {
         if(e.kind() != ErrorKind::degenerate_weights)
            throw;
      }
   }
   if(boot.empty())
      fail(ErrorKind::degenerate_weights, "MAGIC: every bootstrap resample has degenerate weights");
   const double tail = 0.5 * (1.0 - cfg.ci_level);
   res.ci_low = percentile(boot, tail);
   res.ci_high = percentile(std::move(boot), 1.0 - tail);

   res.bias.resize(k);
   for(Eigen::Index j = 0; j < k; ++j) {
      const double gj = res.g.g(j);
      res.bias(j) = gj < res.ci_low ? res.ci_low - gj : gj > res.ci_high ? gj - res.ci_high : 0.0;
   }

   const Eigen::MatrixXd m =
      res.omega + res.bias * res.bias.transpose() + cfg.psd_eps * Eigen::MatrixXd::Identity(k, k);
   res.qp = solve_simplex_qp(m, cfg.qp_iters, cfg.qp_tol);
   res.estimate = res.qp.x.dot(res.g.g);
   return res;
}

MagicResult magic(
   const Dataset& data,
   const QTable& qhat,
   const TabularPolicy& pi_e,
   const TabularPolicy& pi_b,
   double gamma,
   const MagicConfig& cfg)
{
   return magic(data, hybrid_model(qhat, pi_e, data.space), cumulative_rho(data, pi_e, pi_b), gamma, cfg);
}

std::string magic_diagnostics_json(const MagicResult& r)
{
   auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
   nlohmann::json omega = nlohmann::json::array();
   for(Eigen::Index i = 0; i < r.omega.rows(); ++i)
      omega.push_back(vec(r.omega.row(i).transpose()));
   nlohmann::json doc{
      {"estimate", r.estimate},
      {"J", r.g.J},
      {"g", vec(r.g.g)},
      {"bias", vec(r.bias)},
      {"omega", omega},
      {"x", vec(r.qp.x)},
      {"ci", {r.ci_low, r.ci_high}},
      {"qp_iterations", r.qp.iterations},
      {"qp_converged", r.qp.converged},
   };
   return doc.dump(2);
}

}  // namespace ope
