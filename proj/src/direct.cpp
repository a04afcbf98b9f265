#include "ope/direct.hpp"

#include "compensated_sum.hpp"

#include "ope/errors.hpp"
#include "ope/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace ope {

void DirectConfig::validate() const
{
   require(fqe_eps > 0.0 && backup_eps > 0.0, "convergence tolerances must be positive");
   require(fqe_max_iter >= 1 && backup_max_iter >= 1, "iteration caps must be positive");
   require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
   require(reg_omega >= 0.0 && ih_reg >= 0.0, "regularization weights must be non-negative");
   require(am_eval == AmEvaluation::dp || am_rollouts >= 1, "AM rollout count must be positive");
}

std::string_view to_string(BackupVariant v) noexcept
{
   switch(v) {
      case BackupVariant::retrace: return "RETRACE";
      case BackupVariant::tree: return "TREE";
      case BackupVariant::qpi_lambda: return "QPI";
   }
   return "?";
}

namespace {

void require_data(const Dataset& data, const char* who)
{
   if(data.empty())
      fail(ErrorKind::empty_dataset, std::string(who) + ": empty dataset");
}

/// Empirical one-step model per (x, a): visit count, mean reward and successor
/// frequencies. Steps from the absorbing state are left out.
struct TransitionCounts {
   std::vector<double> visits;
   std::vector<double> reward_sum;
   std::vector<std::vector<std::pair<StateIndex, double>>> successors;
};

TransitionCounts count_transitions(const Dataset& data)
{
   const auto cells = data.space.n_states * data.space.n_actions;
   TransitionCounts c;
   c.visits.assign(cells, 0.0);
   c.reward_sum.assign(cells, 0.0);
   c.successors.resize(cells);
   for(const auto& traj : data.trajectories) {
      for(std::size_t t = 0; t < traj.length(); ++t) {
         const auto x = traj.states[t];
         if(data.space.is_absorbing(x))
            continue;
         const auto cell = x * data.space.n_actions + traj.actions[t];
         c.visits[cell] += 1.0;
         c.reward_sum[cell] += traj.rewards[t];
         auto& succ = c.successors[cell];
         const auto next = traj.states[t + 1];
         auto it = std::find_if(succ.begin(), succ.end(), [&](const auto& p) { return p.first == next; });
         if(it == succ.end())
            succ.emplace_back(next, 1.0);
         else
            it->second += 1.0;
      }
   }
   return c;
}

/// R_t = r_t + gamma * rho_{t+1} * R_{t+1}: the importance-weighted return to
/// go of one trajectory.
std::vector<double> weighted_returns(
   const Trajectory& traj,
   const RhoTable& rho,
   std::size_t i,
   double gamma)
{
   const auto horizon = traj.length();
   std::vector<double> ret(horizon, 0.0);
   double next = 0.0;
   for(std::size_t k = horizon; k-- > 0;) {
      const double carry = k + 1 < horizon ? gamma * rho.step(i, k + 1) * next : 0.0;
      ret[k] = traj.rewards[k] + carry;
      next = ret[k];
   }
   return ret;
}

}  // namespace

double direct_value(const Dataset& data, const QTable& q, const TabularPolicy& pi_e)
{
   require_data(data, "direct_value");
   const Eigen::VectorXd v = q.state_values(pi_e);
   double sum = 0.0;
   for(const auto& traj : data.trajectories)
      sum += v(traj.states.front());
   return sum / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------

TabularMDP am_fit(const Dataset& data, double gamma)
{
   require_data(data, "am_fit");
   const auto& sp = data.space;
   const auto counts = count_transitions(data);

   TabularMDP::Tables t;
   t.space = sp;
   t.horizon = data.horizon;
   t.gamma = gamma;
   t.outcomes.resize(sp.n_states * sp.n_actions);
   t.initial.assign(sp.n_states, 0.0);
   for(const auto& traj : data.trajectories)
      t.initial[traj.states.front()] += 1.0 / static_cast<double>(data.size());
   // exact normalization keeps the row-sum invariant under rounding
   double init_sum = 0.0;
   for(double p : t.initial)
      init_sum += p;
   for(double& p : t.initial)
      p /= init_sum;

   std::vector<std::vector<double>> reward_by_successor(sp.n_states * sp.n_actions);
   for(const auto& traj : data.trajectories) {
      for(std::size_t k = 0; k < traj.length(); ++k) {
         const auto x = traj.states[k];
         if(sp.is_absorbing(x))
            continue;
         const auto cell = x * sp.n_actions + traj.actions[k];
         auto& sums = reward_by_successor[cell];
         if(sums.empty())
            sums.assign(sp.n_states, 0.0);
         sums[traj.states[k + 1]] += traj.rewards[k];
      }
   }

   for(StateIndex x = 0; x < sp.n_states; ++x) {
      for(ActionIndex a = 0; a < sp.n_actions; ++a) {
         const auto cell = x * sp.n_actions + a;
         auto& row = t.outcomes[cell];
         if(sp.is_terminal(x) || counts.visits[cell] == 0.0) {
            row = {{sp.absorbing, 1.0, 0.0}};
            continue;
         }
         double mass = 0.0;
         for(const auto& [next, n] : counts.successors[cell])
            mass += n;
         for(const auto& [next, n] : counts.successors[cell])
            row.push_back({next, n / mass, reward_by_successor[cell][next] / n});
      }
   }
   return TabularMDP(std::move(t));
}

double am_value(const TabularMDP& model, const TabularPolicy& pi_e, const DirectConfig& cfg)
{
   if(cfg.am_eval == AmEvaluation::rollout)
      return monte_carlo_value(model, pi_e, cfg.am_rollouts, cfg.am_seed).value;
   return exact_policy_value(model, pi_e);
}

QTable am_q(const TabularMDP& model, const TabularPolicy& pi_e)
{
   return evaluate_q(model, pi_e, model.horizon());
}

// ---------------------------------------------------------------------------

QFit fqe(const Dataset& data, const TabularPolicy& pi_e, double gamma, const DirectConfig& cfg)
{
   require_data(data, "fqe");
   cfg.validate();
   check_policy_shape(pi_e, data.space);
   const auto nS = data.space.n_states;
   const auto nA = data.space.n_actions;
   const auto counts = count_transitions(data);

   QFit fit{QTable::zeros(nS, nA), {}};
   for(std::size_t k = 1; k <= cfg.fqe_max_iter; ++k) {
      const Eigen::VectorXd v = fit.q.state_values(pi_e);
      Eigen::MatrixXd next = Eigen::MatrixXd::Zero(nS, nA);
      for(StateIndex x = 0; x < nS; ++x) {
         for(ActionIndex a = 0; a < nA; ++a) {
            const auto cell = x * nA + a;
            const double n = counts.visits[cell];
            if(n == 0.0)
               continue;
            double boot = 0.0;
            for(const auto& [succ, m] : counts.successors[cell])
               boot += m * v(succ);
            next(x, a) = (counts.reward_sum[cell] + gamma * boot) / n;
         }
      }
      const double change = (next - fit.q.q).cwiseAbs().maxCoeff();
      fit.q.q = std::move(next);
      fit.diagnostics = {k, change, change < cfg.fqe_eps};
      if(fit.diagnostics.converged)
         break;
   }
   return fit;
}

QFit lambda_backup(
   BackupVariant variant,
   const Dataset& data,
   const TabularPolicy& pi_e,
   const TabularPolicy& pi_b,
   double gamma,
   const DirectConfig& cfg)
{
   require_data(data, "lambda_backup");
   cfg.validate();
   const auto rho = cumulative_rho(data, pi_e, pi_b);
   const auto nS = data.space.n_states;
   const auto nA = data.space.n_actions;
   const auto horizon = data.horizon;

   // Traces depend only on the data, so they are fixed across sweeps.
   Eigen::MatrixXd trace(data.size(), horizon);
   Eigen::MatrixXd visits = Eigen::MatrixXd::Zero(nS, nA);
   for(std::size_t i = 0; i < data.size(); ++i) {
      const auto& traj = data.trajectories[i];
      for(std::size_t t = 0; t < horizon; ++t) {
         const auto x = traj.states[t];
         const auto a = traj.actions[t];
         switch(variant) {
            case BackupVariant::retrace:
               trace(i, t) = cfg.lambda * std::min(1.0, rho.step(i, t));
               break;
            case BackupVariant::tree: trace(i, t) = cfg.lambda * pi_e(x, a); break;
            case BackupVariant::qpi_lambda: trace(i, t) = cfg.lambda; break;
         }
         if(! data.space.is_absorbing(x))
            visits(x, a) += 1.0;
      }
   }

   QFit fit{QTable::zeros(nS, nA), {}};
   std::vector<double> delta(horizon);
   for(std::size_t k = 1; k <= cfg.backup_max_iter; ++k) {
      const Eigen::VectorXd v = fit.q.state_values(pi_e);
      Eigen::MatrixXd update = Eigen::MatrixXd::Zero(nS, nA);
      for(std::size_t i = 0; i < data.size(); ++i) {
         const auto& traj = data.trajectories[i];
         for(std::size_t t = 0; t < horizon; ++t) {
            const auto x = traj.states[t];
            delta[t] = data.space.is_absorbing(x)
                          ? 0.0
                          : traj.rewards[t] + gamma * v(traj.states[t + 1]) - fit.q.q(x, traj.actions[t]);
         }
         double acc = 0.0;
         for(std::size_t t = horizon; t-- > 0;) {
            acc = delta[t] + (t + 1 < horizon ? gamma * trace(i, t + 1) * acc : 0.0);
            const auto x = traj.states[t];
            if(! data.space.is_absorbing(x))
               update(x, traj.actions[t]) += acc;
         }
      }
      for(Eigen::Index x = 0; x < update.rows(); ++x)
         for(Eigen::Index a = 0; a < update.cols(); ++a)
            if(visits(x, a) > 0.0)
               update(x, a) /= visits(x, a);
      fit.q.q += update;
      const double change = update.cwiseAbs().maxCoeff();
      fit.diagnostics = {k, change, change < cfg.backup_eps};
      if(fit.diagnostics.converged)
         break;
   }
   return fit;
}

// ---------------------------------------------------------------------------

QTable q_reg(
   const Dataset& data,
   const TabularPolicy& pi_e,
   const TabularPolicy& pi_b,
   double gamma,
   const DirectConfig& cfg)
{
   require_data(data, "q_reg");
   cfg.validate();
   const auto rho = cumulative_rho(data, pi_e, pi_b);
   const auto nS = data.space.n_states;
   const auto nA = data.space.n_actions;
   Eigen::MatrixXd weight = Eigen::MatrixXd::Zero(nS, nA);
   Eigen::MatrixXd target = Eigen::MatrixXd::Zero(nS, nA);
   for(std::size_t i = 0; i < data.size(); ++i) {
      const auto& traj = data.trajectories[i];
      const auto ret = weighted_returns(traj, rho, i, gamma);
      double disc = 1.0;
      for(std::size_t t = 0; t < traj.length(); ++t, disc *= gamma) {
         const auto x = traj.states[t];
         if(data.space.is_absorbing(x))
            continue;
         const double w = disc * rho.cumulative(i, static_cast<std::ptrdiff_t>(t));
         weight(x, traj.actions[t]) += w;
         target(x, traj.actions[t]) += w * ret[t];
      }
   }
   QTable q = QTable::zeros(nS, nA);
   for(Eigen::Index x = 0; x < q.q.rows(); ++x)
      for(Eigen::Index a = 0; a < q.q.cols(); ++a) {
         const double den = weight(x, a) + cfg.reg_omega;
         if(den > 0.0)
            q.q(x, a) = target(x, a) / den;
      }
   return q;
}

Eigen::MatrixXd mrdr_omega(const TabularPolicy& pi_b, StateIndex x)
{
   const auto nA = static_cast<Eigen::Index>(pi_b.n_actions());
   Eigen::MatrixXd omega = -Eigen::MatrixXd::Ones(nA, nA);
   for(Eigen::Index a = 0; a < nA; ++a) {
      const double p = pi_b(x, static_cast<ActionIndex>(a));
      if(p <= 0.0) {
         fail(
            ErrorKind::support_violation,
            "MRDR needs pi_b(a|x) > 0 for every action; zero at x=" + std::to_string(x)
               + ", a=" + std::to_string(a));
      }
      omega(a, a) += 1.0 / p;
   }
   return omega;
}

namespace {

/// Per-state normal equations of the MRDR objective: lhs q_x = rhs, without
/// the ridge term, plus the constant sum of W R^2 e_a^T Omega e_a.
struct MrdrSystem {
   std::vector<Eigen::MatrixXd> lhs;
   std::vector<Eigen::VectorXd> rhs;
   std::vector<double> constant;
   std::vector<bool> visited;
};

MrdrSystem mrdr_system(
   const Dataset& data,
   const TabularPolicy& pi_e,
   const TabularPolicy& pi_b,
   double gamma,
   MrdrWeighting weighting)
{
   const auto rho = cumulative_rho(data, pi_e, pi_b);
   const auto nS = data.space.n_states;
   const auto nA = static_cast<Eigen::Index>(data.space.n_actions);
   const auto last = static_cast<std::ptrdiff_t>(data.horizon) - 1;

   MrdrSystem sys;
   sys.lhs.assign(nS, Eigen::MatrixXd::Zero(nA, nA));
   sys.rhs.assign(nS, Eigen::VectorXd::Zero(nA));
   sys.constant.assign(nS, 0.0);
   sys.visited.assign(nS, false);
   std::vector<Eigen::MatrixXd> omega(nS);
   std::vector<Eigen::MatrixXd> d_omega_d(nS);

   for(std::size_t i = 0; i < data.size(); ++i) {
      const auto& traj = data.trajectories[i];
      const auto ret = weighted_returns(traj, rho, i, gamma);
      const double full = rho.cumulative(i, last);
      double disc2 = 1.0;
      for(std::size_t t = 0; t < traj.length(); ++t, disc2 *= gamma * gamma) {
         const auto x = traj.states[t];
         if(data.space.is_absorbing(x))
            continue;
         if(! sys.visited[x]) {
            sys.visited[x] = true;
            omega[x] = mrdr_omega(pi_b, x);
            const Eigen::VectorXd pe = pi_e.probs().row(x).transpose();
            d_omega_d[x] = pe.asDiagonal() * omega[x] * pe.asDiagonal();
         }
         const double prefix = weighting == MrdrWeighting::trajectory
                                  ? full
                                  : rho.cumulative(i, static_cast<std::ptrdiff_t>(t) - 1);
         const double w = disc2 * prefix * prefix * rho.step(i, t);
         if(w == 0.0)
            continue;
         const auto a = static_cast<Eigen::Index>(traj.actions[t]);
         const double r = ret[t];
         sys.lhs[x] += w * d_omega_d[x];
         // D Omega e_a
         for(Eigen::Index b = 0; b < nA; ++b)
            sys.rhs[x](b) += w * r * pi_e(x, static_cast<ActionIndex>(b)) * omega[x](b, a);
         sys.constant[x] += w * r * r * omega[x](a, a);
      }
   }
   return sys;
}

}  // namespace

QTable mrdr(
   const Dataset& data,
   const TabularPolicy& pi_e,
   const TabularPolicy& pi_b,
   double gamma,
   const DirectConfig& cfg)
{
   require_data(data, "mrdr");
   cfg.validate();
   const auto sys = mrdr_system(data, pi_e, pi_b, gamma, cfg.mrdr_weighting);
   const auto nS = data.space.n_states;
   const auto nA = static_cast<Eigen::Index>(data.space.n_actions);
   QTable q = QTable::zeros(nS, nA);
   for(StateIndex x = 0; x < nS; ++x) {
      if(! sys.visited[x])
         continue;
      const Eigen::MatrixXd lhs =
         sys.lhs[x] + cfg.reg_omega * Eigen::MatrixXd::Identity(nA, nA);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(lhs);
      if(! lu.isInvertible()) {
         fail(
            ErrorKind::solver_error,
            "MRDR normal equations are singular at state " + std::to_string(x));
      }
      q.q.row(x) = lu.solve(sys.rhs[x]).transpose();
   }
   return q;
}

double mrdr_objective(
   const Dataset& data,
   const QTable& q,
   const TabularPolicy& pi_e,
   const TabularPolicy& pi_b,
   double gamma,
   const DirectConfig& cfg)
{
   require_data(data, "mrdr_objective");
   const auto sys = mrdr_system(data, pi_e, pi_b, gamma, cfg.mrdr_weighting);
   double total = cfg.reg_omega * q.q.squaredNorm();
   for(StateIndex x = 0; x < data.space.n_states; ++x) {
      if(! sys.visited[x])
         continue;
      const Eigen::VectorXd qx = q.q.row(x).transpose();
      total += qx.dot(sys.lhs[x] * qx) - 2.0 * qx.dot(sys.rhs[x]) + sys.constant[x];
   }
   return total;
}

// ---------------------------------------------------------------------------

OmegaTable ih_fit(
   const Dataset& data,
   const TabularPolicy& pi_e,
   const TabularPolicy& pi_b,
   double gamma,
   const DirectConfig& cfg)
{
   require_data(data, "ih_fit");
   cfg.validate();
   const auto rho = cumulative_rho(data, pi_e, pi_b);
   const auto nS = static_cast<Eigen::Index>(data.space.n_states);
   const auto horizon = data.horizon;

   Eigen::MatrixXd system = Eigen::MatrixXd::Zero(nS, nS);
   Eigen::VectorXd start = Eigen::VectorXd::Zero(nS);
   std::vector<bool> visited(nS, false);
   for(std::size_t i = 0; i < data.size(); ++i) {
      const auto& traj = data.trajectories[i];
      start(traj.states.front()) += 1.0;
      double disc = 1.0;
      for(std::size_t t = 0; t < horizon; ++t, disc *= gamma) {
         const auto x = traj.states[t];
         visited[x] = true;
         system(x, x) += disc;
         if(t + 1 < horizon)
            system(traj.states[t + 1], x) -= gamma * disc * rho.step(i, t);
      }
   }

   const Eigen::MatrixXd normal =
      system.transpose() * system + cfg.ih_reg * Eigen::MatrixXd::Identity(nS, nS);
   Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
   if(ldlt.info() != Eigen::Success)
      fail(ErrorKind::solver_error, "state density ratio system could not be factorized");
   // The ridge pulls toward the on-policy ratio 1, which solves the balance
   // equations exactly when pi_e = pi_b.
   const Eigen::VectorXd ones = Eigen::VectorXd::Ones(nS);
   Eigen::VectorXd omega = ldlt.solve(system.transpose() * start + cfg.ih_reg * ones);
   if(! omega.allFinite())
      fail(ErrorKind::solver_error, "state density ratio solution is not finite");
   for(Eigen::Index x = 0; x < nS; ++x)
      omega(x) = visited[x] ? std::max(0.0, omega(x)) : 0.0;
   return OmegaTable{std::move(omega)};
}

double ih_estimate(
   const Dataset& data,
   const OmegaTable& omega,
   const TabularPolicy& pi_e,
   const TabularPolicy& pi_b,
   double gamma)
{
   require_data(data, "ih_estimate");
   require(
      omega.omega.size() == static_cast<Eigen::Index>(data.space.n_states),
      "density ratio table does not match state space");
   const auto rho = cumulative_rho(data, pi_e, pi_b);
   detail::CompensatedSum num;
   detail::CompensatedSum den;
   double horizon_mass = 0.0;
   double disc = 1.0;
   for(std::size_t t = 0; t < data.horizon; ++t, disc *= gamma) {
      horizon_mass += disc;
      for(std::size_t i = 0; i < data.size(); ++i) {
         const auto& traj = data.trajectories[i];
         const double w = disc * omega.omega(traj.states[t]) * rho.step(i, t);
         num += w * traj.rewards[t];
         den += w;
      }
   }
   if(den.value() <= 0.0)
      fail(ErrorKind::degenerate_weights, "IH: density-ratio normalizer is zero");
   return horizon_mass * num.value() / den.value();
}

}  // namespace ope
