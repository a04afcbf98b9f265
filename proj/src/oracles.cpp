#include "ope/oracles.hpp"

#include "ope/dataset.hpp"
#include "ope/errors.hpp"
#include "ope/rng.hpp"

#include <cmath>
#include <functional>

namespace ope {

QTable evaluate_q(const TabularMDP& mdp, const TabularPolicy& pi, std::size_t sweeps)
{
   check_policy_shape(pi, mdp.space());
   const auto nS = mdp.n_states();
   const auto nA = mdp.n_actions();
   const double gamma = mdp.gamma();
   QTable q = QTable::zeros(nS, nA);
   for(std::size_t k = 0; k < sweeps; ++k) {
      const Eigen::VectorXd v = q.state_values(pi);
      Eigen::MatrixXd next(nS, nA);
      for(StateIndex s = 0; s < nS; ++s) {
         for(ActionIndex a = 0; a < nA; ++a) {
            double acc = 0.0;
            for(const auto& o : mdp.outcomes(s, a))
               acc += o.prob * (o.reward + gamma * v(o.next));
            next(s, a) = acc;
         }
      }
      q.q = std::move(next);
   }
   return q;
}

double exact_policy_value(const TabularMDP& mdp, const TabularPolicy& pi)
{
   const Eigen::VectorXd v = evaluate_q(mdp, pi, mdp.horizon()).state_values(pi);
   double value = 0.0;
   const auto init = mdp.initial_dist();
   for(StateIndex s = 0; s < mdp.n_states(); ++s)
      value += init[s] * v(s);
   return value;
}

MonteCarloEstimate monte_carlo_value(
   const TabularMDP& mdp,
   const TabularPolicy& pi,
   std::size_t n_rollouts,
   std::uint64_t seed)
{
   if(n_rollouts == 0)
      fail(ErrorKind::invalid_argument, "monte_carlo_value: n_rollouts must be positive");
   check_policy_shape(pi, mdp.space());
   double mean = 0.0;
   double m2 = 0.0;
   for(std::size_t k = 0; k < n_rollouts; ++k) {
      auto rng = make_stream(seed, StreamTag::rollout, k);
      const double g = discounted_return(sample_trajectory(mdp, pi, rng), mdp.gamma());
      const double delta = g - mean;
      mean += delta / static_cast<double>(k + 1);
      m2 += delta * (g - mean);
   }
   MonteCarloEstimate est;
   est.value = mean;
   est.n_rollouts = n_rollouts;
   if(n_rollouts > 1) {
      const double var = m2 / static_cast<double>(n_rollouts - 1);
      est.std_error = std::sqrt(var / static_cast<double>(n_rollouts));
   }
   return est;
}

std::vector<WeightedTrajectory> enumerate_trajectories(
   const TabularMDP& mdp,
   const TabularPolicy& pi,
   std::size_t cap)
{
   require(
      mdp.reward_noise() == RewardNoise::none,
      "enumerate_trajectories needs deterministic rewards");
   check_policy_shape(pi, mdp.space());

   std::vector<WeightedTrajectory> out;
   const std::size_t horizon = mdp.horizon();
   Trajectory current;

   std::function<void(StateIndex, std::size_t, double)> expand =
      [&](StateIndex s, std::size_t t, double prob) {
         if(t == horizon) {
            if(out.size() >= cap) {
               fail(
                  ErrorKind::enumeration_limit,
                  "trajectory enumeration exceeds cap of " + std::to_string(cap));
            }
            out.push_back({current, prob});
            return;
         }
         if(mdp.is_terminal(s)) {
            current.actions.push_back(0);
            current.rewards.push_back(0.0);
            current.states.push_back(mdp.absorbing_state());
            expand(mdp.absorbing_state(), t + 1, prob);
            current.actions.pop_back();
            current.rewards.pop_back();
            current.states.pop_back();
            return;
         }
         for(ActionIndex a = 0; a < mdp.n_actions(); ++a) {
            const double pa = pi(s, a);
            if(pa <= 0.0)
               continue;
            for(const auto& o : mdp.outcomes(s, a)) {
               if(o.prob <= 0.0)
                  continue;
               current.actions.push_back(a);
               current.rewards.push_back(o.reward);
               current.states.push_back(o.next);
               expand(o.next, t + 1, prob * pa * o.prob);
               current.actions.pop_back();
               current.rewards.pop_back();
               current.states.pop_back();
            }
         }
      };

   const auto init = mdp.initial_dist();
   for(StateIndex s = 0; s < mdp.n_states(); ++s) {
      if(init[s] <= 0.0)
         continue;
      current.states.assign(1, s);
      expand(s, 0, init[s]);
   }
   return out;
}

Dataset single_trajectory_dataset(
   const TabularMDP& mdp,
   const TabularPolicy& pi_b,
   const Trajectory& traj)
{
   Dataset data;
   data.space = mdp.space();
   data.horizon = mdp.horizon();
   data.pi_b = pi_b;
   data.trajectories.push_back(traj);
   return data;
}

}  // namespace ope
