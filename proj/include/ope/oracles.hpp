#pragma once

#include "ope/mdp.hpp"

#include <cstdint>
#include <vector>

namespace ope {

/// Q after `sweeps` Bellman evaluation backups of pi starting from Q = 0.
/// With sweeps = horizon this is the time-0 finite-horizon action value; for
/// environments whose states encode depth it is Q^pi at every reachable state.
QTable evaluate_q(const TabularMDP& mdp, const TabularPolicy& pi, std::size_t sweeps);

/// V(pi) = sum_x d0(x) V_0(x) by backward induction over exactly T steps on the
/// mean reward table.
double exact_policy_value(const TabularMDP& mdp, const TabularPolicy& pi);

struct MonteCarloEstimate {
   double value = 0.0;
   double std_error = 0.0;  ///< sample std / sqrt(n)
   std::size_t n_rollouts = 0;
};

/// Sample mean of discounted returns over `n_rollouts` episodes. Rollout k uses
/// its own stream of `seed`.
MonteCarloEstimate monte_carlo_value(
   const TabularMDP& mdp,
   const TabularPolicy& pi,
   std::size_t n_rollouts,
   std::uint64_t seed);

struct WeightedTrajectory {
   Trajectory trajectory;
   double probability = 0.0;
};

inline constexpr std::size_t default_enumeration_cap = 1'000'000;

/// Every trajectory of positive probability under pi together with its
/// probability. Steps from terminal states are not branched (action 0, reward
/// 0, absorbing successor), matching the padding of generated datasets.
/// Throws enumeration_limit when the count exceeds `cap` and invalid_argument
/// when rewards are stochastic.
std::vector<WeightedTrajectory> enumerate_trajectories(
   const TabularMDP& mdp,
   const TabularPolicy& pi,
   std::size_t cap = default_enumeration_cap);

/// Dataset holding a single trajectory, with the state space of `mdp` and
/// behavior policy `pi_b`. Used to evaluate an estimator on every enumerated
/// outcome.
Dataset single_trajectory_dataset(
   const TabularMDP& mdp,
   const TabularPolicy& pi_b,
   const Trajectory& traj);

}  // namespace ope
