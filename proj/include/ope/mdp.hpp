#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ope {

using StateIndex = std::size_t;
using ActionIndex = std::size_t;

/// `unit_gaussian` adds N(0, 1) noise to every transition whose mean reward is
/// nonzero; zero-mean transitions (padding, sparse steps) stay noiseless.
enum class RewardNoise { none, unit_gaussian };

/// One possible successor of a (state, action) pair.
struct Outcome {
   StateIndex next;
   double prob;
   double reward;  ///< mean reward of the transition
};

/// Shape shared by an environment and every dataset collected in it: state and
/// action counts, which states are terminal, and the zero-reward absorbing state
/// used to pad trajectories to the fixed horizon.
struct StateSpace {
   std::size_t n_states = 0;
   std::size_t n_actions = 0;
   StateIndex absorbing = 0;
   std::vector<bool> terminal;

   [[nodiscard]] bool is_terminal(StateIndex s) const { return terminal.at(s); }
   [[nodiscard]] bool is_absorbing(StateIndex s) const { return s == absorbing; }
};

/// Finite MDP with a fixed horizon.
///
/// Transitions are stored sparsely per (state, action). Construction validates
/// the table invariants: rows are distributions, the initial distribution sums
/// to one, and every terminal state (the absorbing state included) moves to the
/// absorbing state with zero reward under every action.
class TabularMDP {
  public:
   struct Tables {
      StateSpace space;
      std::vector<std::vector<Outcome>> outcomes;  ///< indexed s * n_actions + a
      std::vector<double> initial;
      RewardNoise noise = RewardNoise::none;
      std::size_t horizon = 1;
      double gamma = 1.0;
   };

   explicit TabularMDP(Tables tables);

   [[nodiscard]] const StateSpace& space() const noexcept { return t_.space; }
   [[nodiscard]] std::size_t n_states() const noexcept { return t_.space.n_states; }
   [[nodiscard]] std::size_t n_actions() const noexcept { return t_.space.n_actions; }
   [[nodiscard]] StateIndex absorbing_state() const noexcept { return t_.space.absorbing; }
   [[nodiscard]] bool is_terminal(StateIndex s) const { return t_.space.is_terminal(s); }
   [[nodiscard]] std::size_t horizon() const noexcept { return t_.horizon; }
   [[nodiscard]] double gamma() const noexcept { return t_.gamma; }
   [[nodiscard]] RewardNoise reward_noise() const noexcept { return t_.noise; }
   [[nodiscard]] std::span<const double> initial_dist() const noexcept { return t_.initial; }

   [[nodiscard]] std::span<const Outcome> outcomes(StateIndex s, ActionIndex a) const
   {
      return t_.outcomes.at(s * n_actions() + a);
   }

   /// Dense lookups, zero for transitions that are not listed.
   [[nodiscard]] double transition(StateIndex s, ActionIndex a, StateIndex next) const;
   [[nodiscard]] double reward_mean(StateIndex s, ActionIndex a, StateIndex next) const;

   /// Same dynamics with a different horizon or discount.
   [[nodiscard]] TabularMDP with_horizon(std::size_t horizon) const;
   [[nodiscard]] TabularMDP with_gamma(double gamma) const;

  private:
   Tables t_;
};

/// State-by-action probability matrix.
class TabularPolicy {
  public:
   explicit TabularPolicy(Eigen::MatrixXd probs);

   static TabularPolicy uniform(std::size_t n_states, std::size_t n_actions);

   [[nodiscard]] double operator()(StateIndex s, ActionIndex a) const { return probs_(s, a); }
   [[nodiscard]] const Eigen::MatrixXd& probs() const noexcept { return probs_; }
   [[nodiscard]] std::size_t n_states() const noexcept { return probs_.rows(); }
   [[nodiscard]] std::size_t n_actions() const noexcept { return probs_.cols(); }

  private:
   Eigen::MatrixXd probs_;
};

/// A fixed-length episode. `states` holds T + 1 entries (the last one is the
/// state reached after the final action); `actions` and `rewards` hold T.
struct Trajectory {
   std::vector<StateIndex> states;
   std::vector<ActionIndex> actions;
   std::vector<double> rewards;

   [[nodiscard]] std::size_t length() const noexcept { return actions.size(); }
   friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct Dataset {
   std::vector<Trajectory> trajectories;
   StateSpace space;
   std::size_t horizon = 0;
   std::uint64_t seed = 0;
   bool pi_b_known = true;
   TabularPolicy pi_b = TabularPolicy::uniform(1, 1);

   [[nodiscard]] std::size_t size() const noexcept { return trajectories.size(); }
   [[nodiscard]] bool empty() const noexcept { return trajectories.empty(); }
};

/// State-by-action value estimates.
struct QTable {
   Eigen::MatrixXd q;

   static QTable zeros(std::size_t n_states, std::size_t n_actions)
   {
      return QTable{Eigen::MatrixXd::Zero(n_states, n_actions)};
   }

   /// V(x) = sum_a pi(a|x) q(x, a).
   [[nodiscard]] Eigen::VectorXd state_values(const TabularPolicy& pi) const
   {
      return (pi.probs().array() * q.array()).rowwise().sum();
   }
};

/// Throws unless the policy is defined on every state of `space`.
void check_policy_shape(const TabularPolicy& pi, const StateSpace& space);

/// Sum_t gamma^t r_t of one trajectory.
double discounted_return(const Trajectory& traj, double gamma);

}  // namespace ope
