#include "ope/mdp.hpp"

#include "compensated_sum.hpp"

#include "ope/errors.hpp"

#include <cmath>
#include <string>

namespace ope {

std::string_view to_string(ErrorKind kind) noexcept
{
   switch(kind) {
      case ErrorKind::invalid_argument: return "invalid_argument";
      case ErrorKind::empty_dataset: return "empty_dataset";
      case ErrorKind::support_violation: return "support_violation";
      case ErrorKind::degenerate_weights: return "degenerate_weights";
      case ErrorKind::non_convergence: return "non_convergence";
      case ErrorKind::solver_error: return "solver_error";
      case ErrorKind::enumeration_limit: return "enumeration_limit";
   }
   return "unknown";
}

namespace {

constexpr double row_tolerance = 1e-12;

}  // namespace

TabularMDP::TabularMDP(Tables tables) : t_(std::move(tables))
{
   const auto& sp = t_.space;
   require(sp.n_states > 0 && sp.n_actions > 0, "mdp needs at least one state and action");
   require(sp.terminal.size() == sp.n_states, "terminal mask size mismatch");
   require(sp.absorbing < sp.n_states, "absorbing state out of range");
   require(sp.terminal[sp.absorbing], "absorbing state must be terminal");
   require(t_.outcomes.size() == sp.n_states * sp.n_actions, "outcome table size mismatch");
   require(t_.initial.size() == sp.n_states, "initial distribution size mismatch");
   require(t_.horizon >= 1, "horizon must be at least 1");
   require(t_.gamma > 0.0 && t_.gamma <= 1.0, "gamma must lie in (0, 1]");

   double init_sum = 0.0;
   for(double p : t_.initial) {
      require(p >= 0.0, "negative initial probability");
      init_sum += p;
   }
   require(std::abs(init_sum - 1.0) <= row_tolerance, "initial distribution must sum to 1");

   for(StateIndex s = 0; s < sp.n_states; ++s) {
      for(ActionIndex a = 0; a < sp.n_actions; ++a) {
         const auto& row = t_.outcomes[s * sp.n_actions + a];
         double sum = 0.0;
         for(const auto& o : row) {
            require(o.next < sp.n_states, "transition target out of range");
            require(o.prob >= 0.0, "negative transition probability");
            require(std::isfinite(o.reward), "non-finite reward");
            sum += o.prob;
         }
         require(
            std::abs(sum - 1.0) <= row_tolerance,
            "transition row (" + std::to_string(s) + ", " + std::to_string(a) + ") must sum to 1");
         if(sp.terminal[s]) {
            for(const auto& o : row) {
               require(
                  o.prob == 0.0 || (o.next == sp.absorbing && o.reward == 0.0),
                  "terminal state " + std::to_string(s)
                     + " must move to the absorbing state with zero reward");
            }
         }
      }
   }
}

double TabularMDP::transition(StateIndex s, ActionIndex a, StateIndex next) const
{
   double p = 0.0;
   for(const auto& o : outcomes(s, a))
      if(o.next == next)
         p += o.prob;
   return p;
}

double TabularMDP::reward_mean(StateIndex s, ActionIndex a, StateIndex next) const
{
   for(const auto& o : outcomes(s, a))
      if(o.next == next)
         return o.reward;
   return 0.0;
}

TabularMDP TabularMDP::with_horizon(std::size_t horizon) const
{
   Tables copy = t_;
   copy.horizon = horizon;
   return TabularMDP(std::move(copy));
}

TabularMDP TabularMDP::with_gamma(double gamma) const
{
   Tables copy = t_;
   copy.gamma = gamma;
   return TabularMDP(std::move(copy));
}

TabularPolicy::TabularPolicy(Eigen::MatrixXd probs) : probs_(std::move(probs))
{
   require(probs_.rows() > 0 && probs_.cols() > 0, "policy must be non-empty");
   for(Eigen::Index s = 0; s < probs_.rows(); ++s) {
      double sum = 0.0;
      for(Eigen::Index a = 0; a < probs_.cols(); ++a) {
         require(probs_(s, a) >= 0.0, "policy probabilities must be non-negative");
         sum += probs_(s, a);
      }
      require(
         std::abs(sum - 1.0) <= row_tolerance,
         "policy row " + std::to_string(s) + " must sum to 1");
   }
}

TabularPolicy TabularPolicy::uniform(std::size_t n_states, std::size_t n_actions)
{
   return TabularPolicy(
      Eigen::MatrixXd::Constant(n_states, n_actions, 1.0 / static_cast<double>(n_actions)));
}

void check_policy_shape(const TabularPolicy& pi, const StateSpace& space)
{
   require(
      pi.n_states() == space.n_states && pi.n_actions() == space.n_actions,
      "policy shape " + std::to_string(pi.n_states()) + "x" + std::to_string(pi.n_actions())
         + " does not match state space " + std::to_string(space.n_states) + "x"
         + std::to_string(space.n_actions));
}

double discounted_return(const Trajectory& traj, double gamma)
{
   detail::CompensatedSum g;
   double disc = 1.0;
   for(double r : traj.rewards) {
      g += disc * r;
      disc *= gamma;
   }
   return g.value();
}

}  // namespace ope
