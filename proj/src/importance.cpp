#include "ope/importance.hpp"

#include "ope/errors.hpp"

#include <string>

namespace ope {

double RhoTable::range(std::size_t i, std::ptrdiff_t from, std::ptrdiff_t to) const
{
   const auto last = std::min<std::ptrdiff_t>(to, static_cast<std::ptrdiff_t>(horizon()) - 1);
   double rho = 1.0;
   for(auto t = std::max<std::ptrdiff_t>(from, 0); t <= last; ++t)
      rho *= step_(i, t);
   return rho;
}

RhoTable cumulative_rho(const Dataset& data, const TabularPolicy& pi_e, const TabularPolicy& pi_b)
{
   if(data.empty())
      fail(ErrorKind::empty_dataset, "cumulative_rho: empty dataset");
   check_policy_shape(pi_e, data.space);
   check_policy_shape(pi_b, data.space);

   const auto n = data.size();
   const auto horizon = data.horizon;
   Eigen::MatrixXd step(n, horizon);
   Eigen::MatrixXd cum(n, horizon);
   for(std::size_t i = 0; i < n; ++i) {
      const auto& traj = data.trajectories[i];
      require(traj.length() == horizon, "trajectory length differs from dataset horizon");
      double running = 1.0;
      for(std::size_t t = 0; t < horizon; ++t) {
         const auto x = traj.states[t];
         const auto a = traj.actions[t];
         double ratio = 1.0;
         if(! data.space.is_terminal(x)) {
            const double pb = pi_b(x, a);
            if(pb <= 0.0) {
               fail(
                  ErrorKind::support_violation,
                  "logged action has zero behavior probability at (i=" + std::to_string(i)
                     + ", t=" + std::to_string(t) + ", x=" + std::to_string(x)
                     + ", a=" + std::to_string(a) + ")");
            }
            ratio = pi_e(x, a) / pb;
         }
         running *= ratio;
         step(i, t) = ratio;
         cum(i, t) = running;
      }
   }
   return RhoTable(std::move(step), std::move(cum));
}

}  // namespace ope
