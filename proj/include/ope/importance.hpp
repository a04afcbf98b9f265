#pragma once

#include "ope/mdp.hpp"

namespace ope {

/// Per-step ratios pi_e/pi_b and their running products rho_{0:t} for every
/// trajectory of a dataset.
///
/// Actions taken from terminal states cannot influence anything (every action
/// leads to the absorbing state with reward 0), so their ratio is fixed at 1.
class RhoTable {
  public:
   RhoTable(Eigen::MatrixXd step, Eigen::MatrixXd cumulative)
       : step_(std::move(step)), cum_(std::move(cumulative))
   {
   }

   [[nodiscard]] std::size_t n_trajectories() const noexcept { return step_.rows(); }
   [[nodiscard]] std::size_t horizon() const noexcept { return step_.cols(); }

   /// pi_e(a_t|x_t) / pi_b(a_t|x_t) for trajectory i.
   [[nodiscard]] double step(std::size_t i, std::size_t t) const { return step_(i, t); }

   /// rho_{0:t}; t = -1 is the empty product.
   [[nodiscard]] double cumulative(std::size_t i, std::ptrdiff_t t) const
   {
      return t < 0 ? 1.0 : cum_(i, t);
   }

   /// rho_{from:to} as a product of per-step ratios; 1 when to < from.
   [[nodiscard]] double range(std::size_t i, std::ptrdiff_t from, std::ptrdiff_t to) const;

   [[nodiscard]] const Eigen::MatrixXd& steps() const noexcept { return step_; }
   [[nodiscard]] const Eigen::MatrixXd& cumulatives() const noexcept { return cum_; }

  private:
   Eigen::MatrixXd step_;
   Eigen::MatrixXd cum_;
};

/// Throws a support_violation error naming (i, t, x, a) when a logged action
/// has zero behavior probability.
RhoTable cumulative_rho(const Dataset& data, const TabularPolicy& pi_e, const TabularPolicy& pi_b);

}  // namespace ope
