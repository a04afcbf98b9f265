#include "ope/metrics.hpp"

#include "ope/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ope {

double relative_mse(const std::vector<double>& estimates, const std::vector<double>& truths)
{
   require(! estimates.empty(), "relative_mse: no estimates");
   require(estimates.size() == truths.size(), "relative_mse: estimate and truth counts differ");
   const double m = static_cast<double>(truths.size());
   double mean_truth = 0.0;
   for(double v : truths)
      mean_truth += v;
   mean_truth /= m;
   require(mean_truth != 0.0, "relative_mse: mean true value is zero");
   double sq = 0.0;
   for(double v : estimates)
      sq += (v - mean_truth) * (v - mean_truth);
   return sq / m / (mean_truth * mean_truth);
}

std::vector<double> near_top_frequency(const std::vector<std::vector<double>>& table)
{
   require(! table.empty() && ! table.front().empty(), "near_top_frequency: empty table");
   const auto n_est = table.front().size();
   std::vector<double> freq(n_est, 0.0);
   for(const auto& row : table) {
      require(row.size() == n_est, "near_top_frequency: ragged table");
      double best = std::numeric_limits<double>::infinity();
      for(double v : row)
         if(std::isfinite(v))
            best = std::min(best, v);
      if(! std::isfinite(best))
         continue;
      for(std::size_t e = 0; e < n_est; ++e)
         if(std::isfinite(row[e]) && row[e] <= near_top_margin * best)
            freq[e] += 1.0;
   }
   for(double& f : freq)
      f /= static_cast<double>(table.size());
   return freq;
}

double policy_mismatch(const TabularPolicy& pi_e, const TabularPolicy& pi_b, std::size_t horizon)
{
   require(
      pi_e.n_states() == pi_b.n_states() && pi_e.n_actions() == pi_b.n_actions(),
      "policy_mismatch: policy shapes differ");
   double sup = 0.0;
   for(StateIndex x = 0; x < pi_e.n_states(); ++x) {
      for(ActionIndex a = 0; a < pi_e.n_actions(); ++a) {
         const double pe = pi_e(x, a);
         if(pe <= 0.0)
            continue;
         const double pb = pi_b(x, a);
         if(pb <= 0.0)
            return std::numeric_limits<double>::infinity();
         sup = std::max(sup, pe / pb);
      }
   }
   return std::pow(sup, static_cast<double>(horizon));
}

}  // namespace ope
