#include "ope/ips.hpp"

#include "compensated_sum.hpp"

#include "ope/errors.hpp"

#include <string>

namespace ope {

std::string_view to_string(IpsVariant v) noexcept
{
   switch(v) {
      case IpsVariant::IS: return "IS";
      case IpsVariant::PDIS: return "PDIS";
      case IpsVariant::WIS: return "WIS";
      case IpsVariant::PDWIS: return "PDWIS";
      case IpsVariant::NAIVE: return "NAIVE";
   }
   return "?";
}

std::optional<IpsVariant> parse_ips_variant(std::string_view name) noexcept
{
   for(auto v : all_ips_variants)
      if(to_string(v) == name)
         return v;
   return std::nullopt;
}

namespace {

double naive(const Dataset& data, double gamma)
{
   detail::CompensatedSum sum;
   for(const auto& traj : data.trajectories)
      sum += discounted_return(traj, gamma);
   return sum.value() / static_cast<double>(data.size());
}

}  // namespace

double ips_estimate(IpsVariant variant, const Dataset& data, const RhoTable& rho, double gamma)
{
   if(data.empty())
      fail(ErrorKind::empty_dataset, "ips_estimate: empty dataset");
   if(variant == IpsVariant::NAIVE)
      return naive(data, gamma);
   require(rho.n_trajectories() == data.size(), "weight table does not match dataset");

   const auto n = data.size();
   const auto horizon = data.horizon;
   const auto last = static_cast<std::ptrdiff_t>(horizon) - 1;
   const double inv_n = 1.0 / static_cast<double>(n);

   switch(variant) {
      case IpsVariant::IS:
      case IpsVariant::WIS: {
         detail::CompensatedSum num;
         detail::CompensatedSum den;
         for(std::size_t i = 0; i < n; ++i) {
            const double w = rho.cumulative(i, last);
            num += w * discounted_return(data.trajectories[i], gamma);
            den += w;
         }
         if(variant == IpsVariant::IS)
            return num.value() * inv_n;
         if(den.value() <= 0.0)
            fail(ErrorKind::degenerate_weights, "WIS: all trajectory weights are zero");
         return num.value() / den.value();
      }
      case IpsVariant::PDIS: {
         detail::CompensatedSum total;
         for(std::size_t i = 0; i < n; ++i) {
            const auto& r = data.trajectories[i].rewards;
            double disc = 1.0;
            for(std::size_t t = 0; t < horizon; ++t) {
               total += disc * rho.cumulative(i, static_cast<std::ptrdiff_t>(t)) * r[t];
               disc *= gamma;
            }
         }
         return total.value() * inv_n;
      }
      case IpsVariant::PDWIS: {
         detail::CompensatedSum total;
         double disc = 1.0;
         for(std::size_t t = 0; t < horizon; ++t) {
            detail::CompensatedSum num_sum;
            detail::CompensatedSum den_sum;
            for(std::size_t i = 0; i < n; ++i) {
               const double w = rho.cumulative(i, static_cast<std::ptrdiff_t>(t));
               num_sum += w * data.trajectories[i].rewards[t];
               den_sum += w;
            }
            const double num = num_sum.value();
            const double den = den_sum.value();
            if(den <= 0.0) {
               fail(
                  ErrorKind::degenerate_weights,
                  "PDWIS: all weights are zero at t=" + std::to_string(t));
            }
            total += disc * num / den;
            disc *= gamma;
         }
         return total.value();
      }
      case IpsVariant::NAIVE: break;
   }
   return naive(data, gamma);
}

double ips_estimate(
   IpsVariant variant,
   const Dataset& data,
   const TabularPolicy& pi_e,
   const TabularPolicy& pi_b,
   double gamma)
{
   if(variant == IpsVariant::NAIVE) {
      if(data.empty())
         fail(ErrorKind::empty_dataset, "ips_estimate: empty dataset");
      return naive(data, gamma);
   }
   return ips_estimate(variant, data, cumulative_rho(data, pi_e, pi_b), gamma);
}

}  // namespace ope
