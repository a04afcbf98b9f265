#pragma once

#include "ope/importance.hpp"
#include "ope/mdp.hpp"

#include <array>
#include <optional>
#include <string_view>

namespace ope {

enum class IpsVariant { IS, PDIS, WIS, PDWIS, NAIVE };

inline constexpr std::array all_ips_variants{
   IpsVariant::IS, IpsVariant::PDIS, IpsVariant::WIS, IpsVariant::PDWIS, IpsVariant::NAIVE};

std::string_view to_string(IpsVariant v) noexcept;
std::optional<IpsVariant> parse_ips_variant(std::string_view name) noexcept;

/// Trajectory-weighting estimate of V(pi_e).
///
///   IS    = 1/N sum_i rho_{0:T-1} G_i
///   PDIS  = 1/N sum_i sum_t gamma^t rho_{0:t} r_t
///   WIS   = sum_i rho_{0:T-1} G_i / sum_i rho_{0:T-1}
///   PDWIS = sum_t gamma^t sum_i rho_{0:t} r_t / sum_i rho_{0:t}
///   NAIVE = 1/N sum_i G_i  (ignores both policies)
///
/// The weighted forms throw degenerate_weights when a normalizer is zero.
double ips_estimate(
   IpsVariant variant,
   const Dataset& data,
   const TabularPolicy& pi_e,
   const TabularPolicy& pi_b,
   double gamma);

/// Same estimate from precomputed weights.
double ips_estimate(IpsVariant variant, const Dataset& data, const RhoTable& rho, double gamma);

}  // namespace ope
