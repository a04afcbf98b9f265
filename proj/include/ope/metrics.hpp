#pragma once

#include "ope/mdp.hpp"

#include <vector>

namespace ope {

/// (1/m) sum_i (v_i - V)^2 / V^2 with V the mean of `truths`. Throws on
/// mismatched or empty inputs and on a zero mean truth.
double relative_mse(const std::vector<double>& estimates, const std::vector<double>& truths);

/// `table[c][e]` is the relative MSE of estimator e under condition c. Per
/// condition, estimators within 1.1x of the best are marked; the result is the
/// marked fraction per estimator. Non-finite entries (failed estimators) are
/// never marked and do not set the minimum. Throws on an empty or ragged table.
std::vector<double> near_top_frequency(const std::vector<std::vector<double>>& table);

inline constexpr double near_top_margin = 1.1;

/// (sup_{x, a} pi_e(a|x) / pi_b(a|x))^T, +inf when pi_b misses support of pi_e.
double policy_mismatch(const TabularPolicy& pi_e, const TabularPolicy& pi_b, std::size_t horizon);

}  // namespace ope
