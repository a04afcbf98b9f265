#pragma once

#include "ope/config.hpp"
#include "ope/environments.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ope {

/// Environment and policies for one configuration. Simulation runs on
/// `mdp`; estimators see states relabeled through `observation` into `space`
/// (the identity unless the environment hides state).
struct ExperimentSetup {
   TabularMDP mdp;
   std::vector<StateIndex> observation;
   StateSpace space;
   bool relabel = false;
   TabularPolicy pi_b;      ///< on `space`
   TabularPolicy pi_e;      ///< on `space`
   TabularPolicy pi_b_sim;  ///< on mdp states
   TabularPolicy pi_e_sim;  ///< on mdp states
};

ExperimentSetup build_setup(const ExperimentConfig& cfg);

/// V(pi_e) by exact DP or by Monte-Carlo rollouts, per the configuration.
double ground_truth(const ExperimentConfig& cfg, const ExperimentSetup& setup);

/// Status values recorded per cell. Estimates are kept for `ok` and
/// `non_convergence`; the other values name the error that stopped the
/// estimator and leave the estimate NaN.
inline constexpr std::string_view status_ok = "ok";
inline constexpr std::string_view status_non_convergence = "non_convergence";

bool status_has_estimate(std::string_view status) noexcept;

struct ReportRow {
   std::string env;
   std::size_t T = 0;
   double gamma = 1.0;
   std::size_t N = 0;
   std::uint64_t seed = 0;
   std::string estimator;
   std::string cls;
   double estimate = 0.0;
   double true_value = 0.0;
   std::string status;

   bool operator==(const ReportRow&) const = default;
};

struct ExperimentReport {
   std::vector<ReportRow> rows;
   double true_value = 0.0;
   double mismatch = 0.0;  ///< policy mismatch on the estimator space
};

struct RunOptions {
   std::size_t threads = 1;
   std::optional<std::filesystem::path> dump_dir;  ///< Q / omega / MAGIC JSON per cell
};

/// Every configured estimator on every (N, seed) dataset. Rows are ordered by
/// N, seed, then estimator regardless of thread count.
ExperimentReport run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

/// Rows of one (N, seed) cell.
std::vector<ReportRow> run_cell(
   const ExperimentConfig& cfg,
   const ExperimentSetup& setup,
   std::size_t n_trajectories,
   std::uint64_t seed,
   double true_value,
   const std::optional<std::filesystem::path>& dump_dir = {});

/// Names of every estimator the harness can run, in report order.
std::vector<std::string> estimator_names();

}  // namespace ope
