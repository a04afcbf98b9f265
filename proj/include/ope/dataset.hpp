#pragma once

#include "ope/mdp.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace ope {

/// One episode of `pi` drawn from `rng`, padded to the horizon.
Trajectory sample_trajectory(const TabularMDP& mdp, const TabularPolicy& pi, std::mt19937_64& rng);

/// Rolls out `pi_b` in `mdp` for N episodes of exactly `mdp.horizon()` steps.
///
/// Episode i draws from its own stream of `seed`, so the result does not depend
/// on generation order. After the first terminal state every later state is the
/// absorbing state and every later reward is 0.
Dataset generate_dataset(
   const TabularMDP& mdp,
   const TabularPolicy& pi_b,
   std::size_t n_trajectories,
   std::uint64_t seed);

/// Empirical action frequencies per state with additive smoothing `alpha`.
/// Steps taken from terminal states are not counted; unvisited states get the
/// uniform row.
TabularPolicy estimate_behavior_policy(const Dataset& data, double alpha = 1.0);

/// Re-labels the states of every trajectory through `observation` (a total map
/// from underlying states to observation indices). The returned dataset lives
/// in `observed_space`; its behavior policy is `observed_pi_b`.
Dataset observe(
   const Dataset& data,
   const std::vector<StateIndex>& observation,
   const StateSpace& observed_space,
   const TabularPolicy& observed_pi_b);

/// Sidecar metadata written next to a JSON-lines trajectory file.
struct DatasetMetadata {
   std::string env;
   std::size_t horizon = 0;
   double gamma = 1.0;
   std::uint64_t seed = 0;
   std::size_t n_trajectories = 0;
   std::string pi_b_spec;
};

/// One trajectory per line: {"states":[...],"actions":[...],"rewards":[...]}.
void write_trajectories_jsonl(std::ostream& out, const Dataset& data);
std::vector<Trajectory> read_trajectories_jsonl(std::istream& in);

/// Writes `<stem>.jsonl` and `<stem>.meta.json`.
void save_dataset(
   const std::filesystem::path& stem,
   const Dataset& data,
   const DatasetMetadata& meta);

DatasetMetadata load_metadata(const std::filesystem::path& meta_file);

}  // namespace ope
