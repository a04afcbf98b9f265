#pragma once

#include "ope/mdp.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ope {

// ---------------------------------------------------------------------------
// Graph
// ---------------------------------------------------------------------------

inline constexpr double graph_slip_probability = 0.25;

/// Chain of T decision layers. From depth t the agent enters 2t+1 (action 0)
/// or 2t+2 (action 1); odd successors pay +1 and even ones -1. States
/// 0..2T-1 are the layers, 2T is absorbing. The two depth-T states are
/// terminal (2T doubles as the even depth-T state and the absorbing state).
struct GraphSpec {
   std::size_t T = 4;
   bool stochastic_env = false;      ///< successors swap with probability 0.25
   bool stochastic_rewards = false;  ///< N(mean, 1) rewards
   bool sparse_rewards = false;      ///< only the last step pays, by parity of x_{T-1}
   double gamma = 0.98;
};

TabularMDP build_graph(const GraphSpec& spec);

/// Depth (time index) of a Graph state.
std::size_t graph_depth(StateIndex s);

// ---------------------------------------------------------------------------
// Graph-POMDP
// ---------------------------------------------------------------------------

/// Graph dynamics observed through H buckets. Depth-t states map to bucket
/// floor(t * H / T), which hides their parity; terminal states share the
/// absorbing observation H. With `expose_parity` the map is the identity and
/// the problem is the fully observed Graph.
struct GraphPomdpSpec {
   GraphSpec underlying;
   std::size_t H = 2;
   bool expose_parity = false;
};

struct PartiallyObservedMDP {
   TabularMDP mdp;                      ///< simulation runs on these states
   std::vector<StateIndex> observation;  ///< state -> observation, total
   StateSpace observed_space;            ///< estimators run on this space
};

PartiallyObservedMDP build_graph_pomdp(const GraphPomdpSpec& spec);

/// Policy on states that acts as `observed` does on each state's observation.
TabularPolicy lift_policy(const TabularPolicy& observed, const std::vector<StateIndex>& observation);

// ---------------------------------------------------------------------------
// Graph-MC
// ---------------------------------------------------------------------------

inline constexpr int graph_mc_min_position = -10;
inline constexpr int graph_mc_goal_position = 11;

/// One-dimensional valley. Positions -10..+11 are states 0..21, the start is
/// position 0 and state 22 is absorbing. Action 0 moves left (a wall holds the
/// agent at -10), action 1 moves right. Every step pays -1 except the one
/// entering the goal +11, which pays 0; the goal is terminal.
struct GraphMCSpec {
   std::size_t T = 250;
   double gamma = 0.99;
};

TabularMDP build_graph_mc(const GraphMCSpec& spec);

StateIndex graph_mc_state(int position);

// ---------------------------------------------------------------------------
// Gridworld
// ---------------------------------------------------------------------------

/// Rows of cell classes: S start, F field (-0.005), H hole (-0.5), G goal (+1),
/// '.' plain (-0.01). The reward is that of the cell entered.
struct GridworldLayout {
   std::vector<std::string> rows;

   [[nodiscard]] std::size_t n_rows() const noexcept { return rows.size(); }
   [[nodiscard]] std::size_t n_cols() const noexcept { return rows.empty() ? 0 : rows.front().size(); }
};

/// Approximation of the published 8x8 map: starts along the first row and
/// column, goal in the bottom-right corner.
GridworldLayout default_gridworld_layout();

/// Plain text, one row per line; blank lines and lines starting with '#' are
/// skipped. Throws on ragged rows, unknown characters, no start, or a goal
/// count other than one.
GridworldLayout parse_gridworld_layout(std::istream& in);
GridworldLayout load_gridworld_layout(const std::filesystem::path& path);

struct GridworldSpec {
   GridworldLayout layout = default_gridworld_layout();
   std::size_t T = 25;
   double gamma = 0.98;
};

enum GridAction : ActionIndex { up = 0, right = 1, down = 2, left = 3 };

/// Cells are states row * n_cols + col; the absorbing state is n_rows * n_cols.
/// Moves off the grid leave the agent in place.
TabularMDP build_gridworld(const GridworldSpec& spec);

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

/// Optimal action values. For gamma < 1 iterates the Bellman optimality
/// operator until the largest change falls below `tol`; for gamma = 1 runs
/// exactly `horizon` sweeps.
QTable value_iteration(const TabularMDP& mdp, double tol = 1e-10, std::size_t max_iter = 100000);

/// (1 - eps) on the greedy action (lowest index among ties) plus eps / |A|.
TabularPolicy eps_greedy(const QTable& q, double eps);

/// Binary-action policy taking action 0 with probability p0 in every state.
TabularPolicy static_policy(std::size_t n_states, double p0);

}  // namespace ope
