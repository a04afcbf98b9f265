#include "ope/environments.hpp"

#include "ope/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace ope {

namespace {

TabularMDP::Tables empty_tables(std::size_t n_states, std::size_t n_actions, StateIndex absorbing)
{
   TabularMDP::Tables t;
   t.space.n_states = n_states;
   t.space.n_actions = n_actions;
   t.space.absorbing = absorbing;
   t.space.terminal.assign(n_states, false);
   t.space.terminal[absorbing] = true;
   t.outcomes.resize(n_states * n_actions);
   t.initial.assign(n_states, 0.0);
   return t;
}

void close_terminal_rows(TabularMDP::Tables& t)
{
   for(StateIndex s = 0; s < t.space.n_states; ++s)
      if(t.space.terminal[s])
         for(ActionIndex a = 0; a < t.space.n_actions; ++a)
            t.outcomes[s * t.space.n_actions + a] = {{t.space.absorbing, 1.0, 0.0}};
}

}  // namespace

std::size_t graph_depth(StateIndex s)
{
   return s == 0 ? 0 : (s + 1) / 2;
}

TabularMDP build_graph(const GraphSpec& spec)
{
   require(spec.T >= 1, "graph horizon must be at least 1");
   const std::size_t T = spec.T;
   const std::size_t n_states = 2 * T + 1;
   auto t = empty_tables(n_states, 2, 2 * T);
   t.space.terminal[2 * T - 1] = true;
   t.horizon = T;
   t.gamma = spec.gamma;
   t.noise = spec.stochastic_rewards ? RewardNoise::unit_gaussian : RewardNoise::none;
   t.initial[0] = 1.0;

   const double slip = spec.stochastic_env ? graph_slip_probability : 0.0;
   for(StateIndex s = 0; s < n_states; ++s) {
      if(t.space.terminal[s])
         continue;
      const std::size_t d = graph_depth(s);
      const StateIndex odd = 2 * d + 1;
      const StateIndex even = 2 * d + 2;
      auto reward = [&](StateIndex next) {
         if(spec.sparse_rewards)
            return d == T - 1 ? (s % 2 == 1 ? 1.0 : -1.0) : 0.0;
         return next % 2 == 1 ? 1.0 : -1.0;
      };
      for(ActionIndex a = 0; a < 2; ++a) {
         const StateIndex intended = a == 0 ? odd : even;
         const StateIndex slipped = a == 0 ? even : odd;
         auto& row = t.outcomes[s * 2 + a];
         row.push_back({intended, 1.0 - slip, reward(intended)});
         if(slip > 0.0)
            row.push_back({slipped, slip, reward(slipped)});
      }
   }
   close_terminal_rows(t);
   return TabularMDP(std::move(t));
}

PartiallyObservedMDP build_graph_pomdp(const GraphPomdpSpec& spec)
{
   const std::size_t T = spec.underlying.T;
   require(spec.H >= 1 && spec.H <= T, "graph-pomdp needs 1 <= H <= T");
   TabularMDP mdp = build_graph(spec.underlying);
   const std::size_t n = mdp.n_states();

   if(spec.expose_parity) {
      std::vector<StateIndex> identity(n);
      for(StateIndex s = 0; s < n; ++s)
         identity[s] = s;
      StateSpace space = mdp.space();
      return {std::move(mdp), std::move(identity), std::move(space)};
   }

   std::vector<StateIndex> obs(n);
   for(StateIndex s = 0; s < n; ++s)
      obs[s] = mdp.is_terminal(s) ? spec.H : graph_depth(s) * spec.H / T;

   StateSpace space;
   space.n_states = spec.H + 1;
   space.n_actions = mdp.n_actions();
   space.absorbing = spec.H;
   space.terminal.assign(spec.H + 1, false);
   space.terminal[spec.H] = true;
   return {std::move(mdp), std::move(obs), std::move(space)};
}

TabularPolicy lift_policy(const TabularPolicy& observed, const std::vector<StateIndex>& observation)
{
   Eigen::MatrixXd probs(observation.size(), observed.n_actions());
   for(std::size_t s = 0; s < observation.size(); ++s) {
      require(observation[s] < observed.n_states(), "observation outside policy table");
      probs.row(s) = observed.probs().row(observation[s]);
   }
   return TabularPolicy(std::move(probs));
}

StateIndex graph_mc_state(int position)
{
   require(
      position >= graph_mc_min_position && position <= graph_mc_goal_position,
      "graph-mc position out of range");
   return static_cast<StateIndex>(position - graph_mc_min_position);
}

TabularMDP build_graph_mc(const GraphMCSpec& spec)
{
   require(spec.T >= 1, "graph-mc horizon must be at least 1");
   const StateIndex goal = graph_mc_state(graph_mc_goal_position);
   const std::size_t n_states = goal + 2;
   auto t = empty_tables(n_states, 2, goal + 1);
   t.space.terminal[goal] = true;
   t.horizon = spec.T;
   t.gamma = spec.gamma;
   t.initial[graph_mc_state(0)] = 1.0;

   for(StateIndex s = 0; s < goal; ++s) {
      const StateIndex left = s == 0 ? 0 : s - 1;
      const StateIndex right = s + 1;
      t.outcomes[s * 2 + 0] = {{left, 1.0, -1.0}};
      t.outcomes[s * 2 + 1] = {{right, 1.0, right == goal ? 0.0 : -1.0}};
   }
   close_terminal_rows(t);
   return TabularMDP(std::move(t));
}

GridworldLayout default_gridworld_layout()
{
   return GridworldLayout{{
      "SSSSSSSS",
      "S..F..H.",
      "S.FFF...",
      "S.FHF.H.",
      "S..F....",
      "S.H..FF.",
      "S...HFF.",
      "S......G",
   }};
}

namespace {

void validate_layout(const GridworldLayout& layout)
{
   require(layout.n_rows() > 0 && layout.n_cols() > 0, "gridworld layout is empty");
   std::size_t goals = 0;
   std::size_t starts = 0;
   for(const auto& row : layout.rows) {
      require(row.size() == layout.n_cols(), "gridworld layout rows must have equal length");
      for(char c : row) {
         require(
            c == 'S' || c == 'F' || c == 'H' || c == 'G' || c == '.',
            std::string("unknown gridworld cell '") + c + "'");
         goals += c == 'G';
         starts += c == 'S';
      }
   }
   require(goals == 1, "gridworld layout needs exactly one goal");
   require(starts >= 1, "gridworld layout needs at least one start cell");
}

double cell_reward(char c)
{
   switch(c) {
      case 'G': return 1.0;
      case 'F': return -0.005;
      case 'H': return -0.5;
      default: return -0.01;
   }
}

}  // namespace

GridworldLayout parse_gridworld_layout(std::istream& in)
{
   GridworldLayout layout;
   std::string line;
   while(std::getline(in, line)) {
      while(! line.empty() && (line.back() == '\r' || line.back() == ' '))
         line.pop_back();
      if(line.empty() || line.front() == '#')
         continue;
      layout.rows.push_back(line);
   }
   validate_layout(layout);
   return layout;
}

GridworldLayout load_gridworld_layout(const std::filesystem::path& path)
{
   std::ifstream in(path);
   require(bool(in), "cannot open gridworld layout " + path.string());
   return parse_gridworld_layout(in);
}

TabularMDP build_gridworld(const GridworldSpec& spec)
{
   validate_layout(spec.layout);
   require(spec.T >= 1, "gridworld horizon must be at least 1");
   const auto rows = spec.layout.n_rows();
   const auto cols = spec.layout.n_cols();
   const std::size_t cells = rows * cols;
   auto t = empty_tables(cells + 1, 4, cells);
   t.horizon = spec.T;
   t.gamma = spec.gamma;

   auto cell = [&](std::size_t s) { return spec.layout.rows[s / cols][s % cols]; };
   std::size_t starts = 0;
   for(std::size_t s = 0; s < cells; ++s) {
      if(cell(s) == 'G')
         t.space.terminal[s] = true;
      if(cell(s) == 'S')
         ++starts;
   }
   for(std::size_t s = 0; s < cells; ++s)
      if(cell(s) == 'S')
         t.initial[s] = 1.0 / static_cast<double>(starts);

   for(std::size_t s = 0; s < cells; ++s) {
      if(t.space.terminal[s])
         continue;
      const auto r = static_cast<long>(s / cols);
      const auto c = static_cast<long>(s % cols);
      for(ActionIndex a = 0; a < 4; ++a) {
         long nr = r;
         long nc = c;
         switch(a) {
            case GridAction::up: --nr; break;
            case GridAction::right: ++nc; break;
            case GridAction::down: ++nr; break;
            default: --nc; break;
         }
         if(nr < 0 || nc < 0 || nr >= static_cast<long>(rows) || nc >= static_cast<long>(cols)) {
            nr = r;
            nc = c;
         }
         const auto next = static_cast<StateIndex>(nr) * cols + static_cast<StateIndex>(nc);
         t.outcomes[s * 4 + a] = {{next, 1.0, cell_reward(cell(next))}};
      }
   }
   close_terminal_rows(t);
   return TabularMDP(std::move(t));
}

QTable value_iteration(const TabularMDP& mdp, double tol, std::size_t max_iter)
{
   const auto nS = mdp.n_states();
   const auto nA = mdp.n_actions();
   const double gamma = mdp.gamma();
   const bool finite = gamma >= 1.0;
   const std::size_t sweeps = finite ? mdp.horizon() : max_iter;
   QTable q = QTable::zeros(nS, nA);
   for(std::size_t k = 0; k < sweeps; ++k) {
      const Eigen::VectorXd v = q.q.rowwise().maxCoeff();
      Eigen::MatrixXd next(nS, nA);
      for(StateIndex s = 0; s < nS; ++s)
         for(ActionIndex a = 0; a < nA; ++a) {
            double acc = 0.0;
            for(const auto& o : mdp.outcomes(s, a))
               acc += o.prob * (o.reward + gamma * v(o.next));
            next(s, a) = acc;
         }
      const double change = (next - q.q).cwiseAbs().maxCoeff();
      q.q = std::move(next);
      if(! finite && change < tol)
         break;
   }
   return q;
}

TabularPolicy eps_greedy(const QTable& q, double eps)
{
   require(eps >= 0.0 && eps <= 1.0, "eps must lie in [0, 1]");
   const auto nS = q.q.rows();
   const auto nA = q.q.cols();
   Eigen::MatrixXd probs = Eigen::MatrixXd::Constant(nS, nA, eps / static_cast<double>(nA));
   for(Eigen::Index s = 0; s < nS; ++s) {
      Eigen::Index best = 0;
      for(Eigen::Index a = 1; a < nA; ++a)
         if(q.q(s, a) > q.q(s, best))
            best = a;
      probs(s, best) += 1.0 - eps;
   }
   return TabularPolicy(std::move(probs));
}

TabularPolicy static_policy(std::size_t n_states, double p0)
{
   require(p0 >= 0.0 && p0 <= 1.0, "static policy probability must lie in [0, 1]");
   Eigen::MatrixXd probs(n_states, 2);
   probs.col(0).setConstant(p0);
   probs.col(1).setConstant(1.0 - p0);
   return TabularPolicy(std::move(probs));
}

}  // namespace ope
