#include "ope/dataset.hpp"

#include "ope/errors.hpp"
#include "ope/rng.hpp"

#include <json.hpp>

#include <fstream>
#include <istream>
#include <ostream>

namespace ope {

Trajectory sample_trajectory(
   const TabularMDP& mdp,
   const TabularPolicy& pi,
   std::mt19937_64& rng)
{
   const std::size_t horizon = mdp.horizon();
   const auto init = mdp.initial_dist();
   Trajectory traj;
   traj.states.reserve(horizon + 1);
   traj.actions.reserve(horizon);
   traj.rewards.reserve(horizon);

   std::normal_distribution<double> noise(0.0, 1.0);
   const bool noisy = mdp.reward_noise() == RewardNoise::unit_gaussian;
   StateIndex s = sample_index([&](std::size_t k) { return init[k]; }, init.size(), rng);
   traj.states.push_back(s);
   for(std::size_t t = 0; t < horizon; ++t) {
      if(mdp.is_terminal(s)) {
         // padding: nothing after termination carries information
         traj.actions.push_back(0);
         traj.rewards.push_back(0.0);
         s = mdp.absorbing_state();
         traj.states.push_back(s);
         continue;
      }
      const ActionIndex a = sample_index(
         [&](std::size_t k) { return pi(s, k); }, mdp.n_actions(), rng);
      const auto outs = mdp.outcomes(s, a);
      const auto& o = outs[sample_index(
         [&](std::size_t k) { return outs[k].prob; }, outs.size(), rng)];
      double r = o.reward;
      if(noisy && o.reward != 0.0)
         r += noise(rng);
      traj.actions.push_back(a);
      traj.rewards.push_back(r);
      s = o.next;
      traj.states.push_back(s);
   }
   return traj;
}

Dataset generate_dataset(
   const TabularMDP& mdp,
   const TabularPolicy& pi_b,
   std::size_t n_trajectories,
   std::uint64_t seed)
{
   if(n_trajectories == 0)
      fail(ErrorKind::empty_dataset, "generate_dataset: N must be positive");
   check_policy_shape(pi_b, mdp.space());

   Dataset data;
   data.space = mdp.space();
   data.horizon = mdp.horizon();
   data.seed = seed;
   data.pi_b_known = true;
   data.pi_b = pi_b;
   data.trajectories.reserve(n_trajectories);
   for(std::size_t i = 0; i < n_trajectories; ++i) {
      auto rng = make_stream(seed, StreamTag::trajectory, i);
      data.trajectories.push_back(sample_trajectory(mdp, pi_b, rng));
   }
   return data;
}

TabularPolicy estimate_behavior_policy(const Dataset& data, double alpha)
{
   if(data.empty())
      fail(ErrorKind::empty_dataset, "estimate_behavior_policy: empty dataset");
   require(alpha >= 0.0, "smoothing alpha must be non-negative");
   const auto nS = data.space.n_states;
   const auto nA = data.space.n_actions;
   Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(nS, nA);
   for(const auto& traj : data.trajectories)
      for(std::size_t t = 0; t < traj.length(); ++t)
         if(! data.space.is_terminal(traj.states[t]))
            counts(traj.states[t], traj.actions[t]) += 1.0;

   Eigen::MatrixXd probs(nS, nA);
   for(std::size_t s = 0; s < nS; ++s) {
      const double total = counts.row(s).sum() + alpha * static_cast<double>(nA);
      if(total <= 0.0)
         probs.row(s).setConstant(1.0 / static_cast<double>(nA));
      else
         probs.row(s) = (counts.row(s).array() + alpha) / total;
   }
   return TabularPolicy(std::move(probs));
}

Dataset observe(
   const Dataset& data,
   const std::vector<StateIndex>& observation,
   const StateSpace& observed_space,
   const TabularPolicy& observed_pi_b)
{
   require(observation.size() == data.space.n_states, "observation map must cover every state");
   check_policy_shape(observed_pi_b, observed_space);
   Dataset out;
   out.space = observed_space;
   out.horizon = data.horizon;
   out.seed = data.seed;
   out.pi_b_known = data.pi_b_known;
   out.pi_b = observed_pi_b;
   out.trajectories.reserve(data.size());
   for(const auto& traj : data.trajectories) {
      Trajectory o = traj;
      for(auto& s : o.states) {
         s = observation[s];
         require(s < observed_space.n_states, "observation index out of range");
      }
      out.trajectories.push_back(std::move(o));
   }
   return out;
}

void write_trajectories_jsonl(std::ostream& out, const Dataset& data)
{
   for(const auto& traj : data.trajectories) {
      nlohmann::json line;
      line["states"] = traj.states;
      line["actions"] = traj.actions;
      line["rewards"] = traj.rewards;
      out << line.dump() << '\n';
   }
}

std::vector<Trajectory> read_trajectories_jsonl(std::istream& in)
{
   std::vector<Trajectory> out;
   std::string line;
   while(std::getline(in, line)) {
      if(line.empty())
         continue;
      const auto j = nlohmann::json::parse(line);
      Trajectory traj;
      j.at("states").get_to(traj.states);
      j.at("actions").get_to(traj.actions);
      j.at("rewards").get_to(traj.rewards);
      require(
         traj.states.size() == traj.actions.size() + 1 && traj.rewards.size() == traj.actions.size(),
         "malformed trajectory line");
      if(! out.empty())
         require(traj.length() == out.front().length(), "trajectories must share one length");
      out.push_back(std::move(traj));
   }
   return out;
}

void save_dataset(
   const std::filesystem::path& stem,
   const Dataset& data,
   const DatasetMetadata& meta)
{
   std::ofstream traj_out(stem.string() + ".jsonl");
   require(bool(traj_out), "cannot open " + stem.string() + ".jsonl");
   write_trajectories_jsonl(traj_out, data);

   nlohmann::json j;
   j["env"] = meta.env;
   j["T"] = meta.horizon;
   j["gamma"] = meta.gamma;
   j["seed"] = meta.seed;
   j["N"] = meta.n_trajectories;
   j["pi_b"] = meta.pi_b_spec;
   std::ofstream meta_out(stem.string() + ".meta.json");
   require(bool(meta_out), "cannot open " + stem.string() + ".meta.json");
   meta_out << j.dump(2) << '\n';
}

DatasetMetadata load_metadata(const std::filesystem::path& meta_file)
{
   std::ifstream in(meta_file);
   require(bool(in), "cannot open " + meta_file.string());
   const auto j = nlohmann::json::parse(in);
   DatasetMetadata m;
   j.at("env").get_to(m.env);
   j.at("T").get_to(m.horizon);
   j.at("gamma").get_to(m.gamma);
   j.at("seed").get_to(m.seed);
   j.at("N").get_to(m.n_trajectories);
   j.at("pi_b").get_to(m.pi_b_spec);
   return m;
}

}  // namespace ope
