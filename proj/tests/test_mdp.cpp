#include "ope/dataset.hpp"
#include "ope/environments.hpp"
#include "ope/errors.hpp"
#include "ope/importance.hpp"
#include "ope/oracles.hpp"
#include "ope/rng.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

using namespace ope;
using ope::testing::graph;
using ope::testing::random_policy;

namespace {

ErrorKind kind_of(const std::function<void()>& f)
{
   try {
      f();
   } catch(const OpeError& e) {
      return e.kind();
   }
   ADD_FAILURE() << "expected an OpeError";
   return ErrorKind::invalid_argument;
}

TabularMDP::Tables two_state_tables()
{
   TabularMDP::Tables t;
   t.space = {2, 1, 1, {false, true}};
   t.outcomes = {{{1, 1.0, 1.0}}, {{1, 1.0, 0.0}}};
   t.initial = {1.0, 0.0};
   t.horizon = 2;
   t.gamma = 1.0;
   return t;
}

}  // namespace

TEST(TabularMDP, AcceptsValidTables)
{
   const TabularMDP mdp(two_state_tables());
   EXPECT_EQ(mdp.n_states(), 2u);
   EXPECT_DOUBLE_EQ(mdp.transition(0, 0, 1), 1.0);
   EXPECT_DOUBLE_EQ(mdp.reward_mean(0, 0, 1), 1.0);
   EXPECT_DOUBLE_EQ(mdp.transition(0, 0, 0), 0.0);
}

TEST(TabularMDP, RejectsBrokenInvariants)
{
   auto bad_row = two_state_tables();
   bad_row.outcomes[0][0].prob = 0.9;
   EXPECT_EQ(kind_of([&] { TabularMDP{bad_row}; }), ErrorKind::invalid_argument);

   auto bad_initial = two_state_tables();
   bad_initial.initial = {0.5, 0.4};
   EXPECT_THROW(TabularMDP{bad_initial}, OpeError);

   auto bad_absorbing = two_state_tables();
   bad_absorbing.outcomes[1][0].reward = 1.0;
   EXPECT_THROW(TabularMDP{bad_absorbing}, OpeError);

   auto bad_gamma = two_state_tables();
   bad_gamma.gamma = 0.0;
   EXPECT_THROW(TabularMDP{bad_gamma}, OpeError);

   auto bad_horizon = two_state_tables();
   bad_horizon.horizon = 0;
   EXPECT_THROW(TabularMDP{bad_horizon}, OpeError);
}

TEST(TabularPolicy, ValidatesRows)
{
   Eigen::MatrixXd p(1, 2);
   p << 0.7, 0.2;
   EXPECT_THROW(TabularPolicy{p}, OpeError);
   p << 1.2, -0.2;
   EXPECT_THROW(TabularPolicy{p}, OpeError);
   p << 0.3, 0.7;
   EXPECT_NO_THROW(TabularPolicy{p});
}

// -- generate_dataset ---------------------------------------------------------

TEST(GenerateDataset, DeterministicGraphSingleTrajectory)
{
   const auto mdp = graph(4);
   const auto data = generate_dataset(mdp, static_policy(mdp.n_states(), 1.0), 1, 123);
   ASSERT_EQ(data.size(), 1u);
   const auto& traj = data.trajectories[0];
   EXPECT_EQ(traj.states, (std::vector<StateIndex>{0, 1, 3, 5, 7}));
   EXPECT_EQ(traj.rewards, (std::vector<double>{1, 1, 1, 1}));
}

TEST(GenerateDataset, SameSeedSameBytes)
{
   const auto mdp = build_graph({6, true, true, false, 0.98});
   const auto pi = static_policy(mdp.n_states(), 0.3);
   const auto a = generate_dataset(mdp, pi, 50, 9);
   const auto b = generate_dataset(mdp, pi, 50, 9);
   std::ostringstream sa;
   std::ostringstream sb;
   write_trajectories_jsonl(sa, a);
   write_trajectories_jsonl(sb, b);
   EXPECT_EQ(sa.str(), sb.str());
   const auto c = generate_dataset(mdp, pi, 50, 10);
   EXPECT_NE(a.trajectories, c.trajectories);
}

TEST(GenerateDataset, ActionFrequencyWithinBinomialBand)
{
   const auto mdp = graph(2);
   const auto data = generate_dataset(mdp, static_policy(mdp.n_states(), 0.5), 10000, 7);
   double zeros = 0.0;
   for(const auto& traj : data.trajectories)
      zeros += traj.actions[0] == 0;
   EXPECT_NEAR(zeros / 10000.0, 0.5, 0.02);
}

TEST(GenerateDataset, EmptyRequestFails)
{
   const auto mdp = graph(2);
   EXPECT_EQ(kind_of([&] { generate_dataset(mdp, static_policy(mdp.n_states(), 0.5), 0, 1); }), ErrorKind::empty_dataset);
}

TEST(GenerateDataset, PrefixStableAcrossSizes)
{
   const auto mdp = build_graph_mc({});
   const auto pi = static_policy(mdp.n_states(), 0.4);
   const auto small = generate_dataset(mdp, pi, 5, 3);
   const auto large = generate_dataset(mdp, pi, 20, 3);
   for(std::size_t i = 0; i < small.size(); ++i)
      EXPECT_EQ(small.trajectories[i], large.trajectories[i]);
}

TEST(GenerateDataset, PaddingAfterTerminal)
{
   std::mt19937_64 rng(5);
   std::vector<TabularMDP> envs{
      build_graph_mc({60, 0.99}),
      build_gridworld({}),
      build_graph({5, true, true, true, 0.9}),
   };
   for(const auto& mdp : envs) {
      const auto pi = random_policy(mdp.n_states(), mdp.n_actions(), rng);
      const auto data = generate_dataset(mdp, pi, 200, 11);
      for(const auto& traj : data.trajectories) {
         ASSERT_EQ(traj.states.size(), mdp.horizon() + 1);
         ASSERT_EQ(traj.rewards.size(), mdp.horizon());
         bool done = false;
         for(std::size_t t = 0; t < traj.length(); ++t) {
            if(done) {
               EXPECT_EQ(traj.states[t], mdp.absorbing_state());
               EXPECT_EQ(traj.rewards[t], 0.0);
            }
            done = done || mdp.is_terminal(traj.states[t]);
            if(mdp.is_terminal(traj.states[t])) {
               EXPECT_EQ(traj.actions[t], 0u);
               EXPECT_EQ(traj.rewards[t], 0.0);
               EXPECT_EQ(traj.states[t + 1], mdp.absorbing_state());
            }
         }
      }
   }
}

// -- cumulative_rho -----------------------------------------------------------

TEST(CumulativeRho, OnPolicyIsOne)
{
   const auto mdp = build_graph({5, true, false, false, 0.9});
   const auto pi = static_policy(mdp.n_states(), 0.3);
   const auto data = generate_dataset(mdp, pi, 40, 2);
   const auto rho = cumulative_rho(data, pi, pi);
   EXPECT_TRUE((rho.cumulatives().array() == 1.0).all());
   EXPECT_TRUE((rho.steps().array() == 1.0).all());
}

TEST(CumulativeRho, HandProducts)
{
   const auto mdp = graph(2);
   const auto pi_b = static_policy(mdp.n_states(), 0.5);
   const auto pi_e = static_policy(mdp.n_states(), 0.8);
   const auto data = ope::testing::make_dataset(mdp, pi_b, {Trajectory{{0, 1, 3}, {0, 0}, {1, 1}}});
   const auto rho = cumulative_rho(data, pi_e, pi_b);
   EXPECT_NEAR(rho.cumulative(0, 0), 1.6, 1e-15);
   EXPECT_NEAR(rho.cumulative(0, 1), 2.56, 1e-15);
   EXPECT_EQ(rho.cumulative(0, -1), 1.0);
   EXPECT_EQ(rho.range(0, 1, 0), 1.0);
   EXPECT_NEAR(rho.range(0, 1, 1), 1.6, 1e-15);
}

TEST(CumulativeRho, RecursionHoldsExactly)
{
   std::mt19937_64 rng(17);
   const auto mdp = build_gridworld({});
   const auto pi_b = random_policy(mdp.n_states(), 4, rng);
   const auto pi_e = random_policy(mdp.n_states(), 4, rng);
   const auto data = generate_dataset(mdp, pi_b, 30, 4);
   const auto rho = cumulative_rho(data, pi_e, pi_b);
   for(std::size_t i = 0; i < data.size(); ++i)
      for(std::size_t t = 0; t < data.horizon; ++t) {
         const auto ti = static_cast<std::ptrdiff_t>(t);
         EXPECT_EQ(rho.cumulative(i, ti), rho.cumulative(i, ti - 1) * rho.step(i, t));
         EXPECT_GE(rho.step(i, t), 0.0);
      }
}

TEST(CumulativeRho, SupportViolationNamesTheStep)
{
   const auto mdp = graph(2);
   const auto pi_b = static_policy(mdp.n_states(), 1.0);
   const auto pi_e = static_policy(mdp.n_states(), 0.5);
   const auto data = ope::testing::make_dataset(mdp, pi_b, {Trajectory{{0, 1, 4}, {0, 1}, {1, -1}}});
   try {
      cumulative_rho(data, pi_e, pi_b);
      FAIL() << "expected support violation";
   } catch(const OpeError& e) {
      EXPECT_EQ(e.kind(), ErrorKind::support_violation);
      EXPECT_NE(std::string(e.what()).find("t=1"), std::string::npos);
   }
}

// -- oracles ------------------------------------------------------------------

TEST(ExactPolicyValue, DeterministicGraphReturn)
{
   const auto mdp = graph(4);
   EXPECT_DOUBLE_EQ(exact_policy_value(mdp, static_policy(mdp.n_states(), 1.0)), 4.0);
}

TEST(ExactPolicyValue, TwoStepClosedForm)
{
   const auto mdp = graph(2);
   for(double p : {0.0, 0.1, 0.37, 0.5, 0.9, 1.0})
      EXPECT_NEAR(exact_policy_value(mdp, static_policy(mdp.n_states(), p)), 2.0 * (2.0 * p - 1.0), 1e-14);
}

TEST(MonteCarloValue, DeterministicMatchesExactly)
{
   const auto mdp = graph(4, false, 0.9);
   const auto pi = static_policy(mdp.n_states(), 1.0);
   const auto mc = monte_carlo_value(mdp, pi, 17, 3);
   EXPECT_DOUBLE_EQ(mc.value, exact_policy_value(mdp, pi));
   EXPECT_EQ(mc.std_error, 0.0);
}

TEST(MonteCarloValue, SingleRolloutIsItsReturn)
{
   const auto mdp = build_graph({4, true, false, false, 0.9});
   const auto pi = static_policy(mdp.n_states(), 0.3);
   auto rng = make_stream(21, StreamTag::rollout, 0);
   const auto traj = sample_trajectory(mdp, pi, rng);
   EXPECT_DOUBLE_EQ(monte_carlo_value(mdp, pi, 1, 21).value, discounted_return(traj, 0.9));
}

TEST(MonteCarloValue, ZeroRolloutsFail)
{
   const auto mdp = graph(2);
   EXPECT_THROW(monte_carlo_value(mdp, static_policy(mdp.n_states(), 0.5), 0, 1), OpeError);
}

TEST(MonteCarloValue, AgreesWithDpOnStochasticEnvs)
{
   std::mt19937_64 rng(8);
   std::vector<TabularMDP> envs{
      build_graph({2, true, false, false, 1.0}),
      build_graph({6, true, true, false, 0.95}),
      build_graph({6, true, true, true, 0.95}),
      build_graph_mc({60, 0.99}),
      build_gridworld({}),
   };
   for(const auto& mdp : envs) {
      const auto pi = random_policy(mdp.n_states(), mdp.n_actions(), rng);
      const auto mc = monte_carlo_value(mdp, pi, 100000, 13);
      EXPECT_LE(std::abs(mc.value - exact_policy_value(mdp, pi)), 3.0 * mc.std_error + 1e-12);
   }
}

TEST(EstimateBehaviorPolicy, LaplaceCounts)
{
   const auto mdp = graph(2);
   std::vector<Trajectory> trajs(10, Trajectory{{0, 1, 3}, {0, 0}, {1, 1}});
   const auto data = ope::testing::make_dataset(mdp, static_policy(mdp.n_states(), 1.0), trajs);
   const auto pi = estimate_behavior_policy(data, 1.0);
   EXPECT_NEAR(pi(0, 0), 11.0 / 12.0, 1e-15);
   EXPECT_NEAR(pi(1, 0), 11.0 / 12.0, 1e-15);
   EXPECT_DOUBLE_EQ(pi(2, 0), 0.5);
   EXPECT_DOUBLE_EQ(pi(2, 1), 0.5);
}

TEST(EstimateBehaviorPolicy, UnsmoothedRecoversDeterministicPolicy)
{
   const auto mdp = build_graph({5, true, false, false, 1.0});
   const auto pi_b = static_policy(mdp.n_states(), 1.0);
   const auto data = generate_dataset(mdp, pi_b, 100, 3);
   const auto est = estimate_behavior_policy(data, 0.0);
   for(const auto& traj : data.trajectories)
      for(std::size_t t = 0; t < traj.length(); ++t)
         if(! mdp.is_terminal(traj.states[t]))
            EXPECT_EQ(est(traj.states[t], 0), 1.0);
}

TEST(EnumerateTrajectories, OneStepTwoOutcomes)
{
   const auto mdp = graph(1);
   const auto all = enumerate_trajectories(mdp, static_policy(mdp.n_states(), 0.5));
   ASSERT_EQ(all.size(), 2u);
   for(const auto& wt : all)
      EXPECT_DOUBLE_EQ(wt.probability, 0.5);
}

TEST(EnumerateTrajectories, TwoStepProductsAndTotal)
{
   const auto mdp = graph(2);
   const auto all = enumerate_trajectories(mdp, static_policy(mdp.n_states(), 0.3));
   ASSERT_EQ(all.size(), 4u);
   double total = 0.0;
   for(const auto& wt : all) {
      double expect = 1.0;
      for(auto a : wt.trajectory.actions)
         expect *= a == 0 ? 0.3 : 0.7;
      EXPECT_NEAR(wt.probability, expect, 1e-15);
      total += wt.probability;
   }
   EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(EnumerateTrajectories, ExpectedReturnMatchesDp)
{
   std::mt19937_64 rng(31);
   std::vector<TabularMDP> envs{
      graph(3, true, 0.9),
      graph(4, false, 0.98, true),
      build_graph_mc({12, 0.99}),
   };
   for(const auto& mdp : envs) {
      const auto pi = random_policy(mdp.n_states(), mdp.n_actions(), rng);
      double total = 0.0;
      double mass = 0.0;
      for(const auto& wt : enumerate_trajectories(mdp, pi)) {
         total += wt.probability * discounted_return(wt.trajectory, mdp.gamma());
         mass += wt.probability;
      }
      EXPECT_NEAR(mass, 1.0, 1e-10);
      EXPECT_NEAR(total, exact_policy_value(mdp, pi), 1e-10);
   }
}

TEST(EnumerateTrajectories, LimitsAndNoise)
{
   const auto mdp = graph(6, true);
   EXPECT_EQ(
      kind_of([&] { enumerate_trajectories(mdp, static_policy(mdp.n_states(), 0.5), 100); }),
      ErrorKind::enumeration_limit);
   const auto noisy = build_graph({2, false, true, false, 1.0});
   EXPECT_THROW(enumerate_trajectories(noisy, static_policy(noisy.n_states(), 0.5)), OpeError);
}

// -- serialization --------------------------------------------------------------

TEST(DatasetIo, JsonLinesRoundTrip)
{
   const auto mdp = build_graph({4, true, true, false, 0.9});
   const auto data = generate_dataset(mdp, static_policy(mdp.n_states(), 0.4), 25, 6);
   std::stringstream buf;
   write_trajectories_jsonl(buf, data);
   EXPECT_EQ(read_trajectories_jsonl(buf), data.trajectories);
}

TEST(DatasetIo, SidecarMetadata)
{
   const auto dir = std::filesystem::temp_directory_path() / "ope_dataset_io";
   std::filesystem::create_directories(dir);
   const auto mdp = graph(3);
   const auto data = generate_dataset(mdp, static_policy(mdp.n_states(), 0.4), 4, 2);
   save_dataset(dir / "d", data, {"graph", 3, 1.0, 2, 4, "static:0.4"});
   const auto meta = load_metadata(dir / "d.meta.json");
   EXPECT_EQ(meta.env, "graph");
   EXPECT_EQ(meta.horizon, 3u);
   EXPECT_EQ(meta.n_trajectories, 4u);
   EXPECT_EQ(meta.pi_b_spec, "static:0.4");
   std::ifstream in(dir / "d.jsonl");
   EXPECT_EQ(read_trajectories_jsonl(in), data.trajectories);
}

TEST(DiscountedReturn, GeometricWeights)
{
   const Trajectory traj{{0, 1, 3, 5}, {0, 0, 0}, {1.0, 2.0, 4.0}};
   EXPECT_DOUBLE_EQ(discounted_return(traj, 0.5), 1.0 + 1.0 + 1.0);
}
