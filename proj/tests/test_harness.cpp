#include "ope/config.hpp"
#include "ope/dataset.hpp"
#include "ope/errors.hpp"
#include "ope/experiment.hpp"
#include "ope/metrics.hpp"
#include "ope/oracles.hpp"
#include "ope/report.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

using namespace ope;

namespace {

ExperimentConfig parse(const std::string& text)
{
   std::istringstream in(text);
   return parse_config(in);
}

ExperimentConfig small_graph()
{
   return parse(
      "env = graph\n"
      "env.stochastic_env = true\n"
      "T = 4\n"
      "gamma = 0.9\n"
      "N = 8, 16\n"
      "seeds = 0, 1, 2\n"
      "pi_b = static:0.6\n"
      "pi_e = static:0.3\n"
      "magic.bootstrap_B = 20\n");
}

const ReportRow& find_row(const std::vector<ReportRow>& rows, std::size_t N, std::uint64_t seed, const std::string& name)
{
   auto it = std::find_if(rows.begin(), rows.end(), [&](const ReportRow& r) {
      return r.N == N && r.seed == seed && r.estimator == name;
   });
   if(it == rows.end())
      throw std::runtime_error("row not found: " + name);
   return *it;
}

}  // namespace

// -- metrics --------------------------------------------------------------------

TEST(Metrics, RelativeMseBruteForce)
{
   std::mt19937_64 rng(1);
   std::normal_distribution<double> z(3.0, 1.0);
   for(int k = 0; k < 20; ++k) {
      std::vector<double> est(10), truth(10);
      for(auto& v : est)
         v = z(rng);
      for(auto& v : truth)
         v = z(rng);
      double mean = 0.0;
      for(auto v : truth)
         mean += v / 10.0;
      double se = 0.0;
      for(std::size_t i = 0; i < 10; ++i)
         se += (est[i] - mean) * (est[i] - mean);
      EXPECT_NEAR(relative_mse(est, truth), se / 10.0 / (mean * mean), 1e-12);
   }
}

TEST(Metrics, RelativeMseExamples)
{
   EXPECT_EQ(relative_mse({2.0, 2.0}, {2.0, 2.0}), 0.0);
   EXPECT_DOUBLE_EQ(relative_mse({6.0, 6.0}, {3.0, 3.0}), 1.0);
   EXPECT_NEAR(relative_mse({4.0 * 1.01}, {4.0}), 1e-4, 1e-15);
}

TEST(Metrics, RelativeMseErrors)
{
   EXPECT_THROW(relative_mse({}, {}), OpeError);
   EXPECT_THROW(relative_mse({1.0}, {1.0, 2.0}), OpeError);
   EXPECT_THROW(relative_mse({1.0, 2.0}, {1.0, -1.0}), OpeError);
}

TEST(Metrics, NearTopFrequency)
{
   const double nan = std::numeric_limits<double>::quiet_NaN();
   const std::vector<std::vector<double>> table{
      {1.0, 1.05, 2.0},
      {3.0, 1.0, 1.1},
      {nan, 5.0, 4.6},
   };
   const auto f = near_top_frequency(table);
   EXPECT_NEAR(f[0], 1.0 / 3.0, 1e-12);
   EXPECT_NEAR(f[1], 3.0 / 3.0, 1e-12);
   EXPECT_NEAR(f[2], 2.0 / 3.0, 1e-12);
   EXPECT_THROW(near_top_frequency({}), OpeError);
   EXPECT_THROW(near_top_frequency({{1.0, 2.0}, {1.0}}), OpeError);
}

TEST(Metrics, PolicyMismatch)
{
   const auto pi_b = static_policy(3, 0.1);
   const auto pi_e = static_policy(3, 0.1 * std::pow(9.0, 0.1));
   const double m = policy_mismatch(pi_e, pi_b, 100);
   EXPECT_NEAR(m / std::pow(9.0, 10.0), 1.0, 1e-6);
   EXPECT_EQ(policy_mismatch(static_policy(3, 0.5), static_policy(3, 1.0), 4), std::numeric_limits<double>::infinity());
   EXPECT_DOUBLE_EQ(policy_mismatch(pi_b, pi_b, 50), 1.0);
}

// -- config ---------------------------------------------------------------------

TEST(Config, ParsesKeysAndPresets)
{
   const auto cfg = parse(
      "# gridworld run\n"
      "env = gridworld\n"
      "T = 12   # short\n"
      "N = 4,8\n"
      "seeds = 3\n"
      "pi_b = eps_greedy:0.5\n"
      "pi_e = uniform\n"
      "estimators = IS, FQE, IH\n"
      "hybrids = DR\n"
      "direct.lambda = 0.5\n"
      "magic.J = -1, 5, 11\n"
      "ground_truth = mc\n"
      "ground_truth.n = 50\n");
   EXPECT_EQ(cfg.env, EnvKind::gridworld);
   EXPECT_EQ(cfg.horizon(), 12u);
   EXPECT_DOUBLE_EQ(cfg.discount(), GridworldSpec{}.gamma);
   EXPECT_EQ(cfg.N, (std::vector<std::size_t>{4, 8}));
   EXPECT_EQ(cfg.seeds, (std::vector<std::uint64_t>{3}));
   EXPECT_EQ(cfg.pi_b.kind, PolicySpec::Kind::eps_greedy);
   EXPECT_DOUBLE_EQ(cfg.pi_b.param, 0.5);
   EXPECT_EQ(cfg.ips, (std::vector<IpsVariant>{IpsVariant::IS}));
   EXPECT_EQ(cfg.direct, (std::vector<DirectMethod>{DirectMethod::FQE, DirectMethod::IH}));
   EXPECT_EQ(cfg.hybrids, (std::vector<HybridMethod>{HybridMethod::DR}));
   EXPECT_DOUBLE_EQ(cfg.direct_cfg.lambda, 0.5);
   EXPECT_DOUBLE_EQ(cfg.direct_cfg.fqe_eps, 4e-4);
   EXPECT_EQ(cfg.direct_cfg.fqe_max_iter, 50u);
   EXPECT_EQ(cfg.magic_cfg.J, (std::vector<int>{-1, 5, 11}));
   EXPECT_EQ(cfg.ground_truth, GroundTruth::mc);
   EXPECT_EQ(cfg.ground_truth_n, 50u);
}

TEST(Config, EnvironmentPresets)
{
   EXPECT_DOUBLE_EQ(direct_preset(EnvKind::graph).backup_eps, 1e-3);
   EXPECT_DOUBLE_EQ(direct_preset(EnvKind::graph_mc).backup_eps, 2e-3);
   EXPECT_DOUBLE_EQ(direct_preset(EnvKind::gridworld).fqe_eps, 4e-4);
   EXPECT_EQ(direct_preset(EnvKind::gridworld).backup_max_iter, 50u);
}

TEST(Config, RejectsBadInput)
{
   for(const char* text : {
          "env = graph\nenv = graph\n",
          "env = graph\nbogus = 1\n",
          "env = moon\n",
          "env = graph\nT\n",
          "env = graph\npi_b = static:1.5\n",
          "env = gridworld\npi_b = static:0.5\n",
          "env = graph_pomdp\npi_e = eps_greedy:0.1\n",
          "env = graph\nN = 0\n",
          "env = graph\nseeds = 1,1\n",
          "env = graph\ngamma = 0\n",
          "env = graph\nT = 4\nmagic.J = 0, 1\n",
          "env = graph\nestimators = XYZ\n",
       }) {
      EXPECT_THROW(
         {
            auto cfg = parse(text);
            cfg.validate();
         },
         OpeError)
         << text;
   }
}

TEST(Config, ErrorsNameTheLine)
{
   try {
      parse("env = graph\n\nnope = 3\n");
      FAIL();
   } catch(const OpeError& e) {
      EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
   }
}

TEST(Config, PolicySpecRoundTrip)
{
   for(const char* s : {"uniform", "static:0.25", "eps_greedy:0.1"})
      EXPECT_EQ(PolicySpec::parse(s).str(), s);
}

TEST(Config, EstimatorCatalog)
{
   const auto names = estimator_names();
   EXPECT_EQ(names.size(), 5u + 8u + 3u * 7u);
   EXPECT_NE(std::find(names.begin(), names.end(), "MAGIC(MRDR)"), names.end());
   EXPECT_EQ(std::find(names.begin(), names.end(), "DR(IH)"), names.end());
}

// -- experiment runner ------------------------------------------------------------

TEST(Experiment, RowsAreCompleteAndOrdered)
{
   const auto cfg = small_graph();
   const auto report = run_experiment(cfg);
   const auto per_cell = estimator_names().size();
   ASSERT_EQ(report.rows.size(), 2 * 3 * per_cell);
   for(std::size_t k = 0; k < report.rows.size(); ++k) {
      const auto& r = report.rows[k];
      EXPECT_EQ(r.N, k < 3 * per_cell ? 8u : 16u);
      EXPECT_EQ(r.seed, (k / per_cell) % 3);
      EXPECT_EQ(r.estimator, estimator_names()[k % per_cell]);
      EXPECT_DOUBLE_EQ(r.true_value, report.true_value);
   }
   EXPECT_NEAR(report.mismatch, std::pow(0.7 / 0.4, 4), 1e-12);
}

TEST(Experiment, DeterministicAcrossThreadCounts)
{
   const auto cfg = small_graph();
   const auto a = run_experiment(cfg, {1, {}});
   const auto b = run_experiment(cfg, {4, {}});
   ASSERT_EQ(a.rows.size(), b.rows.size());
   for(std::size_t k = 0; k < a.rows.size(); ++k) {
      const auto& x = a.rows[k];
      const auto& y = b.rows[k];
      EXPECT_EQ(x.estimator, y.estimator);
      EXPECT_EQ(x.status, y.status);
      if(std::isnan(x.estimate))
         EXPECT_TRUE(std::isnan(y.estimate));
      else
         EXPECT_EQ(x.estimate, y.estimate) << x.estimator;
   }
}

TEST(Experiment, CellsDependOnlyOnTheirSeed)
{
   auto cfg = small_graph();
   const auto full = run_experiment(cfg);
   cfg.seeds = {2};
   cfg.N = {16};
   const auto single = run_experiment(cfg);
   for(const auto& r : single.rows) {
      const auto& f = find_row(full.rows, 16, 2, r.estimator);
      if(std::isnan(r.estimate))
         EXPECT_TRUE(std::isnan(f.estimate));
      else
         EXPECT_EQ(r.estimate, f.estimate) << r.estimator;
   }
}

TEST(Experiment, HybridsReuseTheirBaseModel)
{
   const auto cfg = small_graph();
   const auto setup = build_setup(cfg);
   const auto rows = run_cell(cfg, setup, 16, 1, 0.0);
   auto data = generate_dataset(setup.mdp, setup.pi_b_sim, 16, 1);
   auto q = fqe(data, setup.pi_e, cfg.discount(), cfg.direct_cfg).q;
   EXPECT_EQ(find_row(rows, 16, 1, "FQE").estimate, direct_value(data, q, setup.pi_e));
   EXPECT_NEAR(find_row(rows, 16, 1, "DR(FQE)").estimate, dr_estimate(data, q, setup.pi_e, setup.pi_b, cfg.discount()), 1e-12);
   EXPECT_NEAR(find_row(rows, 16, 1, "WDR(FQE)").estimate, wdr_estimate(data, q, setup.pi_e, setup.pi_b, cfg.discount()), 1e-12);
   auto mcfg = cfg.magic_cfg;
   mcfg.seed = 1;
   EXPECT_NEAR(find_row(rows, 16, 1, "MAGIC(FQE)").estimate, magic(data, q, setup.pi_e, setup.pi_b, cfg.discount(), mcfg).estimate, 1e-12);
}

TEST(Experiment, MissingBehaviorSupportIsReported)
{
   // pi_b never takes action 1, so logged ratios stay finite but MRDR needs
   // pi_b > 0 on every action.
   auto cfg = small_graph();
   cfg.pi_b = PolicySpec::parse("static:1.0");
   cfg.N = {8};
   cfg.seeds = {0};
   const auto report = run_experiment(cfg);
   for(const char* name : {"IS", "PDWIS", "FQE", "DR(FQE)"})
      EXPECT_EQ(find_row(report.rows, 8, 0, name).status, status_ok) << name;
   for(const char* name : {"MRDR", "DR(MRDR)", "MAGIC(MRDR)"}) {
      const auto& r = find_row(report.rows, 8, 0, name);
      EXPECT_EQ(r.status, "support_violation") << name;
      EXPECT_TRUE(std::isnan(r.estimate));
   }
   EXPECT_EQ(report.mismatch, std::numeric_limits<double>::infinity());
}

TEST(Experiment, NonConvergenceKeepsTheEstimate)
{
   auto cfg = small_graph();
   cfg.direct_cfg.fqe_max_iter = 1;
   cfg.direct_cfg.fqe_eps = 1e-300;
   cfg.N = {8};
   cfg.seeds = {0};
   const auto report = run_experiment(cfg);
   for(const char* name : {"FQE", "DR(FQE)", "WDR(FQE)"}) {
      const auto& r = find_row(report.rows, 8, 0, name);
      EXPECT_EQ(r.status, status_non_convergence) << name;
      EXPECT_TRUE(std::isfinite(r.estimate));
   }
}

TEST(Experiment, PartiallyObservedGraphRuns)
{
   auto cfg = parse(
      "env = graph_pomdp\nT = 6\nenv.H = 2\ngamma = 1.0\nN = 32\nseeds = 0, 1\n"
      "pi_b = static:0.5\npi_e = static:0.8\nmagic.bootstrap_B = 10\n");
   const auto setup = build_setup(cfg);
   EXPECT_TRUE(setup.relabel);
   EXPECT_LT(setup.space.n_states, setup.mdp.n_states());
   const auto report = run_experiment(cfg);
   EXPECT_DOUBLE_EQ(report.true_value, exact_policy_value(setup.mdp, setup.pi_e_sim));
   const auto& is = find_row(report.rows, 32, 0, "IS");
   EXPECT_EQ(is.status, status_ok);
   EXPECT_TRUE(std::isfinite(is.estimate));
}

TEST(Experiment, EstimatedBehaviorPolicy)
{
   auto cfg = small_graph();
   cfg.pi_b_known = false;
   cfg.N = {16};
   cfg.seeds = {4};
   const auto report = run_experiment(cfg);
   const auto& pdis = find_row(report.rows, 16, 4, "PDIS");
   EXPECT_EQ(pdis.status, status_ok);
   const auto setup = build_setup(cfg);
   auto data = generate_dataset(setup.mdp, setup.pi_b_sim, 16, 4);
   const auto pi_hat = estimate_behavior_policy(data, 1.0);
   EXPECT_NEAR(pdis.estimate, ips_estimate(IpsVariant::PDIS, data, setup.pi_e, pi_hat, cfg.discount()), 1e-12);
}

TEST(Experiment, DumpsModels)
{
   auto cfg = small_graph();
   cfg.N = {8};
   cfg.seeds = {0};
   const auto dir = std::filesystem::temp_directory_path() / "ope_dump_test";
   std::filesystem::remove_all(dir);
   run_experiment(cfg, {1, dir});
   EXPECT_TRUE(std::filesystem::exists(dir / "q" / "8_0_FQE.json"));
   EXPECT_TRUE(std::filesystem::exists(dir / "q" / "8_0_IH.json"));
   EXPECT_TRUE(std::filesystem::exists(dir / "magic" / "8_0_AM.json"));
   std::filesystem::remove_all(dir);
}

// -- reports --------------------------------------------------------------------

TEST(Report, CsvRoundTrip)
{
   const auto report = run_experiment(small_graph());
   std::stringstream buf;
   write_report_csv(buf, report.rows);
   const auto back = read_report_csv(buf);
   ASSERT_EQ(back.size(), report.rows.size());
   for(std::size_t k = 0; k < back.size(); ++k) {
      auto a = report.rows[k];
      auto b = back[k];
      if(std::isnan(a.estimate) && std::isnan(b.estimate))
         a.estimate = b.estimate = 0.0;
      EXPECT_EQ(a, b);
   }
}

TEST(Report, CsvRejectsBadInput)
{
   std::istringstream bad_header("a,b\n");
   EXPECT_THROW(read_report_csv(bad_header), OpeError);
   std::istringstream short_row("env,T,gamma,N,seed,estimator,class,estimate,true_value,status\ngraph,4\n");
   EXPECT_THROW(read_report_csv(short_row), OpeError);
}

TEST(Report, SummaryMatchesMetrics)
{
   const auto report = run_experiment(small_graph());
   const auto summary = summarize(report.rows);
   EXPECT_EQ(summary.size(), 2 * estimator_names().size());
   for(const auto& s : summary) {
      std::vector<double> est, truth;
      bool failed = false;
      for(const auto& r : report.rows)
         if(r.N == s.N && r.estimator == s.estimator) {
            failed = failed || ! status_has_estimate(r.status);
            est.push_back(r.estimate);
            truth.push_back(r.true_value);
         }
      if(failed)
         EXPECT_TRUE(std::isnan(s.rel_mse));
      else
         EXPECT_NEAR(s.rel_mse, relative_mse(est, truth), 1e-12);
      EXPECT_GE(s.near_top, 0.0);
      EXPECT_LE(s.near_top, 1.0);
   }
}

TEST(Report, SummaryFailedSeedIsNan)
{
   std::vector<ReportRow> rows{
      {"graph", 4, 1.0, 8, 0, "IS", "IPS", 1.0, 2.0, "ok"},
      {"graph", 4, 1.0, 8, 1, "IS", "IPS", std::nan(""), 2.0, "degenerate_weights"},
      {"graph", 4, 1.0, 8, 0, "WIS", "IPS", 1.5, 2.0, "ok"},
      {"graph", 4, 1.0, 8, 1, "WIS", "IPS", 2.5, 2.0, "ok"},
   };
   const auto s = summarize(rows);
   ASSERT_EQ(s.size(), 2u);
   EXPECT_TRUE(std::isnan(s[0].rel_mse));
   EXPECT_DOUBLE_EQ(s[1].rel_mse, 0.0625);
   EXPECT_EQ(s[0].near_top, 0.0);
   EXPECT_EQ(s[1].near_top, 1.0);
}

TEST(Report, FormatSci)
{
   EXPECT_EQ(format_sci(3.2e-5), "3.2E-5");
   EXPECT_EQ(format_sci(1.0), "1.0E0");
   EXPECT_EQ(format_sci(1.7e-2), "1.7E-2");
   EXPECT_EQ(format_sci(2.5e12), "2.5E12");
   EXPECT_EQ(format_sci(std::nan("")), "fail");
}

TEST(Report, MarkdownLayout)
{
   const auto md = markdown_tables(summarize(run_experiment(small_graph()).rows));
   EXPECT_NE(md.find("### graph, T=4, N=8"), std::string::npos);
   EXPECT_NE(md.find("| DM | Direct | DR | WDR | MAGIC |"), std::string::npos);
   EXPECT_NE(md.find("| IPS | Standard | Per-Decision |"), std::string::npos);
   EXPECT_NE(md.find("| FQE | "), std::string::npos);
   EXPECT_NE(md.find("| IH | "), std::string::npos);
   EXPECT_NE(md.find("Near-top Frequency, graph, T=4"), std::string::npos);
}
