#include "ope/dataset.hpp"
#include "ope/errors.hpp"
#include "ope/experiment.hpp"
#include "ope/report.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

void write_file(const std::filesystem::path& path, const std::string& text)
{
   std::ofstream out(path);
   if(! out)
      throw std::runtime_error("cannot write " + path.string());
   out << text;
}

int cmd_run(const std::filesystem::path& config, const std::filesystem::path& out_dir, std::size_t threads, bool dump_q)
{
   const auto cfg = ope::load_config(config);
   std::filesystem::create_directories(out_dir);
   ope::RunOptions opts;
   opts.threads = threads;
   if(dump_q)
      opts.dump_dir = out_dir;
   const auto report = ope::run_experiment(cfg, opts);
   const auto summary = ope::summarize(report.rows);

   std::ofstream rep(out_dir / "report.csv");
   ope::write_report_csv(rep, report.rows);
   std::ofstream sum(out_dir / "summary.csv");
   ope::write_summary_csv(sum, summary);
   write_file(out_dir / "report.md", ope::markdown_tables(summary));

   std::size_t failures = 0;
   for(const auto& r : report.rows)
      failures += ! ope::status_has_estimate(r.status);
   std::printf(
      "true value %.10g, policy mismatch %.6g, %zu rows (%zu failed) -> %s\n",
      report.true_value,
      report.mismatch,
      report.rows.size(),
      failures,
      out_dir.string().c_str());
   return 0;
}

int cmd_report(const std::filesystem::path& in_dir, const std::string& format)
{
   std::ifstream in(in_dir / "report.csv");
   if(! in)
      throw std::runtime_error("cannot open " + (in_dir / "report.csv").string());
   const auto summary = ope::summarize(ope::read_report_csv(in));
   if(format == "md")
      std::cout << ope::markdown_tables(summary);
   else
      ope::write_summary_csv(std::cout, summary);
   return 0;
}

int cmd_truth(const std::filesystem::path& config)
{
   const auto cfg = ope::load_config(config);
   const auto setup = ope::build_setup(cfg);
   std::printf("%.12g\n", ope::ground_truth(cfg, setup));
   return 0;
}

int cmd_generate(const std::filesystem::path& config, std::size_t n, std::uint64_t seed, const std::filesystem::path& stem)
{
   const auto cfg = ope::load_config(config);
   const auto setup = ope::build_setup(cfg);
   auto data = ope::generate_dataset(setup.mdp, setup.pi_b_sim, n, seed);
   if(setup.relabel)
      data = ope::observe(data, setup.observation, setup.space, setup.pi_b);
   ope::DatasetMetadata meta{
      std::string(ope::to_string(cfg.env)), cfg.horizon(), cfg.discount(), seed, n, cfg.pi_b.str()};
   if(stem.has_parent_path())
      std::filesystem::create_directories(stem.parent_path());
   ope::save_dataset(stem, data, meta);
   return 0;
}

}  // namespace

int main(int argc, char** argv)
{
   CLI::App app{"Tabular off-policy evaluation benchmark"};
   app.require_subcommand(1);

   std::filesystem::path config;
   std::filesystem::path out_dir;
   std::size_t threads = 1;
   bool dump_q = false;
   auto* run = app.add_subcommand("run", "Run an experiment grid");
   run->add_option("--config", config, "Experiment config file")->required()->check(CLI::ExistingFile);
   run->add_option("--out", out_dir, "Output directory")->required();
   run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
   run->add_flag("--dump-q", dump_q, "Write fitted Q / omega tables and MAGIC diagnostics as JSON");

   std::filesystem::path in_dir;
   std::string format = "csv";
   auto* report = app.add_subcommand("report", "Summarize a finished run");
   report->add_option("--in", in_dir, "Run directory holding report.csv")->required()->check(CLI::ExistingDirectory);
   report->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "md"}));

   auto* truth = app.add_subcommand("truth", "Print the true value of the evaluation policy");
   truth->add_option("--config", config, "Experiment config file")->required()->check(CLI::ExistingFile);

   std::size_t n = 0;
   std::uint64_t seed = 0;
   std::filesystem::path stem;
   auto* generate = app.add_subcommand("generate", "Write one behavior dataset as JSON lines");
   generate->add_option("--config", config, "Experiment config file")->required()->check(CLI::ExistingFile);
   generate->add_option("--n", n, "Trajectories")->required()->check(CLI::PositiveNumber);
   generate->add_option("--seed", seed, "Dataset seed");
   generate->add_option("--out", stem, "Output stem (writes <stem>.jsonl and <stem>.meta.json)")->required();

   auto* list = app.add_subcommand("list-estimators", "Print every estimator name");

   CLI11_PARSE(app, argc, argv);

   try {
      if(run->parsed())
         return cmd_run(config, out_dir, threads, dump_q);
      if(report->parsed())
         return cmd_report(in_dir, format);
      if(truth->parsed())
         return cmd_truth(config);
      if(generate->parsed())
         return cmd_generate(config, n, seed, stem);
      if(list->parsed()) {
         for(const auto& name : ope::estimator_names())
            std::cout << name << '\n';
         return 0;
      }
   } catch(const ope::OpeError& e) {
      std::fprintf(stderr, "error (%s): %s\n", std::string(ope::to_string(e.kind())).c_str(), e.what());
      return 2;
   } catch(const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 2;
   }
   return 1;
}
