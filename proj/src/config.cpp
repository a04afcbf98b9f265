#include "ope/config.hpp"

#include "ope/environments.hpp"
#include "ope/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <set>
#include <sstream>

namespace ope {

std::string_view to_string(EnvKind kind) noexcept
{
   switch(kind) {
      case EnvKind::graph: return "graph";
      case EnvKind::graph_pomdp: return "graph_pomdp";
      case EnvKind::graph_mc: return "graph_mc";
      case EnvKind::gridworld: return "gridworld";
   }
   return "?";
}

std::string_view to_string(EstimatorClass c) noexcept
{
   switch(c) {
      case EstimatorClass::ips: return "IPS";
      case EstimatorClass::direct: return "DM";
      case EstimatorClass::hybrid: return "HM";
   }
   return "?";
}

std::string_view to_string(DirectMethod m) noexcept
{
   switch(m) {
      case DirectMethod::AM: return "AM";
      case DirectMethod::FQE: return "FQE";
      case DirectMethod::RETRACE: return "RETRACE";
      case DirectMethod::TREE: return "TREE";
      case DirectMethod::QPI: return "QPI";
      case DirectMethod::QREG: return "QREG";
      case DirectMethod::MRDR: return "MRDR";
      case DirectMethod::IH: return "IH";
   }
   return "?";
}

std::string_view to_string(HybridMethod m) noexcept
{
   switch(m) {
      case HybridMethod::DR: return "DR";
      case HybridMethod::WDR: return "WDR";
      case HybridMethod::MAGIC: return "MAGIC";
   }
   return "?";
}

bool produces_q(DirectMethod m) noexcept
{
   return m != DirectMethod::IH;
}

std::string hybrid_label(HybridMethod h, DirectMethod base)
{
   return std::string(to_string(h)) + "(" + std::string(to_string(base)) + ")";
}

namespace {

std::string trim(std::string_view s)
{
   const auto first = s.find_first_not_of(" \t\r");
   if(first == std::string_view::npos)
      return {};
   const auto last = s.find_last_not_of(" \t\r");
   return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& text)
{
   std::vector<std::string> out;
   std::stringstream ss(text);
   std::string item;
   while(std::getline(ss, item, ',')) {
      item = trim(item);
      if(! item.empty())
         out.push_back(item);
   }
   return out;
}

double parse_double(const std::string& text)
{
   double v = 0.0;
   const auto* end = text.data() + text.size();
   auto [ptr, ec] = std::from_chars(text.data(), end, v);
   require(ec == std::errc() && ptr == end, "not a number: '" + text + "'");
   return v;
}

template < typename Int >
Int parse_int(const std::string& text)
{
   Int v = 0;
   const auto* end = text.data() + text.size();
   auto [ptr, ec] = std::from_chars(text.data(), end, v);
   require(ec == std::errc() && ptr == end, "not an integer: '" + text + "'");
   return v;
}

bool parse_bool(const std::string& text)
{
   if(text == "true" || text == "1" || text == "yes")
      return true;
   if(text == "false" || text == "0" || text == "no")
      return false;
   fail(ErrorKind::invalid_argument, "not a boolean: '" + text + "'");
}

EnvKind parse_env(const std::string& text)
{
   for(auto k : {EnvKind::graph, EnvKind::graph_pomdp, EnvKind::graph_mc, EnvKind::gridworld})
      if(to_string(k) == text)
         return k;
   fail(ErrorKind::invalid_argument, "unknown environment '" + text + "'");
}

}  // namespace

PolicySpec PolicySpec::parse(const std::string& text)
{
   const auto t = trim(text);
   if(t == "uniform")
      return {Kind::uniform, 0.0};
   const auto colon = t.find(':');
   require(colon != std::string::npos, "policy spec must be static:<p>, eps_greedy:<eps> or uniform");
   const auto kind = t.substr(0, colon);
   const double p = parse_double(trim(t.substr(colon + 1)));
   require(p >= 0.0 && p <= 1.0, "policy parameter must lie in [0, 1]");
   if(kind == "static")
      return {Kind::static_p, p};
   if(kind == "eps_greedy")
      return {Kind::eps_greedy, p};
   fail(ErrorKind::invalid_argument, "unknown policy kind '" + kind + "'");
}

std::string PolicySpec::str() const
{
   std::ostringstream os;
   switch(kind) {
      case Kind::uniform: return "uniform";
      case Kind::static_p: os << "static:" << param; break;
      case Kind::eps_greedy: os << "eps_greedy:" << param; break;
   }
   return os.str();
}

std::size_t ExperimentConfig::horizon() const
{
   if(T != 0)
      return T;
   switch(env) {
      case EnvKind::graph:
      case EnvKind::graph_pomdp: return GraphSpec{}.T;
      case EnvKind::graph_mc: return GraphMCSpec{}.T;
      case EnvKind::gridworld: return GridworldSpec{}.T;
   }
   return 1;
}

double ExperimentConfig::discount() const
{
   if(gamma)
      return *gamma;
   switch(env) {
      case EnvKind::graph:
      case EnvKind::graph_pomdp: return GraphSpec{}.gamma;
      case EnvKind::graph_mc: return GraphMCSpec{}.gamma;
      case EnvKind::gridworld: return GridworldSpec{}.gamma;
   }
   return 1.0;
}

void ExperimentConfig::validate() const
{
   require(! N.empty(), "N list is empty");
   require(std::none_of(N.begin(), N.end(), [](auto n) { return n == 0; }), "N values must be positive");
   require(! seeds.empty(), "seed list is empty");
   require(std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() == seeds.size(), "seeds must be distinct");
   require(! ips.empty() || ! direct.empty(), "no estimators configured");
   const double g = discount();
   require(g > 0.0 && g <= 1.0, "gamma must lie in (0, 1]");
   require(behavior_alpha >= 0.0, "behavior.alpha must be non-negative");
   require(ground_truth_n >= 1, "ground_truth.n must be positive");
   const bool binary = env != EnvKind::gridworld;
   require(
      binary || (pi_b.kind != PolicySpec::Kind::static_p && pi_e.kind != PolicySpec::Kind::static_p),
      "static policies need a two-action environment");
   const bool observed = env == EnvKind::graph_pomdp && ! expose_parity;
   require(
      ! observed
         || (pi_b.kind != PolicySpec::Kind::eps_greedy && pi_e.kind != PolicySpec::Kind::eps_greedy),
      "eps_greedy policies are not defined on graph_pomdp observations");
   if(env == EnvKind::graph_pomdp)
      require(pomdp_H >= 1 && pomdp_H <= horizon(), "env.H must satisfy 1 <= H <= T");
   direct_cfg.validate();
   magic_cfg.validate(horizon());
}

DirectConfig direct_preset(EnvKind env)
{
   DirectConfig cfg;
   switch(env) {
      case EnvKind::graph:
      case EnvKind::graph_pomdp:
         cfg.fqe_eps = 1e-5;
         cfg.backup_eps = 1e-3;
         break;
      case EnvKind::graph_mc:
         cfg.fqe_eps = 1e-5;
         cfg.backup_eps = 2e-3;
         break;
      case EnvKind::gridworld:
         cfg.fqe_eps = 4e-4;
         cfg.fqe_max_iter = 50;
         cfg.backup_eps = 2e-3;
         cfg.backup_max_iter = 50;
         break;
   }
   return cfg;
}

ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir)
{
   std::map<std::string, std::pair<std::string, std::size_t>> entries;
   std::string line;
   std::size_t lineno = 0;
   while(std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if(hash != std::string::npos)
         line.erase(hash);
      line = trim(line);
      if(line.empty())
         continue;
      const auto eq = line.find('=');
      require(eq != std::string::npos, "config line " + std::to_string(lineno) + ": expected key = value");
      auto key = trim(line.substr(0, eq));
      auto value = trim(line.substr(eq + 1));
      require(! key.empty(), "config line " + std::to_string(lineno) + ": empty key");
      require(
         entries.emplace(key, std::make_pair(value, lineno)).second,
         "config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
   }

   ExperimentConfig cfg;
   if(auto it = entries.find("env"); it != entries.end())
      cfg.env = parse_env(it->second.first);
   cfg.direct_cfg = direct_preset(cfg.env);

   using Setter = std::function<void(const std::string&)>;
   auto& d = cfg.direct_cfg;
   auto& m = cfg.magic_cfg;
   const std::map<std::string, Setter> setters{
      {"env", [](const std::string&) {}},
      {"env.stochastic_env", [&](const std::string& v) { cfg.stochastic_env = parse_bool(v); }},
      {"env.stochastic_rewards", [&](const std::string& v) { cfg.stochastic_rewards = parse_bool(v); }},
      {"env.sparse_rewards", [&](const std::string& v) { cfg.sparse_rewards = parse_bool(v); }},
      {"env.H", [&](const std::string& v) { cfg.pomdp_H = parse_int<std::size_t>(v); }},
      {"env.expose_parity", [&](const std::string& v) { cfg.expose_parity = parse_bool(v); }},
      {"env.layout",
       [&](const std::string& v) {
          std::filesystem::path p(v);
          cfg.layout = p.is_absolute() ? p : base_dir / p;
       }},
      {"T",
       [&](const std::string& v) {
          cfg.T = parse_int<std::size_t>(v);
          require(cfg.T >= 1, "T must be positive");
       }},
      {"gamma", [&](const std::string& v) { cfg.gamma = parse_double(v); }},
      {"N",
       [&](const std::string& v) {
          cfg.N.clear();
          for(const auto& s : split_list(v))
             cfg.N.push_back(parse_int<std::size_t>(s));
       }},
      {"seeds",
       [&](const std::string& v) {
          cfg.seeds.clear();
          for(const auto& s : split_list(v))
             cfg.seeds.push_back(parse_int<std::uint64_t>(s));
       }},
      {"pi_b", [&](const std::string& v) { cfg.pi_b = PolicySpec::parse(v); }},
      {"pi_e", [&](const std::string& v) { cfg.pi_e = PolicySpec::parse(v); }},
      {"pi_b_known", [&](const std::string& v) { cfg.pi_b_known = parse_bool(v); }},
      {"behavior.alpha", [&](const std::string& v) { cfg.behavior_alpha = parse_double(v); }},
      {"estimators",
       [&](const std::string& v) {
          cfg.ips.clear();
          cfg.direct.clear();
          if(v == "all") {
             cfg.ips.assign(all_ips_variants.begin(), all_ips_variants.end());
             cfg.direct.assign(all_direct_methods.begin(), all_direct_methods.end());
             return;
          }
          for(const auto& name : split_list(v)) {
             if(auto ips = parse_ips_variant(name)) {
                cfg.ips.push_back(*ips);
                continue;
             }
             auto it = std::find_if(all_direct_methods.begin(), all_direct_methods.end(), [&](auto dm) {
                return to_string(dm) == name;
             });
             require(it != all_direct_methods.end(), "unknown estimator '" + name + "'");
             cfg.direct.push_back(*it);
          }
       }},
      {"hybrids",
       [&](const std::string& v) {
          cfg.hybrids.clear();
          if(v == "none")
             return;
          if(v == "all") {
             cfg.hybrids.assign(all_hybrid_methods.begin(), all_hybrid_methods.end());
             return;
          }
          for(const auto& name : split_list(v)) {
             auto it = std::find_if(all_hybrid_methods.begin(), all_hybrid_methods.end(), [&](auto h) {
                return to_string(h) == name;
             });
             require(it != all_hybrid_methods.end(), "unknown hybrid '" + name + "'");
             cfg.hybrids.push_back(*it);
          }
       }},
      {"direct.fqe_eps", [&](const std::string& v) { d.fqe_eps = parse_double(v); }},
      {"direct.fqe_max_iter", [&](const std::string& v) { d.fqe_max_iter = parse_int<std::size_t>(v); }},
      {"direct.backup_eps", [&](const std::string& v) { d.backup_eps = parse_double(v); }},
      {"direct.backup_max_iter", [&](const std::string& v) { d.backup_max_iter = parse_int<std::size_t>(v); }},
      {"direct.lambda", [&](const std::string& v) { d.lambda = parse_double(v); }},
      {"direct.reg_omega", [&](const std::string& v) { d.reg_omega = parse_double(v); }},
      {"direct.ih_reg", [&](const std::string& v) { d.ih_reg = parse_double(v); }},
      {"direct.am_eval",
       [&](const std::string& v) {
          require(v == "dp" || v == "rollout", "direct.am_eval must be dp or rollout");
          d.am_eval = v == "dp" ? AmEvaluation::dp : AmEvaluation::rollout;
       }},
      {"direct.am_rollouts", [&](const std::string& v) { d.am_rollouts = parse_int<std::size_t>(v); }},
      {"direct.mrdr_weighting",
       [&](const std::string& v) {
          require(v == "trajectory" || v == "per_decision", "direct.mrdr_weighting must be trajectory or per_decision");
          d.mrdr_weighting = v == "trajectory" ? MrdrWeighting::trajectory : MrdrWeighting::per_decision;
       }},
      {"magic.J",
       [&](const std::string& v) {
          m.J.clear();
          for(const auto& s : split_list(v))
             m.J.push_back(parse_int<int>(s));
       }},
      {"magic.bootstrap_B", [&](const std::string& v) { m.bootstrap_B = parse_int<std::size_t>(v); }},
      {"magic.ci_level", [&](const std::string& v) { m.ci_level = parse_double(v); }},
      {"magic.qp_iters", [&](const std::string& v) { m.qp_iters = parse_int<std::size_t>(v); }},
      {"magic.qp_tol", [&](const std::string& v) { m.qp_tol = parse_double(v); }},
      {"magic.psd_eps", [&](const std::string& v) { m.psd_eps = parse_double(v); }},
      {"ground_truth",
       [&](const std::string& v) {
          require(v == "dp" || v == "mc", "ground_truth must be dp or mc");
          cfg.ground_truth = v == "dp" ? GroundTruth::dp : GroundTruth::mc;
       }},
      {"ground_truth.n", [&](const std::string& v) { cfg.ground_truth_n = parse_int<std::size_t>(v); }},
      {"ground_truth.seed", [&](const std::string& v) { cfg.ground_truth_seed = parse_int<std::uint64_t>(v); }},
   };

   for(const auto& [key, entry] : entries) {
      const auto& [value, at] = entry;
      auto it = setters.find(key);
      if(it == setters.end())
         fail(ErrorKind::invalid_argument, "config line " + std::to_string(at) + ": unknown key '" + key + "'");
      try {
         it->second(value);
      } catch(const OpeError& e) {
         fail(e.kind(), "config line " + std::to_string(at) + " (" + key + "): " + e.what());
      }
   }
   cfg.validate();
   return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
   std::ifstream in(path);
   require(bool(in), "cannot open config " + path.string());
   return parse_config(in, path.parent_path());
}

}  // namespace ope
