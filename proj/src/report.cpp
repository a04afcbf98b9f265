#include "ope/report.hpp"

#include "ope/errors.hpp"
#include "ope/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

namespace ope {

namespace {

constexpr const char* report_header = "env,T,gamma,N,seed,estimator,class,estimate,true_value,status";
constexpr const char* summary_header = "env,T,N,estimator,rel_mse,near_top";

std::string fmt(double v)
{
   if(std::isnan(v))
      return "nan";
   char buf[32];
   std::snprintf(buf, sizeof buf, "%.17g", v);
   return buf;
}

double parse_field(const std::string& s)
{
   if(s == "nan")
      return std::numeric_limits<double>::quiet_NaN();
   std::size_t used = 0;
   const double v = std::stod(s, &used);
   require(used == s.size(), "malformed number '" + s + "' in report");
   return v;
}

std::vector<std::string> split_csv(const std::string& line)
{
   std::vector<std::string> out;
   std::stringstream ss(line);
   std::string item;
   while(std::getline(ss, item, ','))
      out.push_back(item);
   if(! line.empty() && line.back() == ',')
      out.emplace_back();
   return out;
}

}  // namespace

std::string format_sci(double v)
{
   if(! std::isfinite(v))
      return "fail";
   char buf[32];
   std::snprintf(buf, sizeof buf, "%.1E", v);
   std::string s(buf);
   const auto e = s.find('E');
   std::string mant = s.substr(0, e + 1);
   std::string exp = s.substr(e + 1);
   std::string sign;
   if(exp.front() == '+' || exp.front() == '-') {
      sign = exp.front() == '-' ? "-" : "";
      exp.erase(0, 1);
   }
   exp.erase(0, std::min(exp.find_first_not_of('0'), exp.size() - 1));
   return mant + sign + exp;
}

std::vector<SummaryRow> summarize(const std::vector<ReportRow>& rows)
{
   using Key = std::tuple<std::string, std::size_t, std::size_t, std::string>;
   std::map<Key, std::size_t> index;
   std::vector<SummaryRow> out;
   std::vector<std::vector<double>> estimates;
   std::vector<std::vector<double>> truths;
   std::vector<bool> failed;
   for(const auto& r : rows) {
      Key key{r.env, r.T, r.N, r.estimator};
      auto [it, fresh] = index.emplace(key, out.size());
      if(fresh) {
         out.push_back(SummaryRow{r.env, r.T, r.N, r.estimator, r.cls, 0.0, 0.0});
         estimates.emplace_back();
         truths.emplace_back();
         failed.push_back(false);
      }
      const auto k = it->second;
      if(! status_has_estimate(r.status) || ! std::isfinite(r.estimate))
         failed[k] = true;
      estimates[k].push_back(r.estimate);
      truths[k].push_back(r.true_value);
   }
   for(std::size_t k = 0; k < out.size(); ++k)
      out[k].rel_mse = failed[k] ? std::numeric_limits<double>::quiet_NaN() : relative_mse(estimates[k], truths[k]);

   // Near-top Frequency per (env, T) group, conditions = N values.
   std::map<std::pair<std::string, std::size_t>, std::vector<std::size_t>> groups;
   for(std::size_t k = 0; k < out.size(); ++k)
      groups[{out[k].env, out[k].T}].push_back(k);
   for(const auto& [group, members] : groups) {
      std::vector<std::string> names;
      std::vector<std::size_t> ns;
      for(auto k : members) {
         if(std::find(names.begin(), names.end(), out[k].estimator) == names.end())
            names.push_back(out[k].estimator);
         if(std::find(ns.begin(), ns.end(), out[k].N) == ns.end())
            ns.push_back(out[k].N);
      }
      std::vector<std::vector<double>> table(ns.size(), std::vector<double>(names.size(), std::numeric_limits<double>::quiet_NaN()));
      for(auto k : members) {
         const auto c = std::find(ns.begin(), ns.end(), out[k].N) - ns.begin();
         const auto e = std::find(names.begin(), names.end(), out[k].estimator) - names.begin();
         table[c][e] = out[k].rel_mse;
      }
      const auto freq = near_top_frequency(table);
      for(auto k : members) {
         const auto e = std::find(names.begin(), names.end(), out[k].estimator) - names.begin();
         out[k].near_top = freq[e];
      }
   }
   return out;
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows)
{
   out << report_header << '\n';
   for(const auto& r : rows) {
      out << r.env << ',' << r.T << ',' << fmt(r.gamma) << ',' << r.N << ',' << r.seed << ',' << r.estimator << ','
          << r.cls << ',' << fmt(r.estimate) << ',' << fmt(r.true_value) << ',' << r.status << '\n';
   }
}

std::vector<ReportRow> read_report_csv(std::istream& in)
{
   std::string line;
   require(bool(std::getline(in, line)), "report is empty");
   require(line == report_header, "unexpected report header: " + line);
   std::vector<ReportRow> rows;
   std::size_t lineno = 1;
   while(std::getline(in, line)) {
      ++lineno;
      if(line.empty())
         continue;
      const auto f = split_csv(line);
      require(f.size() == 10, "report line " + std::to_string(lineno) + " does not have 10 fields");
      ReportRow r;
      r.env = f[0];
      r.T = std::stoull(f[1]);
      r.gamma = parse_field(f[2]);
      r.N = std::stoull(f[3]);
      r.seed = std::stoull(f[4]);
      r.estimator = f[5];
      r.cls = f[6];
      r.estimate = parse_field(f[7]);
      r.true_value = parse_field(f[8]);
      r.status = f[9];
      rows.push_back(std::move(r));
   }
   return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows)
{
   out << summary_header << '\n';
   for(const auto& r : rows)
      out << r.env << ',' << r.T << ',' << r.N << ',' << r.estimator << ',' << fmt(r.rel_mse) << ','
          << fmt(r.near_top) << '\n';
}

std::string markdown_tables(const std::vector<SummaryRow>& rows)
{
   std::ostringstream md;
   std::vector<std::tuple<std::string, std::size_t, std::size_t>> blocks;
   for(const auto& r : rows) {
      std::tuple key{r.env, r.T, r.N};
      if(std::find(blocks.begin(), blocks.end(), key) == blocks.end())
         blocks.push_back(key);
   }
   auto lookup = [&](const auto& key, const std::string& name) -> const SummaryRow* {
      for(const auto& r : rows)
         if(std::tuple{r.env, r.T, r.N} == key && r.estimator == name)
            return &r;
      return nullptr;
   };
   auto cell = [&](const auto& key, const std::string& name) {
      const auto* r = lookup(key, name);
      return r ? format_sci(r->rel_mse) : std::string("-");
   };

   for(const auto& key : blocks) {
      const auto& [env, T, N] = key;
      md << "### " << env << ", T=" << T << ", N=" << N << "\n\n";
      std::vector<std::string> dms;
      for(const auto& r : rows)
         if(std::tuple{r.env, r.T, r.N} == key && r.cls == "DM")
            dms.push_back(r.estimator);
      if(! dms.empty()) {
         md << "| DM | Direct | DR | WDR | MAGIC |\n|---|---|---|---|---|\n";
         for(const auto& dm : dms) {
            md << "| " << dm << " | " << cell(key, dm);
            for(const char* h : {"DR", "WDR", "MAGIC"})
               md << " | " << cell(key, std::string(h) + "(" + dm + ")");
            md << " |\n";
         }
         md << '\n';
      }
      const bool any_ips = std::any_of(rows.begin(), rows.end(), [&](const SummaryRow& r) {
         return std::tuple{r.env, r.T, r.N} == key && r.cls == "IPS";
      });
      if(any_ips) {
         md << "| IPS | Standard | Per-Decision |\n|---|---|---|\n";
         md << "| IS | " << cell(key, "IS") << " | " << cell(key, "PDIS") << " |\n";
         md << "| WIS | " << cell(key, "WIS") << " | " << cell(key, "PDWIS") << " |\n";
         md << "| NAIVE | " << cell(key, "NAIVE") << " | - |\n\n";
      }
   }

   std::vector<std::pair<std::string, std::size_t>> groups;
   for(const auto& r : rows)
      if(std::find(groups.begin(), groups.end(), std::pair{r.env, r.T}) == groups.end())
         groups.emplace_back(r.env, r.T);
   for(const auto& [env, T] : groups) {
      md << "### Near-top Frequency, " << env << ", T=" << T << "\n\n| Estimator | Frequency |\n|---|---|\n";
      std::vector<std::string> seen;
      for(const auto& r : rows) {
         if(r.env != env || r.T != T || std::find(seen.begin(), seen.end(), r.estimator) != seen.end())
            continue;
         seen.push_back(r.estimator);
         char buf[16];
         std::snprintf(buf, sizeof buf, "%.3f", r.near_top);
         md << "| " << r.estimator << " | " << buf << " |\n";
      }
      md << '\n';
   }
   return md.str();
}

}  // namespace ope
