#pragma once

#include "ope/experiment.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace ope {

struct SummaryRow {
   std::string env;
   std::size_t T = 0;
   std::size_t N = 0;
   std::string estimator;
   std::string cls;
   double rel_mse = 0.0;   ///< NaN when any seed failed
   double near_top = 0.0;  ///< fraction of N conditions where the estimator is near the best
};

/// Relative MSE per (env, T, N, estimator) over seeds, and the Near-top
/// Frequency of each estimator across the N conditions of its (env, T) group.
/// Rows keep the first-appearance order of the report.
std::vector<SummaryRow> summarize(const std::vector<ReportRow>& rows);

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);
std::vector<ReportRow> read_report_csv(std::istream& in);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

/// One block per (env, T, N): direct methods against their hybrids
/// (Direct | DR | WDR | MAGIC), then the IPS block (standard | per-decision),
/// followed by the Near-top Frequency of every estimator. Numbers use one
/// decimal of scientific notation.
std::string markdown_tables(const std::vector<SummaryRow>& rows);

/// "%.1E" without exponent zero padding, e.g. 3.2E-5.
std::string format_sci(double v);

}  // namespace ope
