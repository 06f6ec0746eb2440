#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rda {

struct OrderFit {
  double order = 0.0;
  int used = 0;
  int excluded = 0;  // nonpositive errors dropped from the fit
  bool flagged() const { return excluded > 0; }
};

/// Least-squares slope of log(err) against log(h). Nonpositive errors are
/// skipped and counted. Throws std::invalid_argument on a size mismatch, a
/// nonpositive h, or fewer than two usable pairs.
OrderFit fit_order(std::span<const double> hs, std::span<const double> errs);

struct ReportRow {
  double h = 0.0;
  long long n_e = 0;
  long long dofs = 0;
  double l2 = 0.0;
  double energy = 0.0;
  double energy_tilde = 0.0;
  int iters = 0;
  double seconds = 0.0;
};

struct ReportOrders {
  std::optional<OrderFit> l2, energy, energy_tilde;
};

struct ConvergenceReport {
  std::string label;
  std::vector<ReportRow> rows;

  /// Orders over the last `window` rows; empty when fewer than three rows.
  ReportOrders orders(int window = 3) const;
};

inline constexpr const char* kReportHeader = "h,n_e,dofs,l2,energy,energy_tilde,iters,seconds";

/// Header row plus one line per row, floats with 17 significant digits.
void write_csv(const ConvergenceReport& report, const std::filesystem::path& path);
ConvergenceReport read_csv(const std::filesystem::path& path);

/// Shortest round-trip text for a double ("%.17g").
std::string format_double(double v);

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Log-log line plot with labeled axes and a legend. Nonpositive points are
/// dropped.
void write_svg(const std::vector<PlotSeries>& series, const std::filesystem::path& path, const std::string& title,
               const std::string& xlabel, const std::string& ylabel);

}  // namespace rda
