#include "rda/norms_report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rda {

OrderFit fit_order(std::span<const double> hs, std::span<const double> errs) {
  if (hs.size() != errs.size()) throw std::invalid_argument("fit_order: size mismatch");
  OrderFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    if (!(hs[i] > 0.0)) throw std::invalid_argument("fit_order: nonpositive h");
    if (!(errs[i] > 0.0)) {
      ++fit.excluded;
      continue;
    }
    const double x = std::log(hs[i]), y = std::log(errs[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++fit.used;
  }
  if (fit.used < 2) throw std::invalid_argument("fit_order: fewer than two positive errors");
  const double n = fit.used;
  const double den = n * sxx - sx * sx;
  if (!(std::abs(den) > 0.0)) throw std::invalid_argument("fit_order: all h equal");
  fit.order = (n * sxy - sx * sy) / den;
  return fit;
}

ReportOrders ConvergenceReport::orders(int window) const {
  ReportOrders out;
  if (rows.size() < 3) return out;
  const std::size_t first = rows.size() - std::min<std::size_t>(rows.size(), std::max(window, 2));
  std::vector<double> h, l2, en, et;
  for (std::size_t i = first; i < rows.size(); ++i) {
    h.push_back(rows[i].h);
    l2.push_back(rows[i].l2);
    en.push_back(rows[i].energy);
    et.push_back(rows[i].energy_tilde);
  }
  auto try_fit = [&](const std::vector<double>& e) -> std::optional<OrderFit> {
    try {
      return fit_order(h, e);
    } catch (const std::invalid_argument&) {
      return std::nullopt;
    }
  };
  out.l2 = try_fit(l2);
  out.energy = try_fit(en);
  out.energy_tilde = try_fit(et);
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const ConvergenceReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path.string());
  out << kReportHeader << '\n';
  for (const auto& r : report.rows)
    out << format_double(r.h) << ',' << r.n_e << ',' << r.dofs << ',' << format_double(r.l2) << ','
        << format_double(r.energy) << ',' << format_double(r.energy_tilde) << ',' << r.iters << ','
        << format_double(r.seconds) << '\n';
  if (!out) throw std::runtime_error("write_csv: write failed for " + path.string());
}

ConvergenceReport read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader)
    throw std::runtime_error("read_csv: unexpected header in " + path.string());
  ConvergenceReport report;
  report.label = path.stem().string();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 8) throw std::runtime_error("read_csv: malformed row '" + line + "'");
    bool ok = true;
    auto num = [&](const std::string& cell) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      ok = ok && !cell.empty() && *end == '\0';
      return v;
    };
    auto integer = [&](const std::string& cell) {
      char* end = nullptr;
      const long long v = std::strtoll(cell.c_str(), &end, 10);
      ok = ok && !cell.empty() && *end == '\0';
      return v;
    };
    ReportRow row{num(f[0]), integer(f[1]), integer(f[2]), num(f[3]),
                  num(f[4]), num(f[5]), static_cast<int>(integer(f[6])), num(f[7])};
    if (!ok) throw std::runtime_error("read_csv: malformed row '" + line + "'");
    report.rows.push_back(row);
  }
  return report;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_svg(const std::vector<PlotSeries>& series, const std::filesystem::path& path, const std::string& title,
               const std::string& xlabel, const std::string& ylabel) {
  constexpr double W = 640, H = 480, L = 80, R = 150, T = 40, B = 60;
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("write_svg: series size mismatch");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.x[i] > 0 && s.y[i] > 0)) continue;
      xmin = std::min(xmin, std::log10(s.x[i]));
      xmax = std::max(xmax, std::log10(s.x[i]));
      ymin = std::min(ymin, std::log10(s.y[i]));
      ymax = std::max(ymax, std::log10(s.y[i]));
    }
  }
  if (!(xmin <= xmax)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  xmin = std::floor(xmin), xmax = std::max(std::ceil(xmax), xmin + 1);
  ymin = std::floor(ymin), ymax = std::max(std::ceil(ymax), ymin + 1);
  auto px = [&](double lx) { return L + (lx - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double ly) { return H - B - (ly - ymin) / (ymax - ymin) * (H - T - B); };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << (L + (W - L - R) / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << xml_escape(title)
    << "</text>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << (W - L - R) << "\" height=\"" << (H - T - B)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double d = xmin; d <= xmax + 1e-9; d += 1)
    o << "<line x1=\"" << px(d) << "\" y1=\"" << H - B << "\" x2=\"" << px(d) << "\" y2=\"" << H - B + 5
      << "\" stroke=\"black\"/><text x=\"" << px(d) << "\" y=\"" << H - B + 20
      << "\" text-anchor=\"middle\" font-size=\"12\">1e" << d << "</text>\n";
  for (double d = ymin; d <= ymax + 1e-9; d += 1)
    o << "<line x1=\"" << L - 5 << "\" y1=\"" << py(d) << "\" x2=\"" << L << "\" y2=\"" << py(d)
      << "\" stroke=\"black\"/><text x=\"" << L - 8 << "\" y=\"" << py(d) + 4
      << "\" text-anchor=\"end\" font-size=\"12\">1e" << d << "</text>\n";
  o << "<text x=\"" << (L + (W - L - R) / 2) << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\" font-size=\"14\">"
    << xml_escape(xlabel) << "</text>\n";
  o << "<text x=\"20\" y=\"" << (T + (H - T - B) / 2) << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 20 "
    << (T + (H - T - B) / 2) << ")\">" << xml_escape(ylabel) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* c = colors[k % 8];
    std::ostringstream pts;
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (s.x[i] > 0 && s.y[i] > 0) pts << px(std::log10(s.x[i])) << ',' << py(std::log10(s.y[i])) << ' ';
    o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"" << pts.str() << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      if (s.x[i] > 0 && s.y[i] > 0)
        o << "<circle cx=\"" << px(std::log10(s.x[i])) << "\" cy=\"" << py(std::log10(s.y[i])) << "\" r=\"3\" fill=\""
          << c << "\"/>\n";
    const double ly = T + 20 + 20 * static_cast<double>(k);
    o << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 35 << "\" y2=\"" << ly
      << "\" stroke=\"" << c << "\" stroke-width=\"2\"/><text x=\"" << W - R + 40 << "\" y=\"" << ly + 4
      << "\" font-size=\"12\">" << xml_escape(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_svg: cannot open " + path.string());
  out << o.str();
  if (!out) throw std::runtime_error("write_svg: write failed for " + path.string());
}

}  // namespace rda
