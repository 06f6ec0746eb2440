#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <vector>

#include "rda/norms_report.hpp"

using namespace rda;

namespace {

std::filesystem::path temp_file(const std::string& name) { return std::filesystem::temp_directory_path() / name; }

std::size_t count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

bool bitwise_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST(FitOrder, ExactPowerLaw) {
  const std::vector<double> h{0.1, 0.05, 0.025, 0.0125};
  std::vector<double> e;
  for (double x : h) e.push_back(3.7 * x * x);
  const auto fit = fit_order(h, e);
  EXPECT_NEAR(fit.order, 2.0, 1e-12);
  EXPECT_EQ(fit.used, 4);
  EXPECT_FALSE(fit.flagged());
}

TEST(FitOrder, TwoPoints) {
  const std::vector<double> h{0.1, 0.05}, e{1e-2, 2.5e-3};
  EXPECT_NEAR(fit_order(h, e).order, 2.0, 1e-12);
}

TEST(FitOrder, FifthOrderColumn) {
  const std::vector<double> h{1.0 / 10, 1.0 / 20, 1.0 / 40, 1.0 / 80};
  const std::vector<double> e{6.75e-3, 2.04e-4, 6.51e-6, 2.01e-7};
  EXPECT_NEAR(fit_order(h, e).order, 5.01, 0.005);
}

TEST(FitOrder, NonpositiveErrorsExcludedAndFlagged) {
  const std::vector<double> h{0.1, 0.05, 0.025};
  const std::vector<double> e{1e-3, 0.0, 1e-3 / 64};
  const auto fit = fit_order(h, e);
  EXPECT_NEAR(fit.order, 3.0, 1e-12);
  EXPECT_EQ(fit.used, 2);
  EXPECT_EQ(fit.excluded, 1);
  EXPECT_TRUE(fit.flagged());
}

TEST(FitOrder, Errors) {
  const std::vector<double> one{0.1}, two{0.1, 0.05}, three{0.1, 0.05, 0.025};
  EXPECT_THROW(fit_order(one, one), std::invalid_argument);
  EXPECT_THROW(fit_order(two, three), std::invalid_argument);
  EXPECT_THROW(fit_order(std::vector<double>{0.1, 0.0}, two), std::invalid_argument);
  EXPECT_THROW(fit_order(two, std::vector<double>{-1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(fit_order(std::vector<double>{0.1, 0.1}, two), std::invalid_argument);
}

TEST(ConvergenceReport, OrdersUseLastThreeRows) {
  ConvergenceReport r;
  // first row off the power law, so a 4-point fit would differ
  const double hs[] = {0.2, 0.1, 0.05, 0.025};
  for (double h : hs) r.rows.push_back({h, 1, 1, h * h * h, h * h, h, 0, 0.0});
  r.rows[0].l2 = 1.0;
  const auto o = r.orders();
  ASSERT_TRUE(o.l2 && o.energy && o.energy_tilde);
  EXPECT_NEAR(o.l2->order, 3.0, 1e-12);
  EXPECT_NEAR(o.energy->order, 2.0, 1e-12);
  EXPECT_NEAR(o.energy_tilde->order, 1.0, 1e-12);
  EXPECT_GT(std::abs(r.orders(4).l2->order - 3.0), 0.1);
}

TEST(ConvergenceReport, NeedsThreeRows) {
  ConvergenceReport r;
  r.rows.push_back({0.1, 1, 1, 1e-2, 1e-1, 1e-1, 0, 0});
  r.rows.push_back({0.05, 1, 1, 2.5e-3, 5e-2, 5e-2, 0, 0});
  const auto o = r.orders();
  EXPECT_FALSE(o.l2 || o.energy || o.energy_tilde);
}

TEST(Csv, EmptyReportIsHeaderOnly) {
  const auto p = temp_file("rda_empty.csv");
  write_csv({}, p);
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "h,n_e,dofs,l2,energy,energy_tilde,iters,seconds");
  EXPECT_EQ(count_lines(p), 1u);
  EXPECT_TRUE(read_csv(p).rows.empty());
  std::filesystem::remove(p);
}

TEST(Csv, RoundTripIsBitwise) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-30, 5);
  ConvergenceReport r;
  for (int i = 0; i < 20; ++i)
    r.rows.push_back({std::pow(10.0, u(rng)), 800LL << i, 1234567890123LL + i, std::pow(10.0, u(rng)),
                      std::pow(10.0, u(rng)), std::pow(10.0, u(rng)), i * 7, std::pow(10.0, u(rng))});
  r.rows.push_back({1.0 / 3.0, 1, 1, std::numeric_limits<double>::denorm_min(), std::numeric_limits<double>::max(),
                    0.1, 0, 0.0});
  const auto p = temp_file("rda_roundtrip.csv");
  write_csv(r, p);
  const auto back = read_csv(p);
  ASSERT_EQ(back.rows.size(), r.rows.size());
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto &a = r.rows[i], &b = back.rows[i];
    EXPECT_TRUE(bitwise_equal(a.h, b.h));
    EXPECT_EQ(a.n_e, b.n_e);
    EXPECT_EQ(a.dofs, b.dofs);
    EXPECT_TRUE(bitwise_equal(a.l2, b.l2));
    EXPECT_TRUE(bitwise_equal(a.energy, b.energy));
    EXPECT_TRUE(bitwise_equal(a.energy_tilde, b.energy_tilde));
    EXPECT_EQ(a.iters, b.iters);
    EXPECT_TRUE(bitwise_equal(a.seconds, b.seconds));
  }
  std::filesystem::remove(p);
}

TEST(Csv, FourRowsGiveFiveLines) {
  ConvergenceReport r;
  for (int n : {20, 40, 80, 160}) r.rows.push_back({2.0 / n, 2LL * n * n, 2LL * n * n, 1e-3, 1e-2, 1e-2, 30, 0.5});
  const auto p = temp_file("rda_four.csv");
  write_csv(r, p);
  EXPECT_EQ(count_lines(p), 5u);
  std::filesystem::remove(p);
}

TEST(Csv, Errors) {
  EXPECT_THROW(write_csv({}, "/nonexistent_dir_rda/x.csv"), std::runtime_error);
  EXPECT_THROW(read_csv("/nonexistent_dir_rda/x.csv"), std::runtime_error);
  const auto p = temp_file("rda_bad.csv");
  {
    std::ofstream out(p);
    out << "h,n_e\n";
  }
  EXPECT_THROW(read_csv(p), std::runtime_error);
  {
    std::ofstream out(p);
    out << "h,n_e,dofs,l2,energy,energy_tilde,iters,seconds\n0.1,2,x,1,1,1,1,1\n";
  }
  EXPECT_THROW(read_csv(p), std::runtime_error);
  std::filesystem::remove(p);
}

TEST(Svg, WritesSeriesAndLabels) {
  const auto p = temp_file("rda_plot.svg");
  write_svg({{"m=1", {10, 100, 1000}, {1e-1, 1e-2, 1e-3}}, {"m=2 <dg>", {10, 100}, {1e-2, 0.0}}}, p, "L2 error",
            "dofs", "error");
  std::ifstream in(p);
  const std::string text((std::istreambuf_iterator<char>(in)), {});
  EXPECT_NE(text.find("<svg"), std::string::npos);
  EXPECT_NE(text.find("m=1"), std::string::npos);
  EXPECT_NE(text.find("m=2 &lt;dg&gt;"), std::string::npos);
  EXPECT_NE(text.find(">dofs<"), std::string::npos);
  EXPECT_NE(text.find(">error<"), std::string::npos);
  std::size_t circles = 0;
  for (std::size_t pos = 0; (pos = text.find("<circle", pos)) != std::string::npos; ++pos) ++circles;
  EXPECT_EQ(circles, 4u);
  std::filesystem::remove(p);
}

TEST(FormatDouble, SeventeenDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(2.0), "2");
}
