#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rda/experiments.hpp"
#include "rda/polynomial.hpp"
#include "rda/problems.hpp"
#include "test_util.hpp"

using namespace rda;
using rda::testing::square;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir;
}

ExperimentConfig quiet_config() {
  ExperimentConfig cfg;
  cfg.quiet = true;
  return cfg;
}

ConvergenceReport curve(std::vector<long long> dofs, std::vector<double> errs) {
  ConvergenceReport r;
  for (std::size_t i = 0; i < dofs.size(); ++i) r.rows.push_back({1.0, dofs[i], dofs[i], errs[i], 0, 0, 0, 0});
  return r;
}

}  // namespace

TEST(Config, ListsAndFractions) {
  const auto h = parse_real_list("1/10, 1/20,0.025");
  ASSERT_EQ(h.size(), 3u);
  EXPECT_DOUBLE_EQ(h[0], 0.1);
  EXPECT_DOUBLE_EQ(h[1], 0.05);
  EXPECT_DOUBLE_EQ(h[2], 0.025);
  EXPECT_EQ(parse_int_list("1,2, 3"), (std::vector<int>{1, 2, 3}));
  EXPECT_THROW(parse_real_list("1/x"), std::invalid_argument);
  EXPECT_THROW(parse_int_list("1.5"), std::invalid_argument);
  EXPECT_THROW(parse_int_list(""), std::invalid_argument);
}

TEST(Config, ParseFileWithComments) {
  const auto cfg = parse_config(
      "# precond study\n"
      "experiment = precond-bench\n"
      "h = 1/10, 1/20   # two levels\n"
      "m = 1,2\n"
      "theta = -1,1\n"
      "precond = a0-mg, jacobi\n"
      "patch_threshold = 12\n"
      "svg = yes\n");
  EXPECT_EQ(cfg.experiment, ExperimentKind::precond_bench);
  EXPECT_EQ(cfg.h_list.size(), 2u);
  EXPECT_EQ(cfg.m_list, (std::vector<int>{1, 2}));
  EXPECT_EQ(cfg.theta_list, (std::vector<double>{-1, 1}));
  EXPECT_EQ(cfg.preconditioners, (std::vector<std::string>{"a0-mg", "jacobi"}));
  ASSERT_TRUE(cfg.patch_threshold);
  EXPECT_EQ(*cfg.patch_threshold, 12);
  EXPECT_TRUE(cfg.svg);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, TextRoundTrip) {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::condition;
  cfg.h_list = {0.1, 0.05};
  cfg.m_list = {1, 3};
  cfg.theta_list = {-1, 1};
  cfg.mu = 7.5;
  cfg.gmres = {30, 1e-9, 77};
  cfg.dense_cond_limit = 1234;
  cfg.record_times = false;
  cfg.out_dir = "some/dir";
  const auto text = config_text(cfg);
  EXPECT_EQ(config_text(parse_config(text)), text);
}

TEST(Config, LaterSettingsOverride) {
  auto cfg = parse_config("mu = 3\nm = 1\n");
  apply_setting(cfg, "mu", "9");
  EXPECT_EQ(cfg.mu, 9.0);
  EXPECT_EQ(cfg.m_list, std::vector<int>{1});
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("mu 3\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("colour = red\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("experiment = everything\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("svg = maybe\n"), std::invalid_argument);
  EXPECT_THROW(parse_config("maxit = ten\n"), std::invalid_argument);
  try {
    parse_config("\n\nmu = abc\n");
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(load_config("/nonexistent_rda/cfg.txt"), std::runtime_error);
}

TEST(Config, ValidationNamesTheField) {
  auto expect_field = [](ExperimentConfig cfg, const std::string& field) {
    try {
      cfg.validate();
      FAIL() << "accepted invalid " << field;
    } catch (const std::invalid_argument& e) {
      EXPECT_EQ(std::string(e.what()).rfind(field + ":", 0), 0u) << e.what();
    }
  };
  ExperimentConfig c;
  c.theta_list = {0.5};
  expect_field(c, "theta");
  c = {};
  c.h_list = {0.05, 0.1};
  expect_field(c, "h");
  c = {};
  c.h_list = {0.3};
  expect_field(c, "h");
  c = {};
  c.m_list = {5};
  expect_field(c, "m");
  c.patch_threshold = 30;
  EXPECT_NO_THROW(c.validate());
  c = {};
  c.preconditioners = {"amg"};
  expect_field(c, "precond");
  c = {};
  c.mu = 0;
  expect_field(c, "mu");
  c = {};
  c.dim = 3;
  expect_field(c, "problem");
  c = {};
  c.dim = 4;
  expect_field(c, "dim");
  c = {};
  c.gmres.tol = 0;
  expect_field(c, "tol");
  c = {};
  c.mesh_files = {"/nonexistent_rda/a.poly"};
  expect_field(c, "mesh-file");
  c = {};
  c.problem = "example9";
  expect_field(c, "problem");
  c = {};
  c.dim = 3;
  c.problem = "example2";
  c.m_list = {4};
  expect_field(c, "m");
}

TEST(Config, DefaultLevels) {
  ExperimentConfig c;
  EXPECT_EQ(c.effective_h(), (std::vector<double>{0.1, 0.05, 0.025, 0.0125}));
  c.dim = 3;
  EXPECT_EQ(c.effective_h(), (std::vector<double>{0.25, 0.125, 0.0625}));
}

TEST(Levels, GridSpacingMeansSubdivisions) {
  EXPECT_EQ(grid_n(square(-1, 1), 0.1), 20);
  EXPECT_EQ(grid_n(square(0, 1), 1.0 / 16), 16);
  EXPECT_THROW(grid_n(square(-1, 1), 0.3), std::invalid_argument);
  EXPECT_THROW(grid_n(square(-1, 1), 0.0), std::invalid_argument);
}

TEST(Levels, NestedHierarchies) {
  ExperimentConfig cfg;
  cfg.h_list = {0.1, 0.025};
  const auto levels = build_levels(cfg, make_problem("example1"));
  ASSERT_EQ(levels.size(), 2u);
  ASSERT_EQ(levels[0].hierarchy.size(), 2u);  // 10 -> 20
  ASSERT_EQ(levels[1].hierarchy.size(), 4u);  // 10 -> 20 -> 40 -> 80
  EXPECT_EQ(levels[1].hierarchy.front().num_elements(), 200u);
  EXPECT_EQ(levels[1].mesh().num_elements(), 2u * 80 * 80);
  // same vertex set as the directly generated grid
  EXPECT_EQ(rda::testing::vertex_keys(levels[0].mesh()),
            rda::testing::vertex_keys(gen_tri_mesh(square(-1, 1), 20)));
}

TEST(Levels, ImportedMeshesUseDiameter) {
  ExperimentConfig cfg;
  cfg.mesh_files = {std::filesystem::path(RDA_DATA_DIR) / "voronoi_8x8.poly"};
  const auto levels = build_levels(cfg, make_problem("example5"));
  ASSERT_EQ(levels.size(), 1u);
  EXPECT_EQ(levels[0].mesh().num_elements(), 64u);
  EXPECT_DOUBLE_EQ(levels[0].h, levels[0].mesh().max_diameter());
}

TEST(RunConvergence, ManufacturedPolynomialsReproduced) {
  for (int k : {1, 2, 3}) {
    auto cfg = quiet_config();
    cfg.problem = "manufactured:poly" + std::to_string(k);
    cfg.h_list = {1.0 / 4, 1.0 / 8, 1.0 / 16};
    cfg.m_list = {k};
    cfg.theta_list = {-1, 1};
    for (const auto& r : run_convergence(cfg)) {
      ASSERT_EQ(r.report.rows.size(), 3u);
      for (const auto& row : r.report.rows) {
        EXPECT_LE(row.l2, 1e-8) << "k=" << k << " h=" << row.h;
        EXPECT_LE(row.energy, 1e-8);
        EXPECT_EQ(row.dofs, row.n_e);
      }
      EXPECT_TRUE(r.warnings.empty());
    }
  }
}

TEST(RunConvergence, IterativePathMatchesDirect) {
  auto cfg = quiet_config();
  cfg.h_list = {0.1, 0.05};
  cfg.m_list = {2};
  const auto direct = run_convergence(cfg);
  cfg.direct_limit = 0;
  const auto iterative = run_convergence(cfg);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& a = direct[0].report.rows[i];
    const auto& b = iterative[0].report.rows[i];
    EXPECT_EQ(a.iters, 0);
    EXPECT_GT(b.iters, 0);
    EXPECT_NEAR(b.l2 / a.l2, 1.0, 1e-6);
    EXPECT_NEAR(b.energy / a.energy, 1.0, 1e-6);
  }
}

TEST(RunConvergence, ErrorsDecreaseForSmoothSolution) {
  auto cfg = quiet_config();
  cfg.h_list = {0.1, 0.05, 0.025};
  cfg.m_list = {1};
  const auto r = run_convergence(cfg)[0].report;
  EXPECT_GT(r.rows[0].l2, r.rows[1].l2);
  EXPECT_GT(r.rows[1].l2, r.rows[2].l2);
  ASSERT_TRUE(r.orders().l2);
  EXPECT_GT(r.orders().l2->order, 1.5);
}

TEST(DofRatio, InterpolatesAlongFirstCurve) {
  const auto a = curve({100, 400, 1600}, {1e-2, 1e-3, 1e-4});
  const auto b = curve({300, 1200}, {1e-2, 1e-3});
  bool extrap = true;
  const auto r = dof_ratio_at_equal_error(a, b, &extrap);
  ASSERT_TRUE(r);
  EXPECT_NEAR(*r, 400.0 / 1200.0, 1e-12);
  EXPECT_FALSE(extrap);
  // b error 10^-2.5 sits halfway between a's first two points in log space
  const auto half = dof_ratio_at_equal_error(a, curve({500}, {std::pow(10.0, -2.5)}));
  EXPECT_NEAR(*half, 200.0 / 500.0, 1e-12);
}

TEST(DofRatio, ExtrapolatesBeyondCurve) {
  const auto a = curve({100, 400}, {1e-2, 1e-3});
  bool extrap = false;
  const auto r = dof_ratio_at_equal_error(a, curve({1000}, {1e-4}), &extrap);
  ASSERT_TRUE(r);
  EXPECT_TRUE(extrap);
  EXPECT_NEAR(*r, 1600.0 / 1000.0, 1e-9);
  EXPECT_FALSE(dof_ratio_at_equal_error(curve({100}, {1e-2}), a));
}

TEST(RunDgCompare, DofCountsAndRatio) {
  auto cfg = quiet_config();
  cfg.experiment = ExperimentKind::dg_compare;
  cfg.h_list = {0.5, 0.25, 0.125};
  cfg.m_list = {1, 2, 3, 4};
  const auto results = run_dg_compare(cfg);
  ASSERT_EQ(results.size(), 4u);
  for (const auto& r : results) {
    ASSERT_EQ(r.rda.rows.size(), r.dg.rows.size());
    const long long P = MonomialBasis(2, r.m).size();
    EXPECT_EQ(P, (r.m + 1) * (r.m + 2) / 2);
    for (std::size_t i = 0; i < r.rda.rows.size(); ++i) EXPECT_EQ(r.dg.rows[i].dofs, P * r.rda.rows[i].dofs);
    EXPECT_TRUE(r.dof_ratio.has_value());
    EXPECT_GT(*r.dof_ratio, 0.0);
  }
}

TEST(RunDgCompare, SizeCapSkipsLargeDgSystems) {
  auto cfg = quiet_config();
  cfg.experiment = ExperimentKind::dg_compare;
  cfg.h_list = {0.5, 0.25};
  cfg.m_list = {2};
  cfg.dg_max_dofs = 6 * 32;  // admits n=4 (32 triangles), not n=8
  const auto r = run_dg_compare(cfg)[0];
  EXPECT_EQ(r.rda.rows.size(), 2u);
  EXPECT_EQ(r.dg.rows.size(), 1u);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("dg-max-dofs"), std::string::npos);
}

TEST(RunCondition, PreconditionedAndPlainNumbers) {
  auto cfg = quiet_config();
  cfg.experiment = ExperimentKind::condition;
  cfg.h_list = {0.25, 0.125};
  cfg.m_list = {1};
  cfg.theta_list = {-1, 1};
  const auto rows = run_condition(cfg);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) {
    EXPECT_GT(r.kappa, 1.0);
    EXPECT_GT(r.kappa_prec, 1.0);
    EXPECT_GT(r.kappa_prec_l2, 1.0);
    EXPECT_EQ(r.mode, "dense");
  }
  EXPECT_EQ(rows[0].kappa_ratio, 0.0);
  EXPECT_NEAR(rows[1].kappa_ratio, rows[1].kappa / rows[0].kappa, 1e-12);
  EXPECT_GT(rows[1].kappa, rows[0].kappa);
  const auto A0 = assemble_a0(gen_tri_mesh(square(-1, 1), 8)).A;
  EXPECT_NEAR(condition_estimate(A0, &A0, CondMode::dense).kappa, 1.0, 1e-10);
}

TEST(RunPrecondBench, RowsPerCombination) {
  auto cfg = quiet_config();
  cfg.experiment = ExperimentKind::precond_bench;
  cfg.h_list = {0.1, 0.05};
  cfg.m_list = {1};
  cfg.theta_list = {-1, 1};
  cfg.preconditioners = {"a0-mg", "a0-direct", "jacobi", "ilu0", "none"};
  const auto rows = run_precond_bench(cfg);
  ASSERT_EQ(rows.size(), 2u * 2 * 5);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.converged) << r.precond;
    EXPECT_LE(r.relres, 1e-8);
  }
  // on h = 1/10 the hierarchy is a single level, so a0-mg is an exact A0 solve
  EXPECT_EQ(rows[0].precond, "a0-mg");
  EXPECT_EQ(rows[1].precond, "a0-direct");
  EXPECT_EQ(rows[0].iterations, rows[1].iterations);
  EXPECT_LT(rows[0].iterations * 3, rows[2].iterations);
}

TEST(RunExperiment, WritesCsvManifestAndIsDeterministic) {
  auto cfg = quiet_config();
  cfg.h_list = {0.25, 0.125, 0.0625};
  cfg.m_list = {1, 2};
  cfg.svg = true;
  cfg.record_times = false;
  cfg.out_dir = fresh_dir("rda_exp_a");
  run_experiment(cfg);
  auto cfg2 = cfg;
  cfg2.out_dir = fresh_dir("rda_exp_b");
  run_experiment(cfg2);
  for (const char* f : {"convergence_m1_theta-1.csv", "convergence_m2_theta-1.csv", "convergence.svg"}) {
    ASSERT_TRUE(std::filesystem::exists(cfg.out_dir / f)) << f;
    EXPECT_EQ(slurp(cfg.out_dir / f), slurp(cfg2.out_dir / f)) << f;
  }
  EXPECT_EQ(read_csv(cfg.out_dir / "convergence_m1_theta-1.csv").rows.size(), 3u);
  const auto manifest = slurp(cfg.out_dir / "manifest.txt");
  EXPECT_NE(manifest.find("# version: " + version_string()), std::string::npos);
  EXPECT_NE(manifest.find("# mesh: h is the structured grid spacing"), std::string::npos);
  EXPECT_NE(manifest.find("# output: convergence.svg"), std::string::npos);
  // the manifest doubles as a config file
  const auto echoed = parse_config(manifest);
  EXPECT_EQ(echoed.m_list, cfg.m_list);
  EXPECT_EQ(echoed.h_list, cfg.h_list);
  std::filesystem::remove_all(cfg.out_dir);
  std::filesystem::remove_all(cfg2.out_dir);
}

TEST(RunExperiment, PrecondTableLayout) {
  auto cfg = quiet_config();
  cfg.experiment = ExperimentKind::precond_bench;
  cfg.h_list = {0.25, 0.125};
  cfg.m_list = {1, 2};
  cfg.preconditioners = {"a0-mg", "jacobi"};
  cfg.out_dir = fresh_dir("rda_exp_table");
  run_experiment(cfg);
  std::ifstream in(cfg.out_dir / "precond_table.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "precond,m,theta,h=1/4,h=1/8");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4);
  std::filesystem::remove_all(cfg.out_dir);
}

TEST(RunExperiment, DumpsMatrixAndReconstruction) {
  auto cfg = quiet_config();
  cfg.h_list = {0.5};
  cfg.m_list = {1};
  cfg.out_dir = fresh_dir("rda_exp_dump");
  cfg.dump_matrix = std::filesystem::temp_directory_path() / "rda_dump_A.mtx";
  cfg.dump_recon = std::filesystem::temp_directory_path() / "rda_dump_R.mtx";
  run_experiment(cfg);
  const auto A = read_matrix_market(cfg.dump_matrix);
  const auto R = read_matrix_market(cfg.dump_recon);
  EXPECT_EQ(A.rows(), 32);
  EXPECT_EQ(R.rows(), 32 * 3);
  EXPECT_EQ(R.cols(), 32);
  std::filesystem::remove(cfg.dump_matrix);
  std::filesystem::remove(cfg.dump_recon);
  std::filesystem::remove_all(cfg.out_dir);
}

TEST(PolygonalData, SampleMeshesTileTheSquare) {
  for (const char* name : {"voronoi_8x8.poly", "voronoi_16x16.poly", "voronoi_32x32.poly", "voronoi_64x64.poly"}) {
    const auto mesh = import_poly_mesh(std::filesystem::path(RDA_DATA_DIR) / name);
    EXPECT_EQ(mesh.kind(), ElementKind::polygonal);
    EXPECT_NEAR(mesh.total_volume(), 4.0, 1e-12) << name;
    double boundary = 0.0;
    for (const auto& f : mesh.faces())
      if (f.is_boundary()) boundary += f.measure;
    EXPECT_NEAR(boundary, 8.0, 1e-12) << name;
    EXPECT_LT(mesh.quasi_uniformity(), 4.0) << name;
  }
  EXPECT_EQ(import_poly_mesh(std::filesystem::path(RDA_DATA_DIR) / "voronoi_8x8.poly").num_elements(), 64u);
}
