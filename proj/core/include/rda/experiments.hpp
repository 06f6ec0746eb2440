#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rda/dgcore.hpp"
#include "rda/mesh.hpp"
#include "rda/norms_report.hpp"
#include "rda/solve.hpp"

namespace rda {

enum class ExperimentKind { convergence, dg_compare, condition, precond_bench };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment(const std::string& name);

/// Preconditioner ids accepted by the driver.
const std::vector<std::string>& preconditioner_ids();

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::convergence;
  int dim = 2;
  std::string problem = "example1";
  std::vector<double> h_list;   // structured grid spacing, descending; empty picks a default per dim
  std::vector<int> m_list{1, 2, 3, 4};
  std::vector<double> theta_list{-1.0};
  double mu = 15.0;
  std::optional<int> patch_threshold;  // overrides the default table
  std::vector<std::filesystem::path> mesh_files;  // polygonal family, coarse to fine; replaces h_list
  std::vector<std::string> preconditioners{"a0-mg"};
  GmresOptions gmres{100, 1e-8, 10000};
  double solve_tol = 1e-12;      // GMRES tolerance for convergence runs above direct_limit
  int direct_limit = 20000;      // n_e up to which convergence runs use a sparse direct solve
  long long dg_max_dofs = 250000;  // dg-compare skips larger standard DG systems
  int dense_cond_limit = 6000;
  int mg_coarse_min = 0;         // smallest coarse grid n for a0-mg; 0 picks 8 (2D) or 2 (3D)
  MGOptions mg;
  bool allow_min_norm = false;   // downgrade unisolvence failures to warnings
  bool svg = false;
  bool record_times = true;      // false writes 0 for wall times (bitwise-reproducible output)
  std::filesystem::path out_dir = "rda-out";
  std::filesystem::path dump_matrix;  // Matrix Market of the first assembled system
  std::filesystem::path dump_recon;   // Matrix Market of the first reconstruction operator
  bool quiet = false;

  /// h_list or the default for the dimension (1/10..1/80 in 2D, 1/4..1/16 in 3D).
  std::vector<double> effective_h() const;
  /// Checks every field; throws std::invalid_argument naming the field.
  void validate() const;
};

/// `key = value` lines, '#' comments. Keys match the long CLI flags.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Applies one setting; throws std::invalid_argument on an unknown key or a
/// malformed value.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);
/// Round-trippable `key = value` text.
std::string config_text(const ExperimentConfig& cfg);

/// Accepts "0.1", "1/10" or comma separated lists of those.
std::vector<double> parse_real_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

/// Subdivisions per axis for grid spacing h on the problem's box.
int grid_n(const Box& domain, double h);

/// One discretization level of an experiment.
struct Level {
  double h = 0.0;  // grid spacing, or max element diameter for imported meshes
  std::vector<Mesh> hierarchy;  // nested family ending with the working mesh; single entry if not nested
  const Mesh& mesh() const { return hierarchy.back(); }
};

/// Structured levels with nested hierarchies for a0-mg, or imported polygonal meshes.
std::vector<Level> build_levels(const ExperimentConfig& cfg, const EllipticProblem& prob);

struct ConvergenceResult {
  int m = 0;
  double theta = -1.0;
  ConvergenceReport report;
  std::vector<std::string> warnings;
};

std::vector<ConvergenceResult> run_convergence(const ExperimentConfig& cfg);

struct DgCompareResult {
  int m = 0;
  ConvergenceReport rda;
  ConvergenceReport dg;
  std::optional<double> dof_ratio;  // dofs(RDA) / dofs(DG) at equal L2 error
  bool ratio_extrapolated = false;
  std::vector<std::string> warnings;
};

/// dofs_a / dofs_b at the smallest error reached by curve b that curve a
/// also covers, interpolating log(dofs) against log(error) along curve a.
/// Falls back to linear extrapolation from a's last two points.
std::optional<double> dof_ratio_at_equal_error(const ConvergenceReport& a, const ConvergenceReport& b,
                                               bool* extrapolated = nullptr);

std::vector<DgCompareResult> run_dg_compare(const ExperimentConfig& cfg);

struct ConditionRow {
  int m = 0;
  double theta = -1.0;
  double h = 0.0;
  int n_e = 0;
  double kappa = 0.0;       // sigma_max / sigma_min of A_{m,theta}
  double kappa_prec = 0.0;  // of A_0^-1 A_{m,theta} in the A_0 inner product
  double kappa_ratio = 0.0;       // kappa / kappa at the previous h, 0 on the first
  double kappa_prec_ratio = 0.0;  // same for kappa_prec
  std::string mode;
  double kappa_prec_l2 = 0.0;  // of A_0^-1 A_{m,theta} in the l2 norm
};

std::vector<ConditionRow> run_condition(const ExperimentConfig& cfg);

struct BenchRow {
  int m = 0;
  double theta = -1.0;
  double h = 0.0;
  int n_e = 0;
  std::string precond;
  int iterations = 0;
  bool converged = false;
  double relres = 0.0;
  double seconds = 0.0;
};

std::vector<BenchRow> run_precond_bench(const ExperimentConfig& cfg);

/// Preconditioner for the RDA system on `level`.
std::unique_ptr<Preconditioner> make_preconditioner(const std::string& id, const CSRMatrix& A, const Level& level,
                                                    const ExperimentConfig& cfg);

/// Runs the configured experiment, writes CSV files and the manifest into
/// out_dir, and returns a printable summary.
std::string run_experiment(const ExperimentConfig& cfg);

/// Config echo, version string and mesh convention note.
void write_manifest(const ExperimentConfig& cfg, const std::filesystem::path& path,
                    const std::vector<std::string>& outputs, const std::vector<std::string>& notes);

std::string version_string();

}  // namespace rda
