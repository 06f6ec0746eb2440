#include "rda/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "rda/patch.hpp"
#include "rda/problems.hpp"
#include "rda/recon.hpp"

#ifndef RDA_VERSION_STRING
#define RDA_VERSION_STRING "unknown"
#endif

namespace rda {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_real(const std::string& text) {
  const auto t = trim(text);
  const auto slash = t.find('/');
  std::size_t used = 0;
  try {
    if (slash != std::string::npos) {
      const double a = std::stod(t.substr(0, slash), &used);
      if (used != slash) throw std::invalid_argument(t);
      const std::string den = t.substr(slash + 1);
      const double b = std::stod(den, &used);
      if (used != den.size()) throw std::invalid_argument(t);
      return a / b;
    }
    const double v = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument(t);
    return v;
  } catch (const std::logic_error&) {
    throw std::invalid_argument("not a number: '" + t + "'");
  }
}

long long parse_integer(const std::string& text) {
  const auto t = trim(text);
  std::size_t used = 0;
  try {
    const long long v = std::stoll(t, &used);
    if (used != t.size()) throw std::invalid_argument(t);
    return v;
  } catch (const std::logic_error&) {
    throw std::invalid_argument("not an integer: '" + t + "'");
  }
}

bool parse_bool(const std::string& text) {
  std::string t = trim(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw std::invalid_argument("not a boolean: '" + text + "'");
}

std::string format_h(double h) {
  const double inv = 1.0 / h;
  if (std::abs(inv - std::round(inv)) < 1e-9 * inv) return "1/" + std::to_string(std::llround(inv));
  return format_double(h);
}

template <class T, class F>
std::string join(const std::vector<T>& v, F fmt) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
  return out;
}

std::string theta_tag(double theta) { return theta < 0 ? "theta-1" : "theta1"; }

ElementKind mesh_kind(const ExperimentConfig& cfg) {
  if (!cfg.mesh_files.empty()) return ElementKind::polygonal;
  return cfg.dim == 2 ? ElementKind::triangular : ElementKind::tetrahedral;
}

int threshold_for(const ExperimentConfig& cfg, int m, const Mesh& mesh) {
  if (cfg.patch_threshold) return *cfg.patch_threshold;
  const auto t = default_threshold(m, mesh.dim(), mesh.kind());
  if (!t) throw std::invalid_argument("no default patch threshold for m=" + std::to_string(m));
  return *t;
}

EllipticProblem problem_for(const ExperimentConfig& cfg, double theta) {
  auto prob = make_problem(cfg.problem, cfg.dim);
  prob.theta = theta;
  prob.mu = cfg.mu;
  return prob;
}

struct Discretization {
  std::vector<ElementPatch> patches;
  ReconstructionOperator R;
};

Discretization discretize(const ExperimentConfig& cfg, const Mesh& mesh, int m, std::vector<std::string>& warnings) {
  Discretization d;
  d.patches = build_patches(mesh, threshold_for(cfg, m, mesh), m);
  d.R = build_operator(mesh, d.patches, m, {cfg.allow_min_norm});
  if (d.R.any_min_norm()) {
    int count = 0, first = -1;
    for (int k = 0; k < d.R.num_elements(); ++k)
      if (d.R.used_min_norm(k)) {
        if (first < 0) first = k;
        ++count;
      }
    warnings.push_back("m=" + std::to_string(m) + " n_e=" + std::to_string(mesh.num_elements()) + ": " +
                       std::to_string(count) + " patches not unisolvent (first element " + std::to_string(first) +
                       "), minimum-norm fit used");
  }
  return d;
}

Eigen::VectorXd direct_solve(const CSRMatrix& A, const Eigen::VectorXd& b, bool symmetric) {
  const DirectPreconditioner M(A, symmetric);
  Eigen::VectorXd x(b.size());
  M.apply({b.data(), static_cast<std::size_t>(b.size())}, {x.data(), static_cast<std::size_t>(x.size())});
  return x;
}

double relative_residual(const CSRMatrix& A, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
  const auto ax = A * std::span<const double>(x.data(), static_cast<std::size_t>(x.size()));
  double r = 0.0;
  for (Eigen::Index i = 0; i < b.size(); ++i) r += (b(i) - ax[i]) * (b(i) - ax[i]);
  const double nb = b.norm();
  return nb > 0 ? std::sqrt(r) / nb : std::sqrt(r);
}

struct LevelSolve {
  Eigen::VectorXd x;
  int iterations = 0;
};

LevelSolve solve_level(const CSRMatrix& A, const Eigen::VectorXd& b, const Level& level, bool symmetric,
                       const ExperimentConfig& cfg, std::vector<std::string>& warnings) {
  if (static_cast<int>(level.mesh().num_elements()) <= cfg.direct_limit) {
    LevelSolve s{direct_solve(A, b, symmetric), 0};
    if (!(relative_residual(A, s.x, b) <= 1e-8))
      warnings.push_back("direct solve residual above 1e-8 at h=" + format_h(level.h));
    return s;
  }
  const auto M = make_preconditioner(level.hierarchy.size() > 1 ? "a0-mg" : "a0-direct", A, level, cfg);
  GmresOptions opts = cfg.gmres;
  opts.tol = cfg.solve_tol;
  auto r = gmres(A, {b.data(), static_cast<std::size_t>(b.size())}, *M, opts);
  if (!r.stats.converged)
    warnings.push_back("GMRES stopped at relres " + format_double(r.stats.relres) + " at h=" + format_h(level.h));
  return {std::move(r.x), r.stats.iterations};
}

void dump_once(const ExperimentConfig& cfg, bool& done, const CSRMatrix& A, const ReconstructionOperator& R) {
  if (done) return;
  done = true;
  if (!cfg.dump_matrix.empty()) write_matrix_market(A, cfg.dump_matrix);
  if (!cfg.dump_recon.empty()) write_matrix_market(R.matrix(), cfg.dump_recon);
}

void log(const ExperimentConfig& cfg, const std::string& msg) {
  if (!cfg.quiet) std::fprintf(stderr, "[rda] %s\n", msg.c_str());
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::convergence: return "convergence";
    case ExperimentKind::dg_compare: return "dg-compare";
    case ExperimentKind::condition: return "condition";
    case ExperimentKind::precond_bench: return "precond-bench";
  }
  return "?";
}

ExperimentKind parse_experiment(const std::string& name) {
  for (auto k : {ExperimentKind::convergence, ExperimentKind::dg_compare, ExperimentKind::condition,
                 ExperimentKind::precond_bench})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("experiment: unknown '" + name +
                              "' (expected convergence, dg-compare, condition, precond-bench)");
}

const std::vector<std::string>& preconditioner_ids() {
  static const std::vector<std::string> ids{"a0-mg", "a0-direct", "jacobi", "ilu0", "none"};
  return ids;
}

std::vector<double> ExperimentConfig::effective_h() const {
  if (!h_list.empty()) return h_list;
  if (dim == 3) return {1.0 / 4, 1.0 / 8, 1.0 / 16};
  return {1.0 / 10, 1.0 / 20, 1.0 / 40, 1.0 / 80};
}

int grid_n(const Box& domain, double h) {
  if (!(h > 0)) throw std::invalid_argument("h: must be positive");
  const Point ext = domain.upper - domain.lower;
  const double n = ext.x() / h;
  const long long ni = std::llround(n);
  if (ni < 1 || std::abs(n - static_cast<double>(ni)) > 1e-8 * n)
    throw std::invalid_argument("h: " + format_h(h) + " does not divide the domain width " + format_double(ext.x()));
  return static_cast<int>(ni);
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (dim != 2 && dim != 3) fail("dim: must be 2 or 3");
  EllipticProblem prob;
  try {
    prob = make_problem(problem, dim);
  } catch (const std::exception& e) {
    fail(std::string("problem: ") + e.what());
  }
  if (prob.dim != dim) fail("problem: '" + problem + "' is " + std::to_string(prob.dim) + "D but dim=" + std::to_string(dim));
  if ((experiment == ExperimentKind::convergence || experiment == ExperimentKind::dg_compare) && !prob.has_exact())
    fail("problem: '" + problem + "' has no exact solution");
  if (!mesh_files.empty()) {
    if (dim != 2) fail("mesh-file: polygonal meshes are 2D only");
    if (!h_list.empty()) fail("mesh-file: cannot be combined with h");
    for (const auto& f : mesh_files)
      if (!std::filesystem::exists(f)) fail("mesh-file: " + f.string() + " does not exist");
  } else {
    const auto hs = effective_h();
    for (std::size_t i = 0; i < hs.size(); ++i) {
      try {
        grid_n(prob.domain, hs[i]);
      } catch (const std::invalid_argument& e) {
        fail(e.what());
      }
      if (i > 0 && !(hs[i] < hs[i - 1])) fail("h: list must be strictly descending");
    }
    const Point ext = prob.domain.upper - prob.domain.lower;
    for (int d = 1; d < dim; ++d)
      if (std::abs(ext[d] - ext[0]) > 1e-12) fail("problem: structured meshes need a square or cubic domain");
  }
  if (m_list.empty()) fail("m: list is empty");
  for (int m : m_list) {
    if (m < 1 || m > 6) fail("m: " + std::to_string(m) + " outside 1..6");
    if (!patch_threshold && !default_threshold(m, dim, mesh_kind(*this)))
      fail("m: no default patch threshold for m=" + std::to_string(m) + " on " + to_string(mesh_kind(*this)) +
           " meshes; pass patch-threshold");
  }
  if (theta_list.empty()) fail("theta: list is empty");
  for (double t : theta_list)
    if (t != 1.0 && t != -1.0) fail("theta: must be -1 or 1");
  if (!(mu > 0)) fail("mu: must be positive");
  if (patch_threshold && *patch_threshold < 1) fail("patch-threshold: must be at least 1");
  if (preconditioners.empty()) fail("precond: list is empty");
  for (const auto& p : preconditioners) {
    const auto& ids = preconditioner_ids();
    if (std::find(ids.begin(), ids.end(), p) == ids.end())
      fail("precond: unknown '" + p + "' (expected a0-mg, a0-direct, jacobi, ilu0, none)");
    if (p == "a0-mg" && !mesh_files.empty() && experiment == ExperimentKind::precond_bench)
      fail("precond: a0-mg needs nested structured meshes");
  }
  if (gmres.restart < 1) fail("restart: must be at least 1");
  if (!(gmres.tol > 0 && gmres.tol < 1)) fail("tol: must lie in (0, 1)");
  if (gmres.maxit < 1) fail("maxit: must be at least 1");
  if (!(solve_tol > 0 && solve_tol < 1)) fail("solve-tol: must lie in (0, 1)");
  if (direct_limit < 0) fail("direct-limit: must be nonnegative");
  if (dg_max_dofs < 1) fail("dg-max-dofs: must be positive");
  if (dense_cond_limit < 1) fail("dense-cond-limit: must be positive");
  if (mg_coarse_min < 0) fail("mg-coarse-min: must be nonnegative");
  if (mg.pre_sweeps < 0 || mg.post_sweeps < 0 || mg.corrections < 1) fail("mg: invalid sweep or correction count");
  if (out_dir.empty()) fail("out: empty path");
}

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_real(item));
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const auto& item : split(text, ',')) out.push_back(static_cast<int>(parse_integer(item)));
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

void apply_setting(ExperimentConfig& cfg, const std::string& raw_key, const std::string& raw_value) {
  std::string key = trim(raw_key);
  std::replace(key.begin(), key.end(), '_', '-');
  const std::string value = trim(raw_value);
  try {
    if (key == "experiment") cfg.experiment = parse_experiment(value);
    else if (key == "dim") cfg.dim = static_cast<int>(parse_integer(value));
    else if (key == "problem") cfg.problem = value;
    else if (key == "h") cfg.h_list = parse_real_list(value);
    else if (key == "m") cfg.m_list = parse_int_list(value);
    else if (key == "theta") cfg.theta_list = parse_real_list(value);
    else if (key == "mu") cfg.mu = parse_real(value);
    else if (key == "patch-threshold") {
      if (value.empty() || value == "default") cfg.patch_threshold.reset();
      else cfg.patch_threshold = static_cast<int>(parse_integer(value));
    } else if (key == "mesh-file") {
      cfg.mesh_files.clear();
      for (const auto& f : split(value, ',')) cfg.mesh_files.emplace_back(f);
    } else if (key == "precond") cfg.preconditioners = split(value, ',');
    else if (key == "restart") cfg.gmres.restart = static_cast<int>(parse_integer(value));
    else if (key == "tol") cfg.gmres.tol = parse_real(value);
    else if (key == "maxit") cfg.gmres.maxit = static_cast<int>(parse_integer(value));
    else if (key == "solve-tol") cfg.solve_tol = parse_real(value);
    else if (key == "direct-limit") cfg.direct_limit = static_cast<int>(parse_integer(value));
    else if (key == "dg-max-dofs") cfg.dg_max_dofs = parse_integer(value);
    else if (key == "dense-cond-limit") cfg.dense_cond_limit = static_cast<int>(parse_integer(value));
    else if (key == "mg-coarse-min") cfg.mg_coarse_min = static_cast<int>(parse_integer(value));
    else if (key == "pre-sweeps") cfg.mg.pre_sweeps = static_cast<int>(parse_integer(value));
    else if (key == "post-sweeps") cfg.mg.post_sweeps = static_cast<int>(parse_integer(value));
    else if (key == "corrections") cfg.mg.corrections = static_cast<int>(parse_integer(value));
    else if (key == "allow-min-norm") cfg.allow_min_norm = parse_bool(value);
    else if (key == "svg") cfg.svg = parse_bool(value);
    else if (key == "timing") cfg.record_times = parse_bool(value);
    else if (key == "quiet") cfg.quiet = parse_bool(value);
    else if (key == "out") cfg.out_dir = value;
    else if (key == "dump-matrix") cfg.dump_matrix = value;
    else if (key == "dump-recon") cfg.dump_recon = value;
    else throw std::invalid_argument("unknown key");
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(key + ": " + e.what());
  }
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  int lineno = 0;
  for (std::string line; std::getline(ss, line);) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected 'key = value'");
    try {
      apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_text(const ExperimentConfig& cfg) {
  std::ostringstream o;
  auto b = [](bool v) { return v ? "true" : "false"; };
  o << "experiment = " << to_string(cfg.experiment) << '\n'
    << "dim = " << cfg.dim << '\n'
    << "problem = " << cfg.problem << '\n';
  if (cfg.mesh_files.empty())
    o << "h = " << join(cfg.effective_h(), format_h) << '\n';
  else
    o << "mesh-file = " << join(cfg.mesh_files, [](const auto& p) { return p.string(); }) << '\n';
  o << "m = " << join(cfg.m_list, [](int m) { return std::to_string(m); }) << '\n'
    << "theta = " << join(cfg.theta_list, [](double t) { return format_double(t); }) << '\n'
    << "mu = " << format_double(cfg.mu) << '\n'
    << "patch-threshold = " << (cfg.patch_threshold ? std::to_string(*cfg.patch_threshold) : "default") << '\n'
    << "precond = " << join(cfg.preconditioners, [](const std::string& s) { return s; }) << '\n'
    << "restart = " << cfg.gmres.restart << '\n'
    << "tol = " << format_double(cfg.gmres.tol) << '\n'
    << "maxit = " << cfg.gmres.maxit << '\n'
    << "solve-tol = " << format_double(cfg.solve_tol) << '\n'
    << "direct-limit = " << cfg.direct_limit << '\n'
    << "dg-max-dofs = " << cfg.dg_max_dofs << '\n'
    << "dense-cond-limit = " << cfg.dense_cond_limit << '\n'
    << "mg-coarse-min = " << cfg.mg_coarse_min << '\n'
    << "pre-sweeps = " << cfg.mg.pre_sweeps << '\n'
    << "post-sweeps = " << cfg.mg.post_sweeps << '\n'
    << "corrections = " << cfg.mg.corrections << '\n'
    << "allow-min-norm = " << b(cfg.allow_min_norm) << '\n'
    << "svg = " << b(cfg.svg) << '\n'
    << "timing = " << b(cfg.record_times) << '\n'
    << "out = " << cfg.out_dir.string() << '\n';
  if (!cfg.dump_matrix.empty()) o << "dump-matrix = " << cfg.dump_matrix.string() << '\n';
  if (!cfg.dump_recon.empty()) o << "dump-recon = " << cfg.dump_recon.string() << '\n';
  return o.str();
}

std::vector<Level> build_levels(const ExperimentConfig& cfg, const EllipticProblem& prob) {
  std::vector<Level> levels;
  if (!cfg.mesh_files.empty()) {
    for (const auto& f : cfg.mesh_files) {
      Level l;
      l.hierarchy.push_back(import_poly_mesh(f));
      l.h = l.mesh().max_diameter();
      levels.push_back(std::move(l));
    }
    return levels;
  }
  const int coarse_min = cfg.mg_coarse_min > 0 ? cfg.mg_coarse_min : (cfg.dim == 2 ? 8 : 2);
  for (double h : cfg.effective_h()) {
    const int n = grid_n(prob.domain, h);
    int n0 = n, count = 1;
    while (n0 % 2 == 0 && n0 / 2 >= coarse_min) {
      n0 /= 2;
      ++count;
    }
    levels.push_back({h, nested_structured_meshes(cfg.dim, prob.domain, n0, count)});
  }
  return levels;
}

std::unique_ptr<Preconditioner> make_preconditioner(const std::string& id, const CSRMatrix& A, const Level& level,
                                                    const ExperimentConfig& cfg) {
  if (id == "a0-mg") return std::make_unique<MultigridPreconditioner>(std::make_shared<MGHierarchy>(build_mg(level.hierarchy, cfg.mg)));
  if (id == "a0-direct") return std::make_unique<DirectPreconditioner>(assemble_a0(level.mesh()).A, true, "a0-direct");
  if (id == "jacobi") return std::make_unique<JacobiPreconditioner>(A);
  if (id == "ilu0") return std::make_unique<Ilu0Preconditioner>(A);
  if (id == "none") return std::make_unique<IdentityPreconditioner>(A.rows());
  throw std::invalid_argument("precond: unknown '" + id + "'");
}

std::vector<ConvergenceResult> run_convergence(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto levels = build_levels(cfg, make_problem(cfg.problem, cfg.dim));
  std::vector<ConvergenceResult> results;
  bool dumped = false;
  for (double theta : cfg.theta_list) {
    const auto prob = problem_for(cfg, theta);
    for (int m : cfg.m_list) {
      ConvergenceResult res;
      res.m = m;
      res.theta = theta;
      res.report.label = "rda m=" + std::to_string(m);
      for (const auto& level : levels) {
        const auto t0 = Clock::now();
        const Mesh& mesh = level.mesh();
        const auto d = discretize(cfg, mesh, m, res.warnings);
        const BrokenSpace space(mesh, m);
        const auto sys = assemble_rda(space, d.R, prob);
        dump_once(cfg, dumped, sys.A, d.R);
        const auto sol = solve_level(sys.A, sys.b, level, theta < 0, cfg, res.warnings);
        const auto err = error_norms(space, &d.R, {sol.x.data(), static_cast<std::size_t>(sol.x.size())}, prob);
        const auto n_e = static_cast<long long>(mesh.num_elements());
        res.report.rows.push_back({level.h, n_e, n_e, err.l2, err.energy, err.energy_tilde, sol.iterations,
                                   cfg.record_times ? seconds_since(t0) : 0.0});
        log(cfg, "convergence m=" + std::to_string(m) + " theta=" + format_double(theta) + " h=" + format_h(level.h) +
                     " l2=" + format_double(err.l2));
      }
      results.push_back(std::move(res));
    }
  }
  return results;
}

std::optional<double> dof_ratio_at_equal_error(const ConvergenceReport& a, const ConvergenceReport& b,
                                               bool* extrapolated) {
  if (extrapolated) *extrapolated = false;
  if (a.rows.size() < 2 || b.rows.empty()) return std::nullopt;
  auto interp = [&](std::size_t i, double le) {
    const double e0 = std::log(a.rows[i].l2), e1 = std::log(a.rows[i + 1].l2);
    const double d0 = std::log(static_cast<double>(a.rows[i].dofs)), d1 = std::log(static_cast<double>(a.rows[i + 1].dofs));
    return std::exp(d0 + (le - e0) * (d1 - d0) / (e1 - e0));
  };
  for (auto it = b.rows.rbegin(); it != b.rows.rend(); ++it) {
    if (!(it->l2 > 0)) continue;
    const double le = std::log(it->l2);
    for (std::size_t i = 0; i + 1 < a.rows.size(); ++i) {
      const double lo = std::min(a.rows[i].l2, a.rows[i + 1].l2), hi = std::max(a.rows[i].l2, a.rows[i + 1].l2);
      if (lo > 0 && it->l2 >= lo && it->l2 <= hi && lo < hi) return interp(i, le) / static_cast<double>(it->dofs);
    }
  }
  const auto& last = b.rows.back();
  const std::size_t i = a.rows.size() - 2;
  if (!(last.l2 > 0 && a.rows[i].l2 > 0 && a.rows[i + 1].l2 > 0 && a.rows[i].l2 != a.rows[i + 1].l2))
    return std::nullopt;
  if (extrapolated) *extrapolated = true;
  return interp(i, std::log(last.l2)) / static_cast<double>(last.dofs);
}

std::vector<DgCompareResult> run_dg_compare(const ExperimentConfig& cfg) {
  cfg.validate();
  const double theta = cfg.theta_list.front();
  const auto prob = problem_for(cfg, theta);
  const auto levels = build_levels(cfg, prob);
  std::vector<DgCompareResult> results;
  bool dumped = false;
  for (int m : cfg.m_list) {
    DgCompareResult res;
    res.m = m;
    res.rda.label = "rda m=" + std::to_string(m);
    res.dg.label = "dg m=" + std::to_string(m);
    for (const auto& level : levels) {
      const Mesh& mesh = level.mesh();
      const BrokenSpace space(mesh, m);
      const auto n_e = static_cast<long long>(mesh.num_elements());
      {
        const auto t0 = Clock::now();
        const auto d = discretize(cfg, mesh, m, res.warnings);
        const auto sys = assemble_rda(space, d.R, prob);
        dump_once(cfg, dumped, sys.A, d.R);
        const auto sol = solve_level(sys.A, sys.b, level, theta < 0, cfg, res.warnings);
        const auto err = error_norms(space, &d.R, {sol.x.data(), static_cast<std::size_t>(sol.x.size())}, prob);
        res.rda.rows.push_back({level.h, n_e, n_e, err.l2, err.energy, err.energy_tilde, sol.iterations,
                                cfg.record_times ? seconds_since(t0) : 0.0});
      }
      const long long dg_dofs = n_e * space.num_basis();
      if (dg_dofs > cfg.dg_max_dofs) {
        res.warnings.push_back("dg m=" + std::to_string(m) + " h=" + format_h(level.h) + " skipped: " +
                               std::to_string(dg_dofs) + " dofs above dg-max-dofs");
        continue;
      }
      const auto t0 = Clock::now();
      const auto sys = assemble_dg(space, prob);
      const Eigen::VectorXd x = direct_solve(sys.A, sys.b, theta < 0);
      const auto err = error_norms(space, nullptr, {x.data(), static_cast<std::size_t>(x.size())}, prob);
      res.dg.rows.push_back({level.h, n_e, dg_dofs, err.l2, err.energy, err.energy_tilde, 0,
                             cfg.record_times ? seconds_since(t0) : 0.0});
      log(cfg, "dg-compare m=" + std::to_string(m) + " h=" + format_h(level.h) + " rda l2=" +
                   format_double(res.rda.rows.back().l2) + " dg l2=" + format_double(err.l2));
    }
    res.dof_ratio = dof_ratio_at_equal_error(res.rda, res.dg, &res.ratio_extrapolated);
    results.push_back(std::move(res));
  }
  return results;
}

std::vector<ConditionRow> run_condition(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto levels = build_levels(cfg, make_problem(cfg.problem, cfg.dim));
  std::vector<ConditionRow> rows;
  std::vector<std::string> warnings;
  for (int m : cfg.m_list)
    for (double theta : cfg.theta_list) {
      const auto prob = problem_for(cfg, theta);
      const ConditionRow* prev = nullptr;
      std::size_t prev_index = 0;
      for (const auto& level : levels) {
        const Mesh& mesh = level.mesh();
        const auto d = discretize(cfg, mesh, m, warnings);
        AssemblyOptions opts;
        opts.with_rhs = false;
        const auto A = assemble_rda(BrokenSpace(mesh, m), d.R, prob, FormWeights::full(theta, cfg.mu), opts).A;
        const auto A0 = assemble_a0(mesh).A;
        const auto mode = A.rows() <= cfg.dense_cond_limit ? CondMode::dense : CondMode::iterative;
        const auto k = condition_estimate(A, nullptr, mode, cfg.dense_cond_limit);
        const auto kp = condition_estimate(A, &A0, mode, cfg.dense_cond_limit, CondNorm::energy);
        const auto kl = condition_estimate(A, &A0, mode, cfg.dense_cond_limit, CondNorm::euclidean);
        const bool converged = k.converged && kp.converged && kl.converged;
        ConditionRow row{m, theta, level.h, static_cast<int>(mesh.num_elements()), k.kappa, kp.kappa, 0.0, 0.0,
                         mode == CondMode::dense ? "dense" : (converged ? "iterative" : "iterative-unconverged"),
                         kl.kappa};
        if (prev) {
          row.kappa_ratio = row.kappa / prev->kappa;
          row.kappa_prec_ratio = row.kappa_prec / prev->kappa_prec;
        }
        rows.push_back(row);
        prev_index = rows.size() - 1;
        prev = &rows[prev_index];
        log(cfg, "condition m=" + std::to_string(m) + " theta=" + format_double(theta) + " h=" + format_h(level.h) +
                     " kappa=" + format_double(row.kappa) + " kappa_prec=" + format_double(row.kappa_prec));
      }
    }
  return rows;
}

std::vector<BenchRow> run_precond_bench(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto levels = build_levels(cfg, make_problem(cfg.problem, cfg.dim));
  std::vector<BenchRow> rows;
  std::vector<std::string> warnings;
  bool dumped = false;
  for (const auto& level : levels) {
    const Mesh& mesh = level.mesh();
    for (int m : cfg.m_list) {
      const auto d = discretize(cfg, mesh, m, warnings);
      const BrokenSpace space(mesh, m);
      for (double theta : cfg.theta_list) {
        const auto sys = assemble_rda(space, d.R, problem_for(cfg, theta));
        dump_once(cfg, dumped, sys.A, d.R);
        for (const auto& id : cfg.preconditioners) {
          const auto t0 = Clock::now();
          const auto M = make_preconditioner(id, sys.A, level, cfg);
          const auto r = gmres(sys.A, {sys.b.data(), static_cast<std::size_t>(sys.b.size())}, *M, cfg.gmres);
          rows.push_back({m, theta, level.h, static_cast<int>(mesh.num_elements()), id, r.stats.iterations,
                          r.stats.converged, r.stats.relres, cfg.record_times ? seconds_since(t0) : 0.0});
          log(cfg, "precond-bench m=" + std::to_string(m) + " theta=" + format_double(theta) + " h=" +
                       format_h(level.h) + " " + id + " iters=" + std::to_string(r.stats.iterations) +
                       (r.stats.converged ? "" : " (not converged)"));
        }
      }
    }
  }
  return rows;
}

std::string version_string() { return RDA_VERSION_STRING; }

void write_manifest(const ExperimentConfig& cfg, const std::filesystem::path& path,
                    const std::vector<std::string>& outputs, const std::vector<std::string>& notes) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  out << "# rda experiment manifest\n"
      << "# version: " << version_string() << '\n'
      << "# mesh: ";
  if (cfg.mesh_files.empty())
    out << "h is the structured grid spacing; the box is split into (width/h)^dim "
        << (cfg.dim == 2 ? "squares, each cut along the lower-left to upper-right diagonal"
                         : "cubes, each cut into six Kuhn tetrahedra")
        << ", built by red refinement from the coarsest grid with n >= "
        << (cfg.mg_coarse_min > 0 ? cfg.mg_coarse_min : (cfg.dim == 2 ? 8 : 2)) << " subdivisions\n";
  else
    out << "imported polygonal meshes; h is the largest element diameter\n";
  out << "# patch thresholds: " << (cfg.patch_threshold ? "fixed " + std::to_string(*cfg.patch_threshold) : "defaults")
      << ", vertex-adjacency rings, no trimming\n";
  for (const auto& o : outputs) out << "# output: " << o << '\n';
  for (const auto& n : notes) out << "# note: " << n << '\n';
  out << config_text(cfg);
}

std::string run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  std::vector<std::string> outputs, notes;
  std::ostringstream summary;
  summary << std::setprecision(4);
  auto out_path = [&](const std::string& name) {
    outputs.push_back(name);
    return cfg.out_dir / name;
  };

  switch (cfg.experiment) {
    case ExperimentKind::convergence: {
      const auto results = run_convergence(cfg);
      std::vector<PlotSeries> series;
      summary << "m  theta  order(l2)  order(energy)  order(energy~)\n";
      for (const auto& r : results) {
        write_csv(r.report, out_path("convergence_m" + std::to_string(r.m) + "_" + theta_tag(r.theta) + ".csv"));
        const auto o = r.report.orders();
        auto fmt = [](const std::optional<OrderFit>& f) {
          if (!f) return std::string("-");
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.2f%s", f->order, f->flagged() ? "*" : "");
          return std::string(buf);
        };
        summary << r.m << "  " << std::setw(5) << r.theta << "  " << fmt(o.l2) << "  " << fmt(o.energy) << "  "
                << fmt(o.energy_tilde) << '\n';
        PlotSeries s{"m=" + std::to_string(r.m) + " " + theta_tag(r.theta), {}, {}};
        for (const auto& row : r.report.rows) {
          s.x.push_back(static_cast<double>(row.dofs));
          s.y.push_back(row.l2);
        }
        series.push_back(std::move(s));
        notes.insert(notes.end(), r.warnings.begin(), r.warnings.end());
      }
      if (cfg.svg) write_svg(series, out_path("convergence.svg"), "L2 error", "degrees of freedom", "L2 error");
      break;
    }
    case ExperimentKind::dg_compare: {
      const auto results = run_dg_compare(cfg);
      std::vector<PlotSeries> series;
      std::ofstream ratio(out_path("dg_compare_ratio.csv"));
      ratio << "m,dof_ratio,extrapolated\n";
      summary << "m  dofs(RDA)/dofs(DG) at equal L2 error\n";
      for (const auto& r : results) {
        write_csv(r.rda, out_path("dg_compare_m" + std::to_string(r.m) + "_rda.csv"));
        write_csv(r.dg, out_path("dg_compare_m" + std::to_string(r.m) + "_dg.csv"));
        ratio << r.m << ',' << (r.dof_ratio ? format_double(*r.dof_ratio) : "") << ','
              << (r.ratio_extrapolated ? 1 : 0) << '\n';
        char pct[32];
        std::snprintf(pct, sizeof pct, "%.1f%%", r.dof_ratio ? *r.dof_ratio * 100 : 0.0);
        summary << r.m << "  " << (r.dof_ratio ? std::string(pct) : "-")
                << (r.ratio_extrapolated ? " (extrapolated)" : "") << '\n';
        for (const auto* rep : {&r.rda, &r.dg}) {
          PlotSeries s{rep->label, {}, {}};
          for (const auto& row : rep->rows) {
            s.x.push_back(static_cast<double>(row.dofs));
            s.y.push_back(row.l2);
          }
          series.push_back(std::move(s));
        }
        notes.insert(notes.end(), r.warnings.begin(), r.warnings.end());
      }
      if (cfg.svg) write_svg(series, out_path("dg_compare.svg"), "RDA vs DG", "degrees of freedom", "L2 error");
      break;
    }
    case ExperimentKind::condition: {
      const auto rows = run_condition(cfg);
      std::ofstream csv(out_path("condition.csv"));
      csv << "m,theta,h,n_e,kappa,kappa_prec,kappa_ratio,kappa_prec_ratio,mode,kappa_prec_l2\n";
      summary << "m  theta  h  kappa(A)  kappa(A0^-1 A)\n";
      for (const auto& r : rows) {
        csv << r.m << ',' << format_double(r.theta) << ',' << format_double(r.h) << ',' << r.n_e << ','
            << format_double(r.kappa) << ',' << format_double(r.kappa_prec) << ',' << format_double(r.kappa_ratio)
            << ',' << format_double(r.kappa_prec_ratio) << ',' << r.mode << ','
            << format_double(r.kappa_prec_l2) << '\n';
        summary << r.m << "  " << std::setw(5) << r.theta << "  " << format_h(r.h) << "  " << r.kappa << "  "
                << r.kappa_prec << '\n';
      }
      notes.push_back("kappa is sigma_max / sigma_min");
      notes.push_back("kappa_prec is measured in the A0 inner product, kappa_prec_l2 in the l2 norm");
      break;
    }
    case ExperimentKind::precond_bench: {
      const auto rows = run_precond_bench(cfg);
      {
        std::ofstream csv(out_path("precond_bench.csv"));
        csv << "m,theta,h,n_e,precond,iterations,converged,relres,seconds\n";
        for (const auto& r : rows)
          csv << r.m << ',' << format_double(r.theta) << ',' << format_double(r.h) << ',' << r.n_e << ',' << r.precond
              << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << format_double(r.relres) << ','
              << format_double(r.seconds) << '\n';
      }
      std::vector<double> hs;
      for (const auto& r : rows)
        if (std::find(hs.begin(), hs.end(), r.h) == hs.end()) hs.push_back(r.h);
      std::ofstream table(out_path("precond_table.csv"));
      table << "precond,m,theta";
      summary << "precond  m  theta";
      for (double h : hs) {
        table << ",h=" << format_h(h);
        summary << "  " << format_h(h);
      }
      table << '\n';
      summary << '\n';
      for (const auto& id : cfg.preconditioners)
        for (int m : cfg.m_list)
          for (double theta : cfg.theta_list) {
            table << id << ',' << m << ',' << format_double(theta);
            summary << id << "  " << m << "  " << std::setw(2) << theta;
            for (double h : hs) {
              std::string cell;
              for (const auto& r : rows)
                if (r.precond == id && r.m == m && r.theta == theta && r.h == h)
                  cell = std::to_string(r.iterations) + (r.converged ? "" : "+");
              table << ',' << cell;
              summary << "  " << cell;
            }
            table << '\n';
            summary << '\n';
          }
      notes.push_back("iterations are GMRES steps to the true relative residual tol; '+' marks non-convergence at maxit");
      break;
    }
  }
  write_manifest(cfg, cfg.out_dir / "manifest.txt", outputs, notes);
  for (const auto& n : notes) summary << "note: " << n << '\n';
  return summary.str();
}

}  // namespace rda
