#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "rda/experiments.hpp"
#include "rda/recon.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Reconstructed discontinuous approximation experiments"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", rda::version_string());

  std::string config_path;
  app.add_option("--config", config_path, "key = value file; flags given on the command line override it")
      ->check(CLI::ExistingFile);

  struct Valued {
    const char* key;
    const char* help;
  };
  const std::vector<Valued> valued{
      {"experiment", "convergence | dg-compare | condition | precond-bench"},
      {"dim", "2 or 3"},
      {"problem", "example1..example7 or manufactured:poly<k>"},
      {"h", "grid spacings, descending, e.g. 1/10,1/20,1/40"},
      {"m", "reconstruction degrees, e.g. 1,2,3"},
      {"theta", "-1 (symmetric) and/or 1 (nonsymmetric)"},
      {"mu", "penalty parameter (default 15)"},
      {"precond", "a0-mg,a0-direct,jacobi,ilu0,none"},
      {"patch-threshold", "patch size #S overriding the default table"},
      {"mesh-file", "POLYMESH 2 files, coarse to fine, comma separated"},
      {"out", "output directory"},
      {"restart", "GMRES restart length"},
      {"tol", "GMRES true relative residual tolerance"},
      {"maxit", "GMRES iteration limit"},
      {"solve-tol", "GMRES tolerance for convergence solves above direct-limit"},
      {"direct-limit", "largest n_e solved directly in convergence runs"},
      {"dg-max-dofs", "largest standard DG system assembled by dg-compare"},
      {"dense-cond-limit", "largest system for dense condition numbers"},
      {"mg-coarse-min", "smallest coarse grid n of the multigrid hierarchy"},
      {"pre-sweeps", "Gauss-Seidel sweeps before the coarse correction"},
      {"post-sweeps", "Gauss-Seidel sweeps after the coarse correction"},
      {"corrections", "coarse corrections per level"},
      {"dump-matrix", "write the first assembled system as Matrix Market"},
      {"dump-recon", "write the first reconstruction operator as Matrix Market"},
  };
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;
  for (const auto& v : valued) options.emplace_back(v.key, app.add_option(std::string("--") + v.key, values[v.key], v.help));

  bool svg = false, allow_min_norm = false, no_timing = false, quiet = false, print_config = false;
  auto* svg_opt = app.add_flag("--svg", svg, "write a log-log SVG plot");
  auto* mn_opt = app.add_flag("--allow-min-norm", allow_min_norm,
                              "warn instead of failing when a patch is not unisolvent");
  auto* nt_opt = app.add_flag("--no-timing", no_timing, "write 0 for wall times");
  auto* q_opt = app.add_flag("--quiet", quiet, "no progress output");
  app.add_flag("--print-config", print_config, "print the resolved configuration and exit");

  CLI11_PARSE(app, argc, argv);

  rda::ExperimentConfig cfg;
  try {
    if (!config_path.empty()) cfg = rda::load_config(config_path);
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) rda::apply_setting(cfg, key, values[key]);
    if (svg_opt->count() > 0) cfg.svg = true;
    if (mn_opt->count() > 0) cfg.allow_min_norm = true;
    if (nt_opt->count() > 0) cfg.record_times = false;
    if (q_opt->count() > 0) cfg.quiet = true;
    cfg.validate();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "rda: invalid configuration: %s\n", e.what());
    return 2;
  }

  if (print_config) {
    std::cout << rda::config_text(cfg);
    return 0;
  }

  try {
    std::cout << rda::run_experiment(cfg);
    std::cout << "outputs written to " << cfg.out_dir.string() << '\n';
  } catch (const rda::UnisolvenceError& e) {
    std::fprintf(stderr, "rda: %s (rerun with --allow-min-norm to continue with minimum-norm fits)\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "rda: %s\n", e.what());
    return 1;
  }
  return 0;
}
