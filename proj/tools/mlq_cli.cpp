// mlq: batch runner for multilevel quadrature studies.
//
//   mlq run --config study.ini [--seed N] [--out DIR] [--force]
//   mlq reference --config study.ini [--seed N] [--out DIR] [--force]
//   mlq mesh [--config study.ini] [--domain unit_disk] [--level L] [--seed N] [--out FILE]
//   mlq rule --family qmc --level L [--dim M] [--difference] [--seed N] [--out FILE]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>

#include "mlq/estimator.hpp"
#include "mlq/quad.hpp"
#include "mlq/study.hpp"

namespace {

constexpr int kConfigExit = 2;
constexpr int kNumericalExit = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool force = false;
  std::string domain;
  int level = 0;
  std::string family = "qmc";
  std::size_t dim = 0;
  bool difference = false;
};

mlq::RunConfig load(const Options& o) {
  mlq::RunConfig cfg = o.config.empty() ? mlq::RunConfig{} : mlq::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.out = o.out;
  return cfg;
}

// Writes to the named file, or stdout for "" and "-".
template <typename Fn>
void emit(const std::string& path, Fn&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream os(path);
  if (!os) throw mlq::ConfigError("cannot write " + path);
  write(os);
}

int cmd_run(const Options& o) {
  const auto cfg = load(o);
  const auto summary = mlq::run_convergence_study(cfg, o.force, &std::cerr);
  for (const auto& f : summary.files) std::cout << f.string() << '\n';
  if (summary.failures > 0) {
    std::cerr << summary.failures << " cell(s) failed; see " << (cfg.out / "run.log").string()
              << '\n';
    return kNumericalExit;
  }
  return 0;
}

int cmd_reference(const Options& o) {
  const auto cfg = load(o);
  for (const auto& f : mlq::generate_reference(cfg, o.force, &std::cerr)) {
    std::cout << f.string() << '\n';
  }
  return 0;
}

int cmd_mesh(const Options& o) {
  auto cfg = load(o);
  if (!o.domain.empty()) cfg.problem.domain = mlq::parse_domain(o.domain);
  if (o.level < 0) throw mlq::ConfigError("--level must be >= 0");
  const double h = cfg.problem.h0 * std::ldexp(1.0, -o.level);
  const auto mesh = mlq::generate_mesh(cfg.problem.domain, h,
                                       mlq::Hierarchy::mesh_seed(cfg.seed, o.level), o.level);
  const std::vector<std::string> comments = {
      "domain " + std::string(mlq::to_string(cfg.problem.domain)),
      "level " + std::to_string(o.level) + " h_target " + std::to_string(h) + " h_measured " +
          std::to_string(mesh.h_measured()),
      "seed " + std::to_string(cfg.seed)};
  emit(o.out, [&](std::ostream& os) { mlq::write_mesh(os, mesh, nullptr, comments); });
  return 0;
}

int cmd_rule(const Options& o) {
  const auto cfg = load(Options{o.config, o.seed, "", false, "", 0, "", 0, false});
  const auto family = mlq::parse_family(o.family);
  const std::size_t m = o.dim > 0 ? o.dim : cfg.problem.dimension();
  const auto rule = o.difference ? mlq::difference_rule(family, o.level, m, cfg.seed)
                                 : mlq::make_rule(family, o.level, m, cfg.seed);
  emit(o.out, [&](std::ostream& os) { mlq::write_rule_csv(os, rule); });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilevel quadrature on non-nested finite element meshes"};
  app.require_subcommand(1);
  Options o;

  const auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", o.config, "run configuration file");
    if (config_required) c->required();
    c->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "override the configured seed");
  };

  auto* run = app.add_subcommand("run", "convergence study over j_min..j_max");
  add_common(run, true);
  run->add_option("--out", o.out, "output directory");
  run->add_flag("--force", o.force, "regenerate cached references");

  auto* ref = app.add_subcommand("reference", "generate the reference statistics");
  add_common(ref, true);
  ref->add_option("--out", o.out, "output directory");
  ref->add_flag("--force", o.force, "overwrite existing reference files");

  auto* mesh = app.add_subcommand("mesh", "export one generated mesh level");
  add_common(mesh, false);
  mesh->add_option("--domain", o.domain, "unit_disk or unit_square");
  mesh->add_option("--level", o.level, "mesh level (h = h0 * 2^-level)");
  mesh->add_option("--out", o.out, "output file, '-' for stdout");

  auto* rule = app.add_subcommand("rule", "export a quadrature rule as CSV");
  add_common(rule, false);
  rule->add_option("--family", o.family, "mc, qmc or cc");
  rule->add_option("--level", o.level, "quadrature level")->check(CLI::NonNegativeNumber);
  rule->add_option("--dim", o.dim, "parameter dimension (default: from the problem)");
  rule->add_flag("--difference", o.difference, "export Q_level - Q_{level-1}");
  rule->add_option("--out", o.out, "output file, '-' for stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    if (*run) return cmd_run(o);
    if (*ref) return cmd_reference(o);
    if (*mesh) return cmd_mesh(o);
    if (*rule) return cmd_rule(o);
  } catch (const mlq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const mlq::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumericalExit;
  } catch (const mlq::MeshError& e) {
    std::cerr << "mesh error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
