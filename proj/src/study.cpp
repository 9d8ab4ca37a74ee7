#include "mlq/study.hpp"

#include <chrono>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "text.hpp"

namespace mlq {

namespace {

struct Located {
  std::string value;
  int line = 0;
};

std::string where(const std::string& origin, int line) {
  return origin + ":" + std::to_string(line) + ": ";
}

template <typename Int>
Int parse_int(const Located& v, const std::string& origin, const std::string& key) {
  Int out{};
  const auto s = detail::trim(v.value);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError(where(origin, v.line) + key + " expects an integer, got '" + v.value + "'");
  }
  return out;
}

double parse_real(const Located& v, const std::string& origin, const std::string& key) {
  double out{};
  const auto s = detail::trim(v.value);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError(where(origin, v.line) + key + " expects a number, got '" + v.value + "'");
  }
  return out;
}

bool parse_bool(const Located& v, const std::string& origin, const std::string& key) {
  const auto s = detail::trim(v.value);
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  throw ConfigError(where(origin, v.line) + key + " expects true or false");
}

template <typename T, typename Parse>
std::vector<T> parse_list(const Located& v, const std::string& origin, const std::string& key,
                          Parse parse) {
  std::vector<T> out;
  for (const auto& item : detail::split(v.value, ',')) {
    if (item.empty()) throw ConfigError(where(origin, v.line) + "empty entry in " + key);
    try {
      const T t = parse(item);
      if (std::find(out.begin(), out.end(), t) != out.end()) {
        throw ConfigError("duplicate entry '" + item + "'");
      }
      out.push_back(t);
    } catch (const std::exception& e) {
      throw ConfigError(where(origin, v.line) + key + ": " + e.what());
    }
  }
  return out;
}

const std::map<std::string, std::set<std::string>> kSchema = {
    {"problem", {"name", "domain", "source", "h0"}},
    {"coefficient", {"phi0", "term"}},
    {"run",
     {"families", "representations", "moments", "j_min", "j_max", "replicates", "seed",
      "reference_offset", "threads", "timing", "out"}},
};

std::string coefficient_signature(const Coefficient& coeff) {
  if (const auto* rc = std::get_if<ReciprocalProductCoefficient>(&coeff)) {
    return "reciprocal_product m=" + std::to_string(rc->dimension());
  }
  const auto& a = std::get<AffineCoefficient>(coeff);
  std::string s = "phi0 " + a.mean().to_string();
  for (const auto& t : a.terms()) s += " ; term " + t.to_string();
  return s;
}

std::vector<std::string> provenance(const RunConfig& config, const Hierarchy& hierarchy, int p) {
  const auto& prob = config.problem;
  const int lref = hierarchy.reference_level();
  std::vector<std::string> lines = {
      "reference statistic, moment p=" + std::to_string(p),
      "problem " + prob.name,
      "domain " + std::string(to_string(prob.domain)),
      "coefficient " + coefficient_signature(prob.coeff),
      "source " + prob.source.to_string(),
      "h0 " + detail::fmt17(prob.h0),
      "seed " + std::to_string(config.seed),
      "reference_level " + std::to_string(lref),
  };
  if (prob.name == "analytic_disk") {
    lines.push_back("method exact nodal values");
  } else {
    lines.push_back("method single-level qmc rule_level " + std::to_string(lref + 1) + " nodes " +
                    std::to_string(sample_count(Family::qmc_halton, lref + 1)));
  }
  return lines;
}

class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, const std::string& header) : os_(path) {
    if (!os_) throw ConfigError("cannot write " + path.string());
    os_ << header << '\n';
    os_.flush();
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << '\n';
    os_.flush();
  }

 private:
  std::ofstream os_;
};

std::string num(double v) { return detail::fmt17(v); }
std::string num(std::size_t v) { return std::to_string(v); }

// Loads a cached reference when present and consistent; otherwise computes
// and writes it. Returns fields in `moments` order.
std::vector<ScalarField> obtain_references(const RunConfig& config, const Hierarchy& hierarchy,
                                           bool force, std::ostream& log) {
  std::vector<ScalarField> out(config.moments.size());
  std::vector<int> missing;
  for (std::size_t q = 0; q < config.moments.size(); ++q) {
    const int p = config.moments[q];
    const auto path = reference_path(config.out, p);
    if (!std::filesystem::exists(path)) {
      missing.push_back(p);
      continue;
    }
    if (force) {
      missing.push_back(p);
      continue;
    }
    std::ifstream is(path);
    MeshFile file = read_mesh(is);
    if (file.comments != provenance(config, hierarchy, p) || !file.field ||
        !file.mesh->same_as(*hierarchy.reference_mesh())) {
      throw ConfigError(path.string() +
                        " was produced by a different configuration; rerun with --force");
    }
    log << "reference p=" << p << ": reusing " << path.string() << '\n';
    out[q] = {hierarchy.reference_mesh(), std::move(*file.field)};
  }
  if (!missing.empty()) {
    auto computed = compute_references(config, hierarchy, missing);
    for (auto& ref : computed) {
      const auto path = reference_path(config.out, ref.moment);
      std::ofstream os(path);
      write_mesh(os, *ref.field.mesh, &ref.field.values, ref.provenance);
      if (!os) throw ConfigError("cannot write " + path.string());
      log << "reference p=" << ref.moment << ": wrote " << path.string() << '\n';
      const auto it = std::find(config.moments.begin(), config.moments.end(), ref.moment);
      out[static_cast<std::size_t>(it - config.moments.begin())] = std::move(ref.field);
    }
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  if (j_min < 0 || j_max < j_min) throw ConfigError("need 0 <= j_min <= j_max");
  if (j_max > 12) throw ConfigError("j_max above 12 is beyond desk scale");
  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  if (reference_offset < 1) throw ConfigError("reference_offset must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (families.empty()) throw ConfigError("families must not be empty");
  if (representations.empty()) throw ConfigError("representations must not be empty");
  if (moments.empty()) throw ConfigError("moments must not be empty");
  for (int p : moments) {
    if (p != 1 && p != 2) throw ConfigError("moments must be 1 or 2");
  }
  if (!(problem.h0 > 0.0) || problem.h0 > 1.0) throw ConfigError("h0 must lie in (0, 1]");
  const std::size_t m = problem.dimension();
  if (m == 0) throw ConfigError("the coefficient needs at least one parametric term");
  if (m > kMaxHaltonDimension) {
    throw ConfigError("at most " + std::to_string(kMaxHaltonDimension) + " parametric terms");
  }
}

RunConfig parse_config(std::istream& is, const std::string& origin) {
  std::map<std::string, std::map<std::string, Located>> values;
  std::vector<Located> terms;
  std::string section;
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    std::string_view text = raw;
    if (const auto hash = text.find_first_of("#;"); hash != std::string_view::npos) {
      text = text.substr(0, hash);
    }
    text = detail::trim(text);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError(where(origin, line) + "malformed section header");
      section = std::string(detail::trim(text.substr(1, text.size() - 2)));
      if (!kSchema.count(section)) {
        throw ConfigError(where(origin, line) + "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where(origin, line) + "expected key = value");
    if (section.empty()) throw ConfigError(where(origin, line) + "key outside of any section");
    const std::string key(detail::trim(text.substr(0, eq)));
    const std::string value(detail::trim(text.substr(eq + 1)));
    if (!kSchema.at(section).count(key)) {
      throw ConfigError(where(origin, line) + "unknown key '" + key + "' in [" + section + "]");
    }
    if (section == "coefficient" && key == "term") {
      terms.push_back({value, line});
      continue;
    }
    if (values[section].count(key)) {
      throw ConfigError(where(origin, line) + "duplicate key '" + key + "'");
    }
    values[section][key] = {value, line};
  }

  RunConfig cfg;
  const auto get = [&](const std::string& s, const std::string& k) -> const Located* {
    const auto it = values.find(s);
    if (it == values.end()) return nullptr;
    const auto kt = it->second.find(k);
    return kt == it->second.end() ? nullptr : &kt->second;
  };

  const Located* name = get("problem", "name");
  const std::string problem_name = name ? name->value : "analytic_disk";
  const bool custom = problem_name == "custom";
  if (problem_name == "analytic_disk") {
    cfg.problem = analytic_disk_problem();
  } else if (problem_name == "sinusoidal_square") {
    cfg.problem = sinusoidal_square_problem();
  } else if (!custom) {
    throw ConfigError(where(origin, name->line) + "unknown problem '" + problem_name + "'");
  }
  if (!custom) {
    for (const char* k : {"domain", "source"}) {
      if (const auto* v = get("problem", k)) {
        throw ConfigError(where(origin, v->line) + k +
                          " can only be set for name = custom");
      }
    }
    if (values.count("coefficient") || !terms.empty()) {
      throw ConfigError(origin + ": [coefficient] can only be used with name = custom");
    }
  } else {
    cfg.problem.name = "custom";
    const auto* dom = get("problem", "domain");
    if (!dom) throw ConfigError(origin + ": custom problems need a domain");
    try {
      cfg.problem.domain = parse_domain(dom->value);
    } catch (const std::exception& e) {
      throw ConfigError(where(origin, dom->line) + e.what());
    }
    try {
      const auto* src = get("problem", "source");
      cfg.problem.source = parse_spatial_function(src ? src->value : "1");
      const auto* phi0 = get("coefficient", "phi0");
      SpatialFunction mean = parse_spatial_function(phi0 ? phi0->value : "1");
      std::vector<SpatialFunction> fns;
      for (const auto& t : terms) {
        try {
          fns.push_back(parse_spatial_function(t.value));
        } catch (const CoefficientError& e) {
          throw ConfigError(where(origin, t.line) + e.what());
        }
      }
      if (fns.empty()) throw ConfigError(origin + ": custom problems need at least one term");
      AffineCoefficient coeff(std::move(mean), std::move(fns));
      certify_ellipticity(coeff, cfg.problem.domain, 64);
      cfg.problem.coeff = std::move(coeff);
    } catch (const CoefficientError& e) {
      throw ConfigError(origin + ": " + e.what());
    }
  }
  if (const auto* v = get("problem", "h0")) cfg.problem.h0 = parse_real(*v, origin, "h0");

  if (const auto* v = get("run", "families")) {
    cfg.families = parse_list<Family>(*v, origin, "families", parse_family);
  }
  if (const auto* v = get("run", "representations")) {
    cfg.representations =
        parse_list<Representation>(*v, origin, "representations", parse_representation);
  }
  if (const auto* v = get("run", "moments")) {
    cfg.moments = parse_list<int>(*v, origin, "moments", [&](const std::string& s) {
      return parse_int<int>({s, v->line}, origin, "moments");
    });
  }
  if (const auto* v = get("run", "j_min")) cfg.j_min = parse_int<int>(*v, origin, "j_min");
  if (const auto* v = get("run", "j_max")) cfg.j_max = parse_int<int>(*v, origin, "j_max");
  if (const auto* v = get("run", "replicates")) {
    cfg.replicates = parse_int<int>(*v, origin, "replicates");
  }
  if (const auto* v = get("run", "seed")) cfg.seed = parse_int<std::uint64_t>(*v, origin, "seed");
  if (const auto* v = get("run", "reference_offset")) {
    cfg.reference_offset = parse_int<int>(*v, origin, "reference_offset");
  }
  if (const auto* v = get("run", "threads")) cfg.threads = parse_int<unsigned>(*v, origin, "threads");
  if (const auto* v = get("run", "timing")) cfg.timing = parse_bool(*v, origin, "timing");
  if (const auto* v = get("run", "out")) {
    if (v->value.empty()) throw ConfigError(where(origin, v->line) + "out must not be empty");
    cfg.out = v->value;
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path.string());
  return parse_config(is, path.string());
}

std::uint64_t replicate_seed(std::uint64_t seed, int replicate) {
  if (replicate == 0) return seed;
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(replicate);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::filesystem::path reference_path(const std::filesystem::path& out, int p) {
  return out / ("reference_p" + std::to_string(p) + ".txt");
}

std::vector<ReferenceField> compute_references(const RunConfig& config, const Hierarchy& hierarchy,
                                               const std::vector<int>& moments) {
  std::vector<ReferenceField> out;
  const MeshPtr& mesh = hierarchy.reference_mesh();
  if (config.problem.name == "analytic_disk") {
    for (int p : moments) {
      out.push_back({nodal_field(mesh, p == 1 ? analytic_disk_mean : analytic_disk_second_moment),
                     p, provenance(config, hierarchy, p)});
    }
    return out;
  }
  const int lref = hierarchy.reference_level();
  const auto rule = qmc_rule(lref + 1, config.problem.dimension());
  SolverOptions options;
  options.rel_tol = default_rel_tol(lref);
  auto fields = single_level_estimate(hierarchy.reference(), rule, moments, options, config.threads);
  for (std::size_t q = 0; q < moments.size(); ++q) {
    out.push_back({std::move(fields[q]), moments[q], provenance(config, hierarchy, moments[q])});
  }
  return out;
}

std::vector<std::filesystem::path> generate_reference(const RunConfig& config, bool force,
                                                      std::ostream* log) {
  std::ostringstream sink;
  std::ostream& out = log ? *log : sink;
  std::filesystem::create_directories(config.out);
  for (int p : config.moments) {
    const auto path = reference_path(config.out, p);
    if (std::filesystem::exists(path) && !force) {
      throw ConfigError(path.string() + " already exists; pass --force to overwrite");
    }
  }
  Hierarchy hierarchy(config.problem, config.j_max, config.reference_level(), config.seed);
  std::vector<std::filesystem::path> paths;
  for (auto& ref : compute_references(config, hierarchy, config.moments)) {
    const auto path = reference_path(config.out, ref.moment);
    std::ofstream os(path);
    write_mesh(os, *ref.field.mesh, &ref.field.values, ref.provenance);
    if (!os) throw ConfigError("cannot write " + path.string());
    out << "wrote " << path.string() << '\n';
    paths.push_back(path);
  }
  return paths;
}

StudySummary run_convergence_study(const RunConfig& config, bool force, std::ostream* log) {
  config.validate();
  std::filesystem::create_directories(config.out);
  std::ofstream logfile(config.out / "run.log");
  if (!logfile) throw ConfigError("cannot write " + (config.out / "run.log").string());
  const auto note = [&](const std::string& s) {
    logfile << s << '\n';
    logfile.flush();
    if (log) *log << s << '\n';
  };

  StudySummary summary;
  note("problem " + config.problem.name + ", j = " + std::to_string(config.j_min) + ".." +
       std::to_string(config.j_max) + ", seed " + std::to_string(config.seed));

  const Hierarchy hierarchy(config.problem, config.j_max, config.reference_level(), config.seed);
  const std::size_t m = config.problem.dimension();

  {
    const auto path = config.out / "meshes.csv";
    CsvFile csv(path, "level,h_target,h_measured,vertices,triangles,unknowns");
    for (int l = 0; l <= config.j_max; ++l) {
      const auto& mesh = *hierarchy.mesh(l);
      csv.row({std::to_string(l), num(hierarchy.h_target(l)), num(mesh.h_measured()),
               num(mesh.num_vertices()), num(mesh.num_triangles()),
               num(hierarchy.discretization(l).unknowns())});
    }
    const auto& ref = *hierarchy.reference_mesh();
    csv.row({std::to_string(hierarchy.reference_level()),
             num(hierarchy.h_target(hierarchy.reference_level())), num(ref.h_measured()),
             num(ref.num_vertices()), num(ref.num_triangles()),
             num(hierarchy.reference().unknowns())});
    summary.files.push_back(path);
  }

  std::ostringstream reflog;
  const auto references = obtain_references(config, hierarchy, force, reflog);
  for (const auto& line : detail::split(reflog.str(), '\n')) {
    if (!line.empty()) note(line);
  }
  for (int p : config.moments) summary.files.push_back(reference_path(config.out, p));

  std::map<std::pair<Representation, int>, std::unique_ptr<CsvFile>> errors;
  for (auto rep : config.representations) {
    for (int p : config.moments) {
      const auto path = config.out / ("errors_" + std::string(to_string(rep)) + "_p" +
                                      std::to_string(p) + ".csv");
      errors[{rep, p}] = std::make_unique<CsvFile>(
          path, "j,family,representation,p,solves,cost_units,error_h1,error_w11,wall_seconds");
      summary.files.push_back(path);
    }
  }
  const auto cost_path = config.out / "cost.csv";
  CsvFile cost(cost_path, "j,family,representation,solves,expected_solves,cost_units");
  summary.files.push_back(cost_path);
  const auto samples_path = config.out / "samples.csv";
  CsvFile samples(samples_path,
                  "j,family,representation,term,quad_level,mesh_levels,nodes,solves,unknowns,"
                  "cost_units");
  summary.files.push_back(samples_path);

  for (int j = config.j_min; j <= config.j_max; ++j) {
    for (Family family : config.families) {
      for (Representation rep : config.representations) {
        const int reps = family == Family::monte_carlo ? config.replicates : 1;
        std::vector<double> sq_h1(config.moments.size(), 0.0);
        std::vector<double> sq_w11(config.moments.size(), 0.0);
        EstimateReport first;
        double seconds = 0.0;
        bool failed = false;
        for (int r = 0; r < reps && !failed; ++r) {
          MLConfig ml;
          ml.j = j;
          ml.family = family;
          ml.seed = replicate_seed(config.seed, r);
          ml.representation = rep;
          ml.moments = config.moments;
          ml.threads = config.threads;
          const auto t0 = std::chrono::steady_clock::now();
          try {
            EstimateReport report = ml_estimate(hierarchy, ml);
            seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            for (std::size_t q = 0; q < config.moments.size(); ++q) {
              const double e1 = measure_error(report.statistics[q], references[q], Norm::H1);
              const double e2 = measure_error(report.statistics[q], references[q], Norm::W11);
              sq_h1[q] += e1 * e1;
              sq_w11[q] += e2 * e2;
            }
            if (r == 0) first = std::move(report);
          } catch (const NumericalError& e) {
            failed = true;
            ++summary.failures;
            note("FAILED j=" + std::to_string(j) + " family=" + std::string(to_string(family)) +
                 " representation=" + std::string(to_string(rep)) + " replicate=" +
                 std::to_string(r) + ": " + e.what());
          }
        }
        const std::string fam(to_string(family));
        const std::string rp(to_string(rep));
        if (failed) {
          for (int p : config.moments) {
            errors[{rep, p}]->row({std::to_string(j), fam, rp, std::to_string(p), "0", "0", "nan",
                                   "nan", "0"});
          }
          continue;
        }
        for (std::size_t q = 0; q < config.moments.size(); ++q) {
          const double h1 = std::sqrt(sq_h1[q] / reps);
          const double w11 = std::sqrt(sq_w11[q] / reps);
          errors[{rep, config.moments[q]}]->row(
              {std::to_string(j), fam, rp, std::to_string(config.moments[q]),
               num(first.total_solves), num(first.total_cost_units), num(h1), num(w11),
               num(config.timing ? seconds / reps : 0.0)});
        }
        cost.row({std::to_string(j), fam, rp, num(first.total_solves),
                  num(expected_solves(family, rep, j, m)), num(first.total_cost_units)});
        if (j == config.j_max) {
          for (const auto& rec : first.per_level) {
            std::string levels, unknowns;
            for (std::size_t k = 0; k < rec.mesh_levels.size(); ++k) {
              levels += (k ? " " : "") + std::to_string(rec.mesh_levels[k]);
              unknowns += (k ? " " : "") + std::to_string(rec.unknowns[k]);
            }
            samples.row({std::to_string(j), fam, rp, std::to_string(rec.term),
                         std::to_string(rec.quad_level), levels, num(rec.nodes), num(rec.solves),
                         unknowns, num(rec.cost_units)});
          }
        }
        note("done j=" + std::to_string(j) + " family=" + fam + " representation=" + rp +
             " solves=" + std::to_string(first.total_solves));
      }
    }
  }
  summary.files.push_back(config.out / "run.log");
  return summary;
}

}  // namespace mlq
