#include "mlq/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "parallel.hpp"
#include "text.hpp"

namespace mlq {

namespace {

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Per-vertex Neumaier summation.
class Compensated {
 public:
  explicit Compensated(std::size_t n) : sum_(n, 0.0), comp_(n, 0.0) {}

  void add(double weight, std::span<const double> values) {
    for (std::size_t i = 0; i < sum_.size(); ++i) {
      const double x = weight * values[i];
      const double t = sum_[i] + x;
      if (std::abs(sum_[i]) >= std::abs(x)) {
        comp_[i] += (sum_[i] - t) + x;
      } else {
        comp_[i] += (x - t) + sum_[i];
      }
      sum_[i] = t;
    }
  }

  std::vector<double> value() const {
    std::vector<double> out(sum_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = sum_[i] + comp_[i];
    return out;
  }

 private:
  std::vector<double> sum_;
  std::vector<double> comp_;
};

struct Target {
  const Discretization* disc;
  int tol_level;
};

// Solves every node of `rule` on each target and returns, per target and
// moment, sum_i w_i F_p(u(y_i)) on the reference mesh. The identity is linear
// and is summed on the target mesh before one transfer; higher moments are
// applied to each solve after its transfer, so F acts on reference nodal values.
std::vector<std::vector<std::vector<double>>> accumulate(const Hierarchy& hierarchy,
                                                         const std::vector<Target>& targets,
                                                         const QuadratureRule& rule,
                                                         std::span<const int> moments,
                                                         unsigned threads, bool jacobi,
                                                         int term) {
  const std::size_t nref = hierarchy.reference_mesh()->num_vertices();
  const bool lift = std::any_of(moments.begin(), moments.end(), [](int p) { return p != 1; });
  std::vector<std::vector<Compensated>> acc(targets.size());
  std::vector<SolverOptions> options;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    for (int p : moments) {
      acc[k].emplace_back(p == 1 ? targets[k].disc->mesh()->num_vertices() : nref);
    }
    SolverOptions o;
    o.rel_tol = default_rel_tol(targets[k].tol_level);
    o.jacobi = jacobi;
    options.push_back(o);
  }

  const std::size_t nt = targets.size();
  const std::size_t chunk = 16 * std::max(1u, threads);
  std::vector<ScalarField> solved;
  std::vector<std::vector<double>> lifted;
  std::vector<double> scratch;
  for (std::size_t begin = 0; begin < rule.size(); begin += chunk) {
    const std::size_t count = std::min(chunk, rule.size() - begin);
    solved.assign(count * nt, ScalarField{});
    if (lift) lifted.assign(count * nt, std::vector<double>(nref));
    detail::parallel_for(count * nt, threads, [&](std::size_t task) {
      const std::size_t node = begin + task / nt;
      const std::size_t k = task % nt;
      try {
        solved[task] = targets[k].disc->solve(rule.node(node), options[k]);
      } catch (const NumericalError& e) {
        throw NumericalError("term " + std::to_string(term) + ", node " + std::to_string(node) +
                             ", mesh level " + std::to_string(targets[k].tol_level) + ": " +
                             e.what());
      }
      if (lift) hierarchy.to_reference(targets[k].tol_level, solved[task].values, lifted[task]);
    });
    // fixed order: node ascending
    for (std::size_t task = 0; task < count * nt; ++task) {
      const std::size_t node = begin + task / nt;
      const std::size_t k = task % nt;
      for (std::size_t q = 0; q < moments.size(); ++q) {
        const auto& u = moments[q] == 1 ? solved[task].values : lifted[task];
        scratch.resize(u.size());
        std::transform(u.begin(), u.end(), scratch.begin(), Functional{moments[q]});
        acc[k][q].add(rule.weights[node], scratch);
      }
    }
  }

  std::vector<std::vector<std::vector<double>>> out(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    for (std::size_t q = 0; q < moments.size(); ++q) {
      auto v = acc[k][q].value();
      if (moments[q] == 1) {
        std::vector<double> moved(nref);
        hierarchy.to_reference(targets[k].tol_level, v, moved);
        v = std::move(moved);
      }
      out[k].push_back(std::move(v));
    }
  }
  return out;
}

void check_moments(std::span<const int> moments) {
  if (moments.empty()) throw std::invalid_argument("at least one moment is required");
  for (int p : moments) {
    if (p != 1 && p != 2) throw std::invalid_argument("moments must be 1 or 2");
  }
}

}  // namespace

std::string_view to_string(Representation rep) {
  return rep == Representation::nestedQ ? "nestedQ" : "nestedV";
}

Representation parse_representation(std::string_view text) {
  const auto t = detail::trim(text);
  if (t == "nestedQ" || t == "nestedq" || t == "Q") return Representation::nestedQ;
  if (t == "nestedV" || t == "nestedv" || t == "V") return Representation::nestedV;
  throw std::invalid_argument("unknown representation '" + std::string(t) + "'");
}

std::uint64_t Hierarchy::mesh_seed(std::uint64_t seed, int level) {
  return mix(seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(level + 1));
}

std::uint64_t Hierarchy::reference_seed(std::uint64_t seed, int level) {
  return mix(~seed + 0xD1B54A32D192ED03ull * static_cast<std::uint64_t>(level + 1));
}

Hierarchy::Hierarchy(ProblemSpec problem, int max_level, int reference_level, std::uint64_t seed)
    : problem_(std::move(problem)), reference_level_(reference_level), seed_(seed) {
  if (max_level < 0) throw std::invalid_argument("max_level must be >= 0");
  if (reference_level <= max_level) {
    throw std::invalid_argument("reference level must exceed the finest level");
  }
  for (int l = 0; l <= max_level; ++l) {
    auto mesh = std::make_shared<const Mesh>(
        generate_mesh(problem_.domain, h_target(l), mesh_seed(seed, l), l));
    levels_.push_back(std::make_unique<Discretization>(std::move(mesh), problem_));
  }
  auto ref = std::make_shared<const Mesh>(generate_mesh(
      problem_.domain, h_target(reference_level), reference_seed(seed, reference_level),
      reference_level));
  reference_ = std::make_unique<Discretization>(std::move(ref), problem_);
  for (int l = 0; l <= max_level; ++l) {
    transfers_.push_back(std::make_unique<Transfer>(*mesh(l), *reference_mesh()));
  }
}

double Hierarchy::h_target(int level) const { return problem_.h0 * std::ldexp(1.0, -level); }

const MeshPtr& Hierarchy::mesh(int level) const { return discretization(level).mesh(); }

const Discretization& Hierarchy::discretization(int level) const {
  if (level < 0 || level > max_level()) {
    throw std::out_of_range("mesh level " + std::to_string(level) + " not in hierarchy");
  }
  return *levels_[static_cast<std::size_t>(level)];
}

void Hierarchy::to_reference(int level, std::span<const double> values,
                             std::span<double> out) const {
  discretization(level);
  transfers_[static_cast<std::size_t>(level)]->apply(values, out);
}

const ScalarField& EstimateReport::statistic(int p) const {
  for (std::size_t q = 0; q < moments.size(); ++q) {
    if (moments[q] == p) return statistics[q];
  }
  throw std::invalid_argument("moment " + std::to_string(p) + " was not estimated");
}

EstimateReport ml_estimate(const Hierarchy& hierarchy, const MLConfig& config) {
  check_moments(config.moments);
  if (config.j < 0 || config.j > hierarchy.max_level()) {
    throw std::invalid_argument("level j = " + std::to_string(config.j) +
                                " outside the mesh hierarchy");
  }
  const std::size_t m = hierarchy.problem().dimension();
  const std::size_t nref = hierarchy.reference_mesh()->num_vertices();
  const std::size_t nm = config.moments.size();
  const int j = config.j;

  EstimateReport report;
  report.representation = config.representation;
  report.family = config.family;
  report.j = j;
  report.moments = config.moments;

  std::vector<Compensated> total(nm, Compensated(nref));
  for (int l = 0; l <= j; ++l) {
    LevelRecord rec;
    rec.term = l;
    std::vector<Target> targets;
    QuadratureRule rule;
    if (config.representation == Representation::nestedQ) {
      rec.quad_level = l;
      rule = difference_rule(config.family, l, m, config.seed);
      rec.mesh_levels = {j - l};
    } else {
      rec.quad_level = j - l;
      rule = make_rule(config.family, j - l, m, config.seed);
      rec.mesh_levels = l == 0 ? std::vector<int>{0} : std::vector<int>{l, l - 1};
    }
    for (int k : rec.mesh_levels) targets.push_back({&hierarchy.discretization(k), k});

    const auto fields =
        accumulate(hierarchy, targets, rule, config.moments, config.threads, config.jacobi, l);
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const double sign = t == 0 ? 1.0 : -1.0;
      for (std::size_t q = 0; q < nm; ++q) total[q].add(sign, fields[t][q]);
    }

    rec.nodes = rule.size();
    rec.solves = rule.size() * targets.size();
    for (const auto& t : targets) {
      rec.unknowns.push_back(t.disc->unknowns());
      rec.cost_units += static_cast<double>(rule.size()) * static_cast<double>(t.disc->unknowns());
    }
    report.total_solves += rec.solves;
    report.total_cost_units += rec.cost_units;
    report.per_level.push_back(std::move(rec));
  }
  for (std::size_t q = 0; q < nm; ++q) {
    report.statistics.push_back({hierarchy.reference_mesh(), total[q].value()});
  }
  return report;
}

EstimateReport ml_estimate_nestedQ(const Hierarchy& hierarchy, MLConfig config) {
  config.representation = Representation::nestedQ;
  return ml_estimate(hierarchy, config);
}

EstimateReport ml_estimate_nestedV(const Hierarchy& hierarchy, MLConfig config) {
  config.representation = Representation::nestedV;
  return ml_estimate(hierarchy, config);
}

std::vector<ScalarField> single_level_estimate(const Discretization& disc,
                                               const QuadratureRule& rule,
                                               std::span<const int> moments,
                                               const SolverOptions& options, unsigned threads) {
  check_moments(moments);
  std::vector<ScalarField> out;
  std::vector<Compensated> acc(moments.size(), Compensated(disc.mesh()->num_vertices()));
  const std::size_t chunk = 16 * std::max(1u, threads);
  std::vector<ScalarField> solved;
  std::vector<double> scratch;
  for (std::size_t begin = 0; begin < rule.size(); begin += chunk) {
    const std::size_t count = std::min(chunk, rule.size() - begin);
    solved.assign(count, ScalarField{});
    detail::parallel_for(count, threads, [&](std::size_t i) {
      try {
        solved[i] = disc.solve(rule.node(begin + i), options);
      } catch (const NumericalError& e) {
        throw NumericalError("node " + std::to_string(begin + i) + ": " + e.what());
      }
    });
    for (std::size_t i = 0; i < count; ++i) {
      const auto& u = solved[i].values;
      for (std::size_t q = 0; q < moments.size(); ++q) {
        scratch.resize(u.size());
        std::transform(u.begin(), u.end(), scratch.begin(), Functional{moments[q]});
        acc[q].add(rule.weights[begin + i], scratch);
      }
    }
  }
  for (const auto& a : acc) out.push_back({disc.mesh(), a.value()});
  return out;
}

VarianceEstimate estimate_variance(const Hierarchy& hierarchy, MLConfig config) {
  config.moments = {1, 2};
  VarianceEstimate v;
  v.report = ml_estimate(hierarchy, config);
  v.mean = v.report.statistic(1);
  v.second_moment = v.report.statistic(2);
  v.variance = {v.mean.mesh, std::vector<double>(v.mean.values.size())};
  double scale = 0.0;
  for (double e2 : v.second_moment.values) scale = std::max(scale, std::abs(e2));
  const double floor = -kVarianceClampFactor * scale;
  for (std::size_t i = 0; i < v.variance.values.size(); ++i) {
    const double e1 = v.mean.values[i];
    double var = v.second_moment.values[i] - e1 * e1;
    v.most_negative = std::min(v.most_negative, var);
    if (var < 0.0 && var >= floor) var = 0.0;
    if (var < floor) v.under_resolved = true;
    v.variance.values[i] = var;
  }
  return v;
}

double measure_error(const ScalarField& estimate, const ScalarField& reference, Norm norm) {
  if (!estimate.mesh || !reference.mesh ||
      (estimate.mesh != reference.mesh && !estimate.mesh->same_as(*reference.mesh))) {
    throw MeshError("estimate and reference live on different meshes");
  }
  if (estimate.values.size() != reference.values.size()) {
    throw MeshError("estimate and reference have different lengths");
  }
  ScalarField diff{estimate.mesh, estimate.values};
  for (std::size_t i = 0; i < diff.values.size(); ++i) diff.values[i] -= reference.values[i];
  return norm == Norm::H1 ? h1_norm(diff) : w11_norm(diff);
}

CostModel compute_cost_model(int j, double theta, double sigma, double n0, double c0) {
  if (j < 0) throw std::invalid_argument("j must be >= 0");
  if (!(theta > 1.0) || !(sigma > 1.0)) throw std::invalid_argument("theta and sigma must exceed 1");
  double sum = 0.0;
  for (int l = 0; l <= j; ++l) sum += std::pow(theta, j - l) * std::pow(sigma, l);
  CostModel c;
  c.nestedQ = n0 * c0 * sum;
  c.nestedV = (1.0 + 1.0 / sigma) * c.nestedQ;
  return c;
}

std::size_t rule_size(Family family, int level, std::size_t m) {
  if (family == Family::cc_sparse) return cc_sparse_rule(level, m).size();
  return sample_count(family, level);
}

std::size_t expected_solves(Family family, Representation rep, int j, std::size_t m) {
  std::size_t total = 0;
  for (int l = 0; l <= j; ++l) {
    if (rep == Representation::nestedQ) {
      total += rule_size(family, l, m);
    } else {
      total += rule_size(family, j - l, m) * (l == 0 ? 1 : 2);
    }
  }
  return total;
}

ScalarField nodal_field(const MeshPtr& mesh, const std::function<double(Point2)>& fn) {
  ScalarField f{mesh, std::vector<double>(mesh->num_vertices())};
  for (std::size_t v = 0; v < f.values.size(); ++v) f.values[v] = fn(mesh->vertices()[v]);
  return f;
}

}  // namespace mlq
