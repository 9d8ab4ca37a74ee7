#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "mlq/coeff.hpp"
#include "mlq/fem.hpp"
#include "mlq/mesh.hpp"
#include "mlq/quad.hpp"

namespace mlq {

/// nestedQ: sum_l (Q_l - Q_{l-1}) F(u_{j-l});  nestedV: sum_l Q_{j-l} (F(u_l) - F(u_{l-1})).
enum class Representation { nestedQ, nestedV };

std::string_view to_string(Representation rep);
Representation parse_representation(std::string_view text);

enum class Norm { H1, W11 };

/// F(u) = u^p applied pointwise to nodal values, p in {1, 2}. Estimators apply
/// it on the reference mesh after transferring each solve.
struct Functional {
  int p = 1;
  double operator()(double u) const { return p == 1 ? u : u * u; }
};

/// Independently generated meshes for levels 0..max_level plus a finer
/// reference mesh, each with its discretization and a transfer to the reference.
class Hierarchy {
 public:
  Hierarchy(ProblemSpec problem, int max_level, int reference_level, std::uint64_t seed);

  const ProblemSpec& problem() const { return problem_; }
  int max_level() const { return static_cast<int>(levels_.size()) - 1; }
  int reference_level() const { return reference_level_; }
  std::uint64_t seed() const { return seed_; }

  double h_target(int level) const;
  const MeshPtr& mesh(int level) const;
  const Discretization& discretization(int level) const;
  const MeshPtr& reference_mesh() const { return reference_->mesh(); }
  const Discretization& reference() const { return *reference_; }

  /// Interpolates a nodal vector on level `level` onto the reference mesh.
  void to_reference(int level, std::span<const double> values, std::span<double> out) const;

  static std::uint64_t mesh_seed(std::uint64_t seed, int level);
  static std::uint64_t reference_seed(std::uint64_t seed, int level);

 private:
  ProblemSpec problem_;
  int reference_level_;
  std::uint64_t seed_;
  std::vector<std::unique_ptr<Discretization>> levels_;
  std::unique_ptr<Discretization> reference_;
  std::vector<std::unique_ptr<Transfer>> transfers_;
};

struct MLConfig {
  int j = 0;
  Family family = Family::qmc_halton;
  std::uint64_t seed = 0;  // MC stream; ignored by deterministic rules
  Representation representation = Representation::nestedQ;
  std::vector<int> moments{1};
  unsigned threads = 1;
  bool jacobi = true;
};

struct LevelRecord {
  int term = 0;        // l in the sum
  int quad_level = 0;  // l for nestedQ, j - l for nestedV
  std::vector<int> mesh_levels;
  std::size_t nodes = 0;
  std::size_t solves = 0;
  std::vector<std::size_t> unknowns;  // per mesh level
  double cost_units = 0.0;            // solves x unknowns
};

struct EstimateReport {
  Representation representation = Representation::nestedQ;
  Family family = Family::qmc_halton;
  int j = 0;
  std::vector<int> moments;
  std::vector<ScalarField> statistics;  // one per moment, on the reference mesh
  std::vector<LevelRecord> per_level;
  std::size_t total_solves = 0;
  double total_cost_units = 0.0;

  const ScalarField& statistic(int p = 1) const;
};

EstimateReport ml_estimate(const Hierarchy& hierarchy, const MLConfig& config);
EstimateReport ml_estimate_nestedQ(const Hierarchy& hierarchy, MLConfig config);
EstimateReport ml_estimate_nestedV(const Hierarchy& hierarchy, MLConfig config);

/// Plain quadrature of F(u) over one discretization; one field per moment.
std::vector<ScalarField> single_level_estimate(const Discretization& disc,
                                               const QuadratureRule& rule,
                                               std::span<const int> moments,
                                               const SolverOptions& options, unsigned threads = 1);

struct VarianceEstimate {
  ScalarField mean;
  ScalarField second_moment;
  ScalarField variance;
  double most_negative = 0.0;   // smallest E2 - E1^2 before clamping
  bool under_resolved = false;  // negativity beyond the clamp threshold
  EstimateReport report;
};

inline constexpr double kVarianceClampFactor = 1e-10;

/// E[u^2] - E[u]^2 from one run with shared solves. Values in
/// [-1e-10 * max, 0) are set to 0; anything below is kept and flagged.
VarianceEstimate estimate_variance(const Hierarchy& hierarchy, MLConfig config);

/// Norm of estimate - reference; both must live on the same mesh.
double measure_error(const ScalarField& estimate, const ScalarField& reference, Norm norm);

struct CostModel {
  double nestedV = 0.0;
  double nestedQ = 0.0;
  double ratio() const { return nestedV / nestedQ; }
};

/// N0 C0 sum_l theta^(j-l) sigma^l, times (1 + 1/sigma) for nestedV.
CostModel compute_cost_model(int j, double theta, double sigma, double n0, double c0);

/// Node count of Q_level for the family and dimension.
std::size_t rule_size(Family family, int level, std::size_t m);
/// Exact solve tally of a run: sum_l N_l (nestedQ) or sum_l N_{j-l} (2 - [l=0]) (nestedV).
std::size_t expected_solves(Family family, Representation rep, int j, std::size_t m);

ScalarField nodal_field(const MeshPtr& mesh, const std::function<double(Point2)>& fn);

}  // namespace mlq
