#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mlq {

enum class Family { monte_carlo, qmc_halton, cc_sparse };

std::string_view to_string(Family family);
/// Accepts "mc", "qmc", "cc" and the full names.
Family parse_family(std::string_view text);

class QuadratureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Nodes in [-1,1]^m with weights normalised against the uniform density, so a
/// plain rule integrates constants to 1. Difference rules carry signed weights
/// summing to 0.
struct QuadratureRule {
  Family family = Family::monte_carlo;
  int level = 0;
  std::size_t dimension = 0;
  std::vector<double> nodes;  // row-major, size() x dimension
  std::vector<double> weights;
  /// Number of leading nodes shared bit-exactly with the rule one level down.
  std::optional<std::size_t> nested_prefix;
  bool difference = false;

  std::size_t size() const { return weights.size(); }
  std::span<const double> node(std::size_t i) const {
    return {nodes.data() + i * dimension, dimension};
  }
};

using DifferenceRule = QuadratureRule;

inline constexpr std::size_t kMaxHaltonDimension = 16;

double radical_inverse(std::uint64_t n, unsigned base);
/// Halton point number `index` (0-based, built from index + 1) mapped to [-1,1]^m.
std::vector<double> halton_point(std::size_t index, std::size_t m);

/// Node counts: MC 10 * 4^level, QMC 10 * 2^level.
std::size_t sample_count(Family family, int level);

QuadratureRule mc_rule(int level, std::size_t m, std::uint64_t seed);
QuadratureRule qmc_rule(int level, std::size_t m);

/// Clenshaw-Curtis on [-1,1] with weights summing to 2. Level 1 is the
/// midpoint, level j >= 2 has 2^(j-1) + 1 nodes in descending order.
struct Rule1d {
  std::vector<double> nodes;
  std::vector<double> weights;
};
Rule1d clenshaw_curtis(int j);

/// Smolyak combination of nested Clenshaw-Curtis rules, level >= 0.
QuadratureRule cc_sparse_rule(int level, std::size_t m);

QuadratureRule make_rule(Family family, int level, std::size_t m, std::uint64_t seed = 0);

/// fine - coarse with nodes coalesced by bit-exact coordinates. A null coarse
/// rule returns a copy of fine.
DifferenceRule difference_of(const QuadratureRule& fine, const QuadratureRule* coarse);
/// Q_level - Q_{level-1}, or Q_0 at level 0.
DifferenceRule difference_rule(Family family, int level, std::size_t m, std::uint64_t seed = 0);

/// Weighted sum with pairwise summation.
double integrate(const QuadratureRule& rule,
                 const std::function<double(std::span<const double>)>& integrand);
double pairwise_sum(std::span<const double> values);

void write_rule_csv(std::ostream& os, const QuadratureRule& rule);

}  // namespace mlq
