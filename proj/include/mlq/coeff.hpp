#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mlq/mesh.hpp"

namespace mlq {

/// One factor of a spatial function. The closed set of built-ins:
///
///   const()                        1
///   sin(axis, freq)                sin(2*pi*freq*x[axis])
///   cos(axis, freq)                cos(2*pi*freq*x[axis])
///   expsq(rate)                    exp(rate * |x|^2)
///   gauss(cx, cy, width)           exp(-|x - c|^2 / (2 width^2))
///   radial(power)                  |x|^power
///
/// Products are written as several factors in one term.
struct Builtin {
  enum class Kind { constant, sine, cosine, expsq, gauss, radial };
  Kind kind = Kind::constant;
  std::vector<double> params;

  double operator()(Point2 x) const;
  std::string to_string() const;
};

/// scale * factor_1(x) * factor_2(x) * ...
class SpatialFunction {
 public:
  SpatialFunction() = default;
  SpatialFunction(double scale, std::vector<Builtin> factors)
      : scale_(scale), factors_(std::move(factors)) {}

  static SpatialFunction constant(double value) { return {value, {}}; }

  double operator()(Point2 x) const {
    double v = scale_;
    for (const auto& f : factors_) v *= f(x);
    return v;
  }

  double scale() const { return scale_; }
  const std::vector<Builtin>& factors() const { return factors_; }
  bool is_zero() const { return scale_ == 0.0; }
  std::string to_string() const;

 private:
  double scale_ = 0.0;
  std::vector<Builtin> factors_;
};

class CoefficientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses `scale * name(params) * name(params) ...`; a bare number is a constant.
SpatialFunction parse_spatial_function(std::string_view text);

/// phi0(x) + sum_k terms[k](x) * y_k, with the KL scaling folded into each term.
class AffineCoefficient {
 public:
  AffineCoefficient(SpatialFunction phi0, std::vector<SpatialFunction> terms)
      : phi0_(std::move(phi0)), terms_(std::move(terms)) {}

  std::size_t dimension() const { return terms_.size(); }
  const SpatialFunction& mean() const { return phi0_; }
  const std::vector<SpatialFunction>& terms() const { return terms_; }

  double operator()(Point2 x, std::span<const double> y) const;

 private:
  SpatialFunction phi0_;
  std::vector<SpatialFunction> terms_;
};

/// Spatially constant alpha(y) = (prod_i (3/5)(2 - y_i^2))^{-1}.
class ReciprocalProductCoefficient {
 public:
  explicit ReciprocalProductCoefficient(std::size_t dimension = 6) : dimension_(dimension) {}
  std::size_t dimension() const { return dimension_; }
  double operator()(std::span<const double> y) const;

  /// Expectations of the reciprocal (the product itself) and its square
  /// under the uniform density on [-1,1]^m: 1 and 1.032^m.
  double mean_of_reciprocal() const { return 1.0; }
  double second_moment_of_reciprocal() const;

 private:
  std::size_t dimension_;
};

using Coefficient = std::variant<AffineCoefficient, ReciprocalProductCoefficient>;

std::size_t parameter_dimension(const Coefficient& coeff);
double eval_alpha(const Coefficient& coeff, Point2 x, std::span<const double> y);

struct EllipticityCertificate {
  double alpha_min = 0.0;
  double alpha_max = 0.0;
  bool sampled = true;  // bounds come from a spatial grid, not a proof
  std::string note;
};

/// Sampled bounds of an affine coefficient over domain x [-1,1]^m. Since the
/// coefficient is affine in y, the extremes are phi0 -/+ sum_k |term_k| per point.
/// Throws CoefficientError when the sampled minimum is not positive.
EllipticityCertificate certify_ellipticity(const AffineCoefficient& coeff, Domain domain,
                                           int grid_resolution);
EllipticityCertificate certify_ellipticity(const ReciprocalProductCoefficient& coeff);

/// Uniform product density (1/2)^m on [-1,1]^m.
inline double uniform_density(std::size_t m) {
  double r = 1.0;
  for (std::size_t k = 0; k < m; ++k) r *= 0.5;
  return r;
}

struct ProblemSpec {
  std::string name;
  Domain domain = Domain::unit_square;
  Coefficient coeff = AffineCoefficient(SpatialFunction::constant(1.0), {});
  SpatialFunction source = SpatialFunction::constant(1.0);
  double h0 = 0.5;  // coarsest mesh size; level l uses h0 * 2^-l

  std::size_t dimension() const { return parameter_dimension(coeff); }
};

/// -div(alpha(y) grad u) = 1 on the unit disk with the reciprocal product
/// coefficient, m = 6. The mean is (1 - |x|^2)/4.
ProblemSpec analytic_disk_problem();

/// Six-term sinusoidal coefficient with halving term magnitudes on the unit
/// square, f = 10.
ProblemSpec sinusoidal_square_problem(std::size_t terms = 6);

/// Exact mean and second moment of the analytic disk problem at x.
double analytic_disk_mean(Point2 x);
double analytic_disk_second_moment(Point2 x);

}  // namespace mlq
