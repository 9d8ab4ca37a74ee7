#include "mlq/coeff.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

#include "text.hpp"

namespace mlq {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

struct BuiltinSignature {
  std::string_view name;
  Builtin::Kind kind;
  std::size_t arity;
};

constexpr BuiltinSignature kBuiltins[] = {
    {"const", Builtin::Kind::constant, 0}, {"sin", Builtin::Kind::sine, 2},
    {"cos", Builtin::Kind::cosine, 2},     {"expsq", Builtin::Kind::expsq, 1},
    {"gauss", Builtin::Kind::gauss, 3},    {"radial", Builtin::Kind::radial, 1},
};

double parse_number(std::string_view text) {
  const auto t = detail::trim(text);
  double value = 0.0;
  const auto* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, value);
  if (t.empty() || ec != std::errc{} || ptr != end) {
    throw CoefficientError("expected a number, got '" + std::string(t) + "'");
  }
  return value;
}

double axis_coordinate(Point2 x, double axis) {
  if (axis == 0.0) return x.x;
  if (axis == 1.0) return x.y;
  throw CoefficientError("axis must be 0 or 1");
}

}  // namespace

double Builtin::operator()(Point2 x) const {
  switch (kind) {
    case Kind::constant:
      return 1.0;
    case Kind::sine:
      return std::sin(two_pi * params[1] * axis_coordinate(x, params[0]));
    case Kind::cosine:
      return std::cos(two_pi * params[1] * axis_coordinate(x, params[0]));
    case Kind::expsq:
      return std::exp(params[0] * (x.x * x.x + x.y * x.y));
    case Kind::gauss: {
      const double dx = x.x - params[0], dy = x.y - params[1];
      return std::exp(-(dx * dx + dy * dy) / (2.0 * params[2] * params[2]));
    }
    case Kind::radial:
      return std::pow(std::hypot(x.x, x.y), params[0]);
  }
  return 0.0;
}

std::string Builtin::to_string() const {
  std::string out;
  for (const auto& sig : kBuiltins) {
    if (sig.kind == kind) out = std::string(sig.name);
  }
  out += '(';
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) out += ", ";
    out += detail::fmt17(params[i]);
  }
  return out + ')';
}

std::string SpatialFunction::to_string() const {
  std::string out = detail::fmt17(scale_);
  for (const auto& f : factors_) out += " * " + f.to_string();
  if (factors_.empty()) out += " * const()";
  return out;
}

SpatialFunction parse_spatial_function(std::string_view text) {
  // split on '*' outside parentheses
  std::vector<std::string> parts;
  int depth = 0;
  std::string cur;
  for (char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (depth < 0) throw CoefficientError("unbalanced parentheses in '" + std::string(text) + "'");
    if (c == '*' && depth == 0) {
      parts.emplace_back(detail::trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (depth != 0) throw CoefficientError("unbalanced parentheses in '" + std::string(text) + "'");
  parts.emplace_back(detail::trim(cur));

  double scale = 1.0;
  std::vector<Builtin> factors;
  for (const auto& part : parts) {
    if (part.empty()) throw CoefficientError("empty factor in '" + std::string(text) + "'");
    const auto open = part.find('(');
    if (open == std::string::npos) {
      scale *= parse_number(part);
      continue;
    }
    if (part.back() != ')') throw CoefficientError("malformed factor '" + part + "'");
    const auto name = detail::trim(std::string_view(part).substr(0, open));
    const auto inner = std::string_view(part).substr(open + 1, part.size() - open - 2);
    const BuiltinSignature* sig = nullptr;
    for (const auto& s : kBuiltins) {
      if (s.name == name) sig = &s;
    }
    if (!sig) throw CoefficientError("unknown builtin '" + std::string(name) + "'");
    Builtin b{sig->kind, {}};
    if (!detail::trim(inner).empty()) {
      for (const auto& arg : detail::split(inner, ',')) b.params.push_back(parse_number(arg));
    }
    if (b.params.size() != sig->arity) {
      throw CoefficientError("builtin '" + std::string(name) + "' takes " +
                             std::to_string(sig->arity) + " parameters");
    }
    if ((b.kind == Builtin::Kind::sine || b.kind == Builtin::Kind::cosine) &&
        b.params[0] != 0.0 && b.params[0] != 1.0) {
      throw CoefficientError("axis must be 0 or 1 in '" + part + "'");
    }
    if (b.kind == Builtin::Kind::gauss && !(b.params[2] > 0.0)) {
      throw CoefficientError("gauss width must be positive");
    }
    factors.push_back(std::move(b));
  }
  return {scale, std::move(factors)};
}

double AffineCoefficient::operator()(Point2 x, std::span<const double> y) const {
  if (y.size() != terms_.size()) throw std::invalid_argument("parameter dimension mismatch");
  double a = phi0_(x);
  for (std::size_t k = 0; k < terms_.size(); ++k) a += terms_[k](x) * y[k];
  return a;
}

double ReciprocalProductCoefficient::operator()(std::span<const double> y) const {
  if (y.size() != dimension_) throw std::invalid_argument("parameter dimension mismatch");
  double prod = 1.0;
  for (double t : y) prod *= 0.6 * (2.0 - t * t);
  return 1.0 / prod;
}

double ReciprocalProductCoefficient::second_moment_of_reciprocal() const {
  // (1/2) int_{-1}^{1} (3/5)^2 (2 - t^2)^2 dt = 0.36 * 43/15
  return std::pow(0.36 * 43.0 / 15.0, static_cast<double>(dimension_));
}

std::size_t parameter_dimension(const Coefficient& coeff) {
  return std::visit([](const auto& c) { return c.dimension(); }, coeff);
}

double eval_alpha(const Coefficient& coeff, Point2 x, std::span<const double> y) {
  if (const auto* affine = std::get_if<AffineCoefficient>(&coeff)) return (*affine)(x, y);
  return std::get<ReciprocalProductCoefficient>(coeff)(y);
}

EllipticityCertificate certify_ellipticity(const AffineCoefficient& coeff, Domain domain,
                                           int grid_resolution) {
  if (grid_resolution < 1) throw std::invalid_argument("grid_resolution must be positive");
  double lo = std::numeric_limits<double>::max();
  double hi = std::numeric_limits<double>::lowest();
  Point2 where{};
  const int n = grid_resolution;
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      Point2 x{static_cast<double>(i) / n, static_cast<double>(j) / n};
      if (domain == Domain::unit_disk) {
        x = {2.0 * x.x - 1.0, 2.0 * x.y - 1.0};
        if (x.x * x.x + x.y * x.y > 1.0) continue;
      }
      const double center = coeff.mean()(x);
      double spread = 0.0;
      for (const auto& t : coeff.terms()) spread += std::abs(t(x));
      if (center - spread < lo) {
        lo = center - spread;
        where = x;
      }
      hi = std::max(hi, center + spread);
    }
  }
  if (!(lo > 0.0)) {
    throw CoefficientError("coefficient is not uniformly elliptic: sampled minimum " +
                           detail::fmt17(lo) + " at x = (" + detail::fmt17(where.x) + ", " +
                           detail::fmt17(where.y) + ")");
  }
  return {lo, hi, true,
          "bounds sampled on a " + std::to_string(n + 1) + "^2 grid over the corners of [-1,1]^m"};
}

EllipticityCertificate certify_ellipticity(const ReciprocalProductCoefficient& coeff) {
  const auto m = static_cast<double>(coeff.dimension());
  // each factor (3/5)(2 - t^2) ranges over [3/5, 6/5]
  return {std::pow(5.0 / 6.0, m), std::pow(5.0 / 3.0, m), false, "closed form"};
}

ProblemSpec analytic_disk_problem() {
  ProblemSpec p;
  p.name = "analytic_disk";
  p.domain = Domain::unit_disk;
  p.coeff = ReciprocalProductCoefficient(6);
  p.source = SpatialFunction::constant(1.0);
  p.h0 = 0.6;
  return p;
}

ProblemSpec sinusoidal_square_problem(std::size_t terms) {
  using K = Builtin::Kind;
  const Builtin bump{K::expsq, {1.0}};
  const auto sin_of = [](double axis, double freq) { return Builtin{K::sine, {axis, freq}}; };
  std::vector<SpatialFunction> all = {
      {1.0 / 20.0, {bump, sin_of(0, 1)}},
      {1.0 / 40.0, {bump, sin_of(1, 1)}},
      {1.0 / 80.0, {bump, sin_of(0, 1), sin_of(1, 2)}},
      {1.0 / 160.0, {bump, sin_of(0, 2)}},
      {1.0 / 320.0, {bump, sin_of(0, 2), sin_of(1, 1)}},
      {1.0 / 640.0, {bump, sin_of(1, 2)}},
  };
  if (terms == 0 || terms > all.size()) throw std::invalid_argument("1 to 6 sinusoidal terms");
  all.resize(terms);
  ProblemSpec p;
  p.name = "sinusoidal_square";
  p.domain = Domain::unit_square;
  p.coeff = AffineCoefficient(SpatialFunction::constant(1.0), std::move(all));
  p.source = SpatialFunction::constant(10.0);
  p.h0 = 0.5;
  return p;
}

double analytic_disk_mean(Point2 x) { return 0.25 * (1.0 - (x.x * x.x + x.y * x.y)); }

double analytic_disk_second_moment(Point2 x) {
  const double u = analytic_disk_mean(x);
  return ReciprocalProductCoefficient(6).second_moment_of_reciprocal() * u * u;
}

}  // namespace mlq
