#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "mlq/fem.hpp"
#include "manufactured.hpp"
#include "oracles.hpp"

using namespace mlq;

namespace {

MeshPtr cross_mesh() {
  std::vector<Point2> v = {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}};
  std::vector<std::array<int, 3>> t = {{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}};
  return std::make_shared<const Mesh>(Mesh(v, t, {1, 1, 1, 1, 0}));
}

MeshPtr square(int level, std::uint64_t seed = 4) {
  return std::make_shared<const Mesh>(
      generate_mesh(Domain::unit_square, 0.5 * std::ldexp(1.0, -level), seed, level));
}

AffineCoefficient constant_alpha(double a) { return {SpatialFunction::constant(a), {}}; }

Eigen::MatrixXd dense(const SparseSystem& s) { return Eigen::MatrixXd(s.matrix); }

}  // namespace

TEST_CASE("cross mesh hand assembly") {
  const auto m = cross_mesh();
  const std::vector<double> y;
  const auto s = assemble(m, constant_alpha(1.0), y, SpatialFunction::constant(1.0));
  REQUIRE(s.unknowns() == 1);
  CHECK(s.matrix.coeff(0, 0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(s.load[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  const auto u = solve(s);
  CHECK(u.values[4] == doctest::Approx(1.0 / 12.0).epsilon(1e-14));
  for (int v = 0; v < 4; ++v) CHECK(u.values[v] == 0.0);

  const auto s2 = assemble(m, constant_alpha(2.0), y, SpatialFunction::constant(1.0));
  CHECK(s2.matrix.coeff(0, 0) == 2.0 * s.matrix.coeff(0, 0));
  CHECK(s2.load[0] == s.load[0]);
  CHECK(solve(s2).values[4] == doctest::Approx(1.0 / 24.0).epsilon(1e-14));
}

TEST_CASE("zero parameter gives the mean-field system") {
  const auto m = square(2);
  const auto p = sinusoidal_square_problem();
  const auto& a = std::get<AffineCoefficient>(p.coeff);
  const std::vector<double> y0(6, 0.0), none;
  const auto full = assemble(m, a, y0, p.source);
  const auto mean = assemble(m, AffineCoefficient(a.mean(), {}), none, p.source);
  CHECK((dense(full) - dense(mean)).norm() == 0.0);
  CHECK((full.load - mean.load).norm() == 0.0);
}

TEST_CASE("reduced stiffness is symmetric positive definite") {
  const auto m = square(2);
  const auto p = sinusoidal_square_problem();
  std::vector<double> y = {0.9, -0.9, 0.5, -0.1, 1.0, -1.0};
  Discretization disc(m, p);
  const auto s = disc.assemble(y);
  REQUIRE(s.unknowns() <= 200);
  const Eigen::MatrixXd k = dense(s);
  CHECK((k - k.transpose()).norm() <= 1e-12 * k.norm());
  for (Eigen::Index i = 0; i < k.rows(); ++i) CHECK(k(i, i) > 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
  // triplet view matches the matrix
  double total = 0.0;
  for (const auto& t : s.triplets()) total += t.value();
  CHECK(total == doctest::Approx(k.sum()));
}

TEST_CASE("solution meets the residual target and vanishes on the boundary") {
  const auto m = square(3);
  const auto p = sinusoidal_square_problem();
  Discretization disc(m, p);
  std::vector<double> y = {0.2, -0.4, 0.6, -0.8, 1.0, 0.0};
  SolverOptions opt;
  opt.rel_tol = 1e-8;
  const auto s = disc.assemble(y);
  const auto u = solve(s, opt);
  Eigen::VectorXd x(static_cast<Eigen::Index>(s.unknowns()));
  for (std::size_t i = 0; i < s.unknowns(); ++i) x[i] = u.values[s.unknown_vertex[i]];
  CHECK((s.matrix * x - s.load).norm() <= 1.01e-8 * s.load.norm());
  for (std::size_t v = 0; v < m->num_vertices(); ++v) {
    if (m->is_boundary(static_cast<int>(v))) CHECK(u.values[v] == 0.0);
  }
  opt.jacobi = false;
  const auto w = solve(s, opt);
  double diff = 0.0;
  for (std::size_t v = 0; v < m->num_vertices(); ++v) diff = std::max(diff, std::abs(w.values[v] - u.values[v]));
  CHECK(diff < 1e-6);
}

TEST_CASE("non-convergence and ellipticity violations are reported") {
  const auto m = square(3);
  const auto p = sinusoidal_square_problem();
  Discretization disc(m, p);
  const std::vector<double> y(6, 0.3);
  SolverOptions opt;
  opt.rel_tol = 1e-12;
  opt.max_iteration_factor = 1e-3;
  CHECK_THROWS_AS(disc.solve(y, opt), NumericalError);
  try {
    disc.solve(y, opt);
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("residual") != std::string::npos);
  }

  ProblemSpec bad;
  bad.coeff = AffineCoefficient(SpatialFunction::constant(1.0), {SpatialFunction::constant(2.0)});
  Discretization db(m, bad);
  const std::vector<double> neg = {-1.0};
  CHECK_THROWS_AS(db.assemble(neg), NumericalError);
  try {
    db.assemble(neg);
  } catch (const NumericalError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("y = (-1)") != std::string::npos);
    CHECK(msg.find("x = (") != std::string::npos);
  }
  const std::vector<double> wrong(3, 0.0);
  CHECK_THROWS_AS(db.assemble(wrong), std::invalid_argument);
}

TEST_CASE("per-level tolerance") {
  CHECK(default_rel_tol(0) == 1e-2);
  CHECK(default_rel_tol(3) == 1e-2 / 8);
}

TEST_CASE("norms") {
  const auto m = square(3);
  ScalarField zero{m, std::vector<double>(m->num_vertices(), 0.0)};
  CHECK(h1_norm(zero) == 0.0);
  CHECK(w11_norm(zero) == 0.0);

  ScalarField x{m, {}};
  for (const auto& p : m->vertices()) x.values.push_back(p.x);
  CHECK(h1_norm(x) == doctest::Approx(std::sqrt(4.0 / 3.0)).epsilon(m->h_measured() * m->h_measured()));
  CHECK(w11_norm(x) == doctest::Approx(1.5).epsilon(1e-13));

  ScalarField s{m, {}};
  for (const auto& p : m->vertices()) s.values.push_back(std::sin(3 * p.x) * p.y);
  ScalarField c = s;
  for (auto& v : c.values) v *= -2.5;
  CHECK(h1_norm(c) == doctest::Approx(2.5 * h1_norm(s)).epsilon(1e-14));
  CHECK(w11_norm(c) == doctest::Approx(2.5 * w11_norm(s)).epsilon(1e-14));
}

TEST_CASE("manufactured solution converges at first order in H1") {
  const auto p = manufactured::problem();
  std::vector<double> js, errs;
  for (int level = 2; level <= 5; ++level) {
    Discretization d(square(level), p);
    SolverOptions opt;
    opt.rel_tol = 1e-10;
    const auto u = d.solve(std::vector<double>{}, opt);
    js.push_back(level);
    errs.push_back(manufactured::h1_error(u));
  }
  const double order = oracle::fitted_order(js, errs);
  CHECK(order >= 0.9);
  CHECK(order <= 1.1);
}

TEST_CASE("solutions stay bounded uniformly in the parameter") {
  const auto p = sinusoidal_square_problem();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::vector<double>> ys(50, std::vector<double>(6));
  for (auto& y : ys)
    for (auto& v : y) v = u(rng);
  const double alpha_min = certify_ellipticity(std::get<AffineCoefficient>(p.coeff),
                                               Domain::unit_square, 64).alpha_min;
  // |u|_H1 <= C ||f|| / alpha_min with the Poincare constant of the unit square
  const double bound = 2.0 * 10.0 / alpha_min;
  std::vector<double> maxima;
  for (int level = 1; level <= 3; ++level) {
    Discretization d(square(level), p);
    double mx = 0.0;
    for (const auto& y : ys) mx = std::max(mx, h1_norm(d.solve(y, {})));
    CHECK(mx <= bound);
    maxima.push_back(mx);
  }
  CHECK(maxima.back() / maxima.front() < 1.5);
}
