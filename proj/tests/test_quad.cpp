#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "mlq/quad.hpp"
#include "oracles.hpp"

using namespace mlq;

namespace {

double weight_sum(const QuadratureRule& r) {
  return std::accumulate(r.weights.begin(), r.weights.end(), 0.0);
}

// Exact mean of prod x_a^k_a under the uniform density on [-1,1]^m.
double monomial_mean(const std::vector<int>& k) {
  double v = 1.0;
  for (int e : k) v *= oracle::uniform_moment(e);
  return v;
}

void for_each_exponent(std::size_t m, int max_total, std::vector<int>& k, std::size_t a, int left,
                       const std::function<void(const std::vector<int>&)>& fn) {
  if (a == m) {
    fn(k);
    return;
  }
  for (int e = 0; e <= left; ++e) {
    k[a] = e;
    for_each_exponent(m, max_total, k, a + 1, left - e, fn);
  }
  k[a] = 0;
}

}  // namespace

TEST_CASE("Clenshaw-Curtis weights") {
  const auto simpson = clenshaw_curtis(2);
  REQUIRE(simpson.nodes.size() == 3);
  CHECK(simpson.nodes[0] == 1.0);
  CHECK(simpson.nodes[1] == 0.0);
  CHECK(simpson.nodes[2] == -1.0);
  CHECK(simpson.weights[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(simpson.weights[1] == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
  CHECK(simpson.weights[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  const auto mid = clenshaw_curtis(1);
  CHECK(mid.nodes == std::vector<double>{0.0});
  CHECK(mid.weights == std::vector<double>{2.0});

  for (int j = 2; j <= 6; ++j) {
    const auto r = clenshaw_curtis(j);
    const int n = (1 << (j - 1)) + 1;
    REQUIRE(static_cast<int>(r.nodes.size()) == n);
    const auto x = oracle::chebyshev_extrema(n);
    const auto w = oracle::interpolatory_weights(x);
    for (int i = 0; i < n; ++i) {
      CHECK(r.nodes[i] == doctest::Approx(x[i]).epsilon(1e-15));
      CHECK(std::abs(r.weights[i] - w[i]) < 1e-12);
    }
    // symmetric nodes are exactly mirrored
    for (int i = 0; i < n; ++i) CHECK(r.nodes[i] == -r.nodes[n - 1 - i]);
  }
  CHECK_THROWS_AS(clenshaw_curtis(0), QuadratureError);
}

TEST_CASE("Halton points") {
  CHECK(radical_inverse(1, 2) == 0.5);
  CHECK(radical_inverse(6, 2) == 0.375);
  CHECK(radical_inverse(5, 3) == doctest::Approx(7.0 / 9.0).epsilon(1e-15));
  const auto p0 = halton_point(0, 3);
  CHECK(p0[0] == 0.0);
  CHECK(p0[1] == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
  CHECK(p0[2] == doctest::Approx(-0.6).epsilon(1e-15));
  const auto p1 = halton_point(1, 2);
  CHECK(p1[0] == -0.5);
  CHECK(p1[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(halton_point(4, kMaxHaltonDimension).size() == kMaxHaltonDimension);
  CHECK_THROWS_AS(halton_point(0, kMaxHaltonDimension + 1), QuadratureError);
  CHECK_THROWS_AS(qmc_rule(1, 17), QuadratureError);
}

TEST_CASE("rule sizes") {
  CHECK(sample_count(Family::monte_carlo, 0) == 10);
  CHECK(sample_count(Family::monte_carlo, 3) == 640);
  CHECK(sample_count(Family::qmc_halton, 3) == 80);
  const std::size_t cc6[] = {1, 13, 85, 389, 1457, 4865};
  for (int l = 0; l < 6; ++l) CHECK(cc_sparse_rule(l, 6).size() == cc6[l]);
  CHECK(cc_sparse_rule(2, 1).size() == 5);
  CHECK(cc_sparse_rule(3, 2).size() == 29);
}

TEST_CASE("plain rules are normalised and lie in the cube") {
  for (Family f : {Family::monte_carlo, Family::qmc_halton, Family::cc_sparse}) {
    for (int l = 0; l <= 3; ++l) {
      const auto r = make_rule(f, l, 4, 7);
      CHECK(r.nodes.size() == r.size() * 4);
      CHECK(weight_sum(r) == doctest::Approx(1.0).epsilon(1e-13));
      for (double x : r.nodes) {
        CHECK(x >= -1.0);
        CHECK(x <= 1.0);
      }
      CHECK_FALSE(r.difference);
    }
  }
}

TEST_CASE("rules are prefix nested bit-exactly") {
  for (Family f : {Family::monte_carlo, Family::qmc_halton, Family::cc_sparse}) {
    for (int l = 1; l <= 4; ++l) {
      const auto fine = make_rule(f, l, 3, 42);
      const auto coarse = make_rule(f, l - 1, 3, 42);
      REQUIRE(fine.nested_prefix);
      CHECK(*fine.nested_prefix == coarse.size());
      for (std::size_t i = 0; i < coarse.size() * 3; ++i) CHECK(fine.nodes[i] == coarse.nodes[i]);
    }
  }
  CHECK_FALSE(qmc_rule(0, 2).nested_prefix);
}

TEST_CASE("sparse grid integrates total degree 2l+1 exactly") {
  for (std::size_t m = 1; m <= 3; ++m) {
    for (int l = 0; l <= 4; ++l) {
      const auto r = cc_sparse_rule(l, m);
      std::vector<int> k(m, 0);
      for_each_exponent(m, 2 * l + 1, k, 0, 2 * l + 1, [&](const std::vector<int>& e) {
        const double q = integrate(r, [&](std::span<const double> y) {
          double v = 1.0;
          for (std::size_t a = 0; a < m; ++a) v *= std::pow(y[a], e[a]);
          return v;
        });
        CHECK(std::abs(q - monomial_mean(e)) < 1e-12);
      });
    }
  }
}

TEST_CASE("sparse grid matches a dense tensor oracle on a smooth integrand") {
  // Gauss-Legendre tensor product is exact to rounding for this entire function.
  std::vector<double> x, w;
  oracle::gauss_legendre(20, x, w);
  const auto f = [](std::span<const double> y) { return std::exp(0.3 * y[0] - 0.2 * y[1]) / (2.0 + y[0] * y[1]); };
  double dense = 0.0;
  for (std::size_t a = 0; a < x.size(); ++a)
    for (std::size_t b = 0; b < x.size(); ++b) {
      const double y[2] = {x[a], x[b]};
      dense += 0.25 * w[a] * w[b] * f(y);
    }
  double prev = 1.0;
  for (int l = 2; l <= 8; l += 2) {
    const double err = std::abs(integrate(cc_sparse_rule(l, 2), f) - dense);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 1e-9);
}

TEST_CASE("difference rules telescope") {
  for (Family f : {Family::monte_carlo, Family::qmc_halton, Family::cc_sparse}) {
    const std::size_t m = 3;
    const auto g = [](std::span<const double> y) { return std::cos(y[0] + 0.5 * y[1]) * (1.0 + 0.1 * y[2]); };
    for (int j = 0; j <= 4; ++j) {
      double sum = 0.0;
      for (int l = 0; l <= j; ++l) {
        const auto d = difference_rule(f, l, m, 5);
        CHECK(d.difference == (l > 0));
        CHECK(weight_sum(d) == doctest::Approx(l == 0 ? 1.0 : 0.0).epsilon(1e-13));
        sum += integrate(d, g);
      }
      CHECK(std::abs(sum - integrate(make_rule(f, j, m, 5), g)) < 1e-13);
    }
  }
}

TEST_CASE("QMC difference rule on level one") {
  const auto d = difference_rule(Family::qmc_halton, 1, 2);
  REQUIRE(d.size() == 20);
  for (std::size_t i = 0; i < 10; ++i) CHECK(d.weights[i] == doctest::Approx(1.0 / 20 - 1.0 / 10).epsilon(1e-15));
  for (std::size_t i = 10; i < 20; ++i) CHECK(d.weights[i] == doctest::Approx(1.0 / 20).epsilon(1e-15));
  const auto d0 = difference_rule(Family::qmc_halton, 0, 2);
  CHECK(d0.nodes == qmc_rule(0, 2).nodes);
  CHECK(d0.weights == qmc_rule(0, 2).weights);
}

TEST_CASE("Monte Carlo draws are reproducible and seed dependent") {
  const auto a = mc_rule(2, 3, 99);
  const auto b = mc_rule(2, 3, 99);
  const auto c = mc_rule(2, 3, 100);
  CHECK(a.nodes == b.nodes);
  CHECK(a.nodes != c.nodes);
  const std::vector<double> flat(1000, 1.0 / 3.0);
  CHECK(pairwise_sum(flat) == doctest::Approx(1000.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("rule CSV") {
  std::ostringstream os;
  write_rule_csv(os, qmc_rule(0, 2));
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "y_1,y_2,weight");
  std::size_t rows = 0;
  while (std::getline(is, line)) rows += !line.empty();
  CHECK(rows == 10);
}

TEST_CASE("names and invalid input") {
  CHECK(parse_family("mc") == Family::monte_carlo);
  CHECK(parse_family("qmc") == Family::qmc_halton);
  CHECK(parse_family("cc") == Family::cc_sparse);
  CHECK(to_string(Family::cc_sparse) == "cc");
  CHECK_THROWS_AS(parse_family("sobol"), QuadratureError);
  CHECK_THROWS_AS(make_rule(Family::qmc_halton, 1, 0), QuadratureError);
  CHECK_THROWS_AS(make_rule(Family::cc_sparse, -1, 2), QuadratureError);
  CHECK_THROWS_AS(difference_of(qmc_rule(1, 2), std::make_unique<QuadratureRule>(qmc_rule(0, 3)).get()),
                  QuadratureError);
}
