#include "mlq/quad.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>

#include "text.hpp"

namespace mlq {

namespace {

constexpr unsigned kPrimes[kMaxHaltonDimension] = {2,  3,  5,  7,  11, 13, 17, 19,
                                                   23, 29, 31, 37, 41, 43, 47, 53};

void check_level(int level) {
  if (level < 0 || level > 30) throw QuadratureError("quadrature level out of range: " + std::to_string(level));
}

void check_dimension(std::size_t m) {
  if (m == 0) throw QuadratureError("parameter dimension must be positive");
}

// Node c of the Chebyshev-extrema grid with n intervals, n a power of two.
// The reduced fraction makes the value independent of the grid it came from.
double cc_node(std::int64_t c, std::int64_t n) {
  if (2 * c == n) return 0.0;
  if (2 * c > n) return -cc_node(n - c, n);
  while (n > 1 && c % 2 == 0) {
    c /= 2;
    n /= 2;
  }
  return std::cos(std::numbers::pi * static_cast<double>(c) / static_cast<double>(n));
}

// First Clenshaw-Curtis level containing grid node c.
int birth_level(std::int64_t c, std::int64_t n) {
  if (2 * c == n) return 1;
  while (n > 1 && c % 2 == 0) {
    c /= 2;
    n /= 2;
  }
  if (n == 1) return 2;
  return std::countr_zero(static_cast<std::uint64_t>(n)) + 1;
}

// splitmix64 finalizer over (seed, counter): draw c depends only on c, so
// every level's rule is a prefix of the next and draws can be made in any order.
std::uint64_t counter_draw(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (counter + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// All multi-indices i >= 1 with |i| in [lo, hi], lexicographic.
void enumerate(std::vector<int>& idx, std::size_t pos, int remaining_lo, int remaining_hi,
               const std::function<void(const std::vector<int>&)>& visit) {
  const auto m = idx.size();
  if (pos == m) {
    if (remaining_lo <= 0 && remaining_hi >= 0) visit(idx);
    return;
  }
  const int rest = static_cast<int>(m - pos - 1);
  for (int i = 1; i <= remaining_hi - rest; ++i) {
    idx[pos] = i;
    enumerate(idx, pos + 1, remaining_lo - i, remaining_hi - i, visit);
  }
}

double pairwise(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise(v, half) + pairwise(v + half, n - half);
}

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::monte_carlo:
      return "mc";
    case Family::qmc_halton:
      return "qmc";
    case Family::cc_sparse:
      return "cc";
  }
  return "?";
}

Family parse_family(std::string_view text) {
  const auto t = detail::trim(text);
  if (t == "mc" || t == "monte_carlo") return Family::monte_carlo;
  if (t == "qmc" || t == "qmc_halton" || t == "halton") return Family::qmc_halton;
  if (t == "cc" || t == "cc_sparse" || t == "sparse") return Family::cc_sparse;
  throw QuadratureError("unknown quadrature family '" + std::string(t) + "'");
}

double radical_inverse(std::uint64_t n, unsigned base) {
  const double inv = 1.0 / base;
  double scale = inv;
  double r = 0.0;
  while (n > 0) {
    r += static_cast<double>(n % base) * scale;
    n /= base;
    scale *= inv;
  }
  return r;
}

std::vector<double> halton_point(std::size_t index, std::size_t m) {
  if (m > kMaxHaltonDimension) {
    throw QuadratureError("Halton points support at most " + std::to_string(kMaxHaltonDimension) +
                          " dimensions, got " + std::to_string(m));
  }
  std::vector<double> p(m);
  for (std::size_t k = 0; k < m; ++k) p[k] = 2.0 * radical_inverse(index + 1, kPrimes[k]) - 1.0;
  return p;
}

std::size_t sample_count(Family family, int level) {
  check_level(level);
  switch (family) {
    case Family::monte_carlo:
      return std::size_t{10} << (2 * level);
    case Family::qmc_halton:
      return std::size_t{10} << level;
    case Family::cc_sparse:
      throw QuadratureError("sparse grid sizes depend on the dimension");
  }
  return 0;
}

QuadratureRule mc_rule(int level, std::size_t m, std::uint64_t seed) {
  check_dimension(m);
  const std::size_t n = sample_count(Family::monte_carlo, level);
  QuadratureRule rule{Family::monte_carlo, level, m, {}, {}, std::nullopt, false};
  rule.nodes.resize(n * m);
  for (std::size_t c = 0; c < rule.nodes.size(); ++c) {
    rule.nodes[c] = 2.0 * (static_cast<double>(counter_draw(seed, c) >> 11) * 0x1.0p-53) - 1.0;
  }
  rule.weights.assign(n, 1.0 / static_cast<double>(n));
  if (level > 0) rule.nested_prefix = sample_count(Family::monte_carlo, level - 1);
  return rule;
}

QuadratureRule qmc_rule(int level, std::size_t m) {
  check_dimension(m);
  const std::size_t n = sample_count(Family::qmc_halton, level);
  QuadratureRule rule{Family::qmc_halton, level, m, {}, {}, std::nullopt, false};
  rule.nodes.reserve(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = halton_point(i, m);
    rule.nodes.insert(rule.nodes.end(), p.begin(), p.end());
  }
  rule.weights.assign(n, 1.0 / static_cast<double>(n));
  if (level > 0) rule.nested_prefix = sample_count(Family::qmc_halton, level - 1);
  return rule;
}

Rule1d clenshaw_curtis(int j) {
  if (j < 1 || j > 30) throw QuadratureError("Clenshaw-Curtis level must be in [1, 30]");
  if (j == 1) return {{0.0}, {2.0}};
  const std::int64_t n = std::int64_t{1} << (j - 1);
  Rule1d r;
  r.nodes.resize(n + 1);
  r.weights.resize(n + 1);
  for (std::int64_t k = 0; k <= n / 2; ++k) {
    double s = 0.0;
    for (std::int64_t i = 1; i <= n / 2; ++i) {
      const double b = (2 * i == n) ? 1.0 : 2.0;
      s += b / static_cast<double>(4 * i * i - 1) *
           std::cos(2.0 * std::numbers::pi * static_cast<double>(i * k) / static_cast<double>(n));
    }
    const double c = (k == 0) ? 1.0 : 2.0;
    const double w = c / static_cast<double>(n) * (1.0 - s);
    r.weights[k] = w;
    r.weights[n - k] = w;
    r.nodes[k] = cc_node(k, n);
    r.nodes[n - k] = cc_node(n - k, n);
  }
  return r;
}

QuadratureRule cc_sparse_rule(int level, std::size_t m) {
  check_level(level);
  check_dimension(m);
  const int md = static_cast<int>(m);
  const int top = std::max(level + 1, 2);
  const std::int64_t n = std::int64_t{1} << (top - 1);

  std::vector<Rule1d> rules1d(static_cast<std::size_t>(top) + 1);
  for (int j = 1; j <= top; ++j) rules1d[j] = clenshaw_curtis(j);
  const auto canonical = [&](int j, std::size_t k) -> std::int64_t {
    if (j == 1) return n / 2;
    return static_cast<std::int64_t>(k) << (top - j);
  };

  std::map<std::vector<std::int64_t>, double> acc;
  std::vector<int> idx(m);
  const int q = level + md;
  enumerate(idx, 0, std::max(md, level + 1), q, [&](const std::vector<int>& i) {
    int norm = 0;
    for (int v : i) norm += v;
    const int d = q - norm;
    const double coef = ((d % 2) ? -1.0 : 1.0) * binomial(md - 1, d);
    std::vector<std::size_t> k(m, 0);
    std::vector<std::int64_t> key(m);
    while (true) {
      double w = coef;
      for (std::size_t a = 0; a < m; ++a) {
        w *= rules1d[i[a]].weights[k[a]];
        key[a] = canonical(i[a], k[a]);
      }
      acc[key] += w;
      std::size_t a = 0;
      for (; a < m; ++a) {
        if (++k[a] < rules1d[i[a]].nodes.size()) break;
        k[a] = 0;
      }
      if (a == m) break;
    }
  });

  struct Entry {
    int birth;
    std::vector<double> x;
    double w;
  };
  std::vector<Entry> entries;
  entries.reserve(acc.size());
  const double density = std::ldexp(1.0, -md);
  for (const auto& [key, w] : acc) {
    Entry e{0, std::vector<double>(m), w * density};
    for (std::size_t a = 0; a < m; ++a) {
      e.birth += birth_level(key[a], n);
      e.x[a] = cc_node(key[a], n);
    }
    entries.push_back(std::move(e));
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.birth != b.birth) return a.birth < b.birth;
    return a.x < b.x;
  });

  QuadratureRule rule{Family::cc_sparse, level, m, {}, {}, std::nullopt, false};
  rule.nodes.reserve(entries.size() * m);
  std::size_t prefix = 0;
  for (const auto& e : entries) {
    rule.nodes.insert(rule.nodes.end(), e.x.begin(), e.x.end());
    rule.weights.push_back(e.w);
    if (e.birth <= level - 1 + md) ++prefix;
  }
  if (level > 0) rule.nested_prefix = prefix;
  return rule;
}

QuadratureRule make_rule(Family family, int level, std::size_t m, std::uint64_t seed) {
  switch (family) {
    case Family::monte_carlo:
      return mc_rule(level, m, seed);
    case Family::qmc_halton:
      return qmc_rule(level, m);
    case Family::cc_sparse:
      return cc_sparse_rule(level, m);
  }
  throw QuadratureError("unknown family");
}

DifferenceRule difference_of(const QuadratureRule& fine, const QuadratureRule* coarse) {
  DifferenceRule out = fine;
  out.difference = coarse != nullptr;
  out.nested_prefix.reset();
  if (!coarse) return out;
  if (coarse->dimension != fine.dimension) {
    throw QuadratureError("difference of rules with different dimensions");
  }
  const std::size_t m = fine.dimension;
  const auto bits = [m](std::span<const double> x) {
    std::vector<std::uint64_t> b(m);
    for (std::size_t a = 0; a < m; ++a) b[a] = std::bit_cast<std::uint64_t>(x[a]);
    return b;
  };
  std::map<std::vector<std::uint64_t>, std::size_t> where;
  for (std::size_t i = 0; i < fine.size(); ++i) where.emplace(bits(fine.node(i)), i);
  for (std::size_t i = 0; i < coarse->size(); ++i) {
    const auto it = where.find(bits(coarse->node(i)));
    if (it != where.end()) {
      out.weights[it->second] = fine.weights[it->second] - coarse->weights[i];
    } else {
      const auto x = coarse->node(i);
      out.nodes.insert(out.nodes.end(), x.begin(), x.end());
      out.weights.push_back(-coarse->weights[i]);
    }
  }
  return out;
}

DifferenceRule difference_rule(Family family, int level, std::size_t m, std::uint64_t seed) {
  const QuadratureRule fine = make_rule(family, level, m, seed);
  if (level == 0) return difference_of(fine, nullptr);
  const QuadratureRule coarse = make_rule(family, level - 1, m, seed);
  return difference_of(fine, &coarse);
}

double pairwise_sum(std::span<const double> values) { return pairwise(values.data(), values.size()); }

double integrate(const QuadratureRule& rule,
                 const std::function<double(std::span<const double>)>& integrand) {
  std::vector<double> terms(rule.size());
  for (std::size_t i = 0; i < rule.size(); ++i) terms[i] = rule.weights[i] * integrand(rule.node(i));
  return pairwise_sum(terms);
}

void write_rule_csv(std::ostream& os, const QuadratureRule& rule) {
  for (std::size_t a = 0; a < rule.dimension; ++a) os << "y_" << (a + 1) << ',';
  os << "weight\n";
  for (std::size_t i = 0; i < rule.size(); ++i) {
    for (double x : rule.node(i)) os << detail::fmt17(x) << ',';
    os << detail::fmt17(rule.weights[i]) << '\n';
  }
}

}  // namespace mlq
