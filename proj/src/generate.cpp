#include <cmath>
#include <numbers>
#include <random>

#include "delaunay.hpp"
#include "mlq/mesh.hpp"

namespace mlq {

namespace {

// Structured spacing relative to the requested mesh size. Longest Delaunay
// edges of the jittered layouts come out close to h_target with these.
constexpr double kSquareSpacing = 0.68;
constexpr double kDiskSpacing = 0.82;
constexpr double kJitter = 0.2;

class Jitter {
 public:
  explicit Jitter(std::uint64_t seed) : engine_(seed) {}

  // uniform on [-1, 1), bit-identical across standard libraries
  double symmetric() {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return 2.0 * u - 1.0;
  }

 private:
  std::mt19937_64 engine_;
};

struct Layout {
  std::vector<Point2> points;
  std::vector<std::uint8_t> boundary;
};

Layout square_layout(double h_target, Jitter& jitter) {
  const int n = std::max(2, static_cast<int>(std::ceil(1.0 / (kSquareSpacing * h_target))));
  const double s = 1.0 / n;
  Layout out;
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      const bool on_boundary = i == 0 || j == 0 || i == n || j == n;
      Point2 p{static_cast<double>(i) / n, static_cast<double>(j) / n};
      if (!on_boundary) {
        p.x += kJitter * s * jitter.symmetric();
        p.y += kJitter * s * jitter.symmetric();
      }
      out.points.push_back(p);
      out.boundary.push_back(on_boundary ? 1 : 0);
    }
  }
  return out;
}

Layout disk_layout(double h_target, Jitter& jitter) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double s = kDiskSpacing * h_target;
  const int steps = std::max(2, static_cast<int>(std::lround(1.0 / (s * std::sqrt(3.0) / 2.0))));
  const double dr = 1.0 / steps;
  Layout out;

  const int nb = std::max(8, static_cast<int>(std::lround(two_pi / s)));
  const double offset = two_pi * 0.5 * (jitter.symmetric() + 1.0) / nb;
  for (int i = 0; i < nb; ++i) {
    const double theta = offset + two_pi * i / nb;
    out.points.push_back({std::cos(theta), std::sin(theta)});
    out.boundary.push_back(1);
  }
  for (int k = 1; k < steps; ++k) {
    const double r = 1.0 - k * dr;
    const int count = std::max(3, static_cast<int>(std::lround(two_pi * r / s)));
    const double ring_offset = two_pi * 0.5 * (jitter.symmetric() + 1.0) / count;
    for (int i = 0; i < count; ++i) {
      const double theta = ring_offset + two_pi * i / count;
      const double jx = kJitter * s * jitter.symmetric();
      const double jy = kJitter * s * jitter.symmetric();
      out.points.push_back({r * std::cos(theta) + jx, r * std::sin(theta) + jy});
      out.boundary.push_back(0);
    }
  }
  const double jx = kJitter * s * jitter.symmetric();
  const double jy = kJitter * s * jitter.symmetric();
  out.points.push_back({jx, jy});
  out.boundary.push_back(0);
  return out;
}

}  // namespace

Mesh generate_mesh(Domain domain, double h_target, std::uint64_t seed, int level_hint) {
  if (!(h_target > 0.0) || h_target > 1.0) {
    throw MeshError("h_target must lie in (0, 1], got " + std::to_string(h_target));
  }
  Jitter jitter(seed);
  Layout layout = domain == Domain::unit_disk ? disk_layout(h_target, jitter)
                                              : square_layout(h_target, jitter);
  std::size_t interior = 0;
  for (auto b : layout.boundary) interior += b == 0 ? 1 : 0;
  if (interior < 3) {
    throw MeshError("h_target " + std::to_string(h_target) +
                    " is too coarse: fewer than 3 interior vertices");
  }
  auto triangles = detail::delaunay_triangulate(layout.points);
  Mesh mesh(std::move(layout.points), std::move(triangles), std::move(layout.boundary), level_hint);
  mesh.validate();
  return mesh;
}

}  // namespace mlq
