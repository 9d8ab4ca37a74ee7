#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "mlq/mesh.hpp"

using namespace mlq;

namespace {

MeshPtr make(Domain d, int level, std::uint64_t seed = 11) {
  const double h0 = d == Domain::unit_disk ? 0.6 : 0.5;
  return std::make_shared<const Mesh>(generate_mesh(d, h0 * std::ldexp(1.0, -level), seed, level));
}

Mesh cross_mesh() {
  std::vector<Point2> v = {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}};
  std::vector<std::array<int, 3>> t = {{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}};
  return Mesh(v, t, {1, 1, 1, 1, 0});
}

}  // namespace

TEST_CASE("generated meshes satisfy the structural and quality invariants") {
  for (Domain d : {Domain::unit_disk, Domain::unit_square}) {
    for (int level = 0; level <= 5; ++level) {
      const auto m = make(d, level);
      CHECK_NOTHROW(m->validate());
      for (std::size_t t = 0; t < m->num_triangles(); ++t) CHECK(m->signed_area(t) > 0.0);
      CHECK(m->num_interior() >= 3);
    }
  }
}

TEST_CASE("h_measured tracks the requested size") {
  for (Domain d : {Domain::unit_disk, Domain::unit_square}) {
    const double h0 = d == Domain::unit_disk ? 0.6 : 0.5;
    for (int level = 1; level <= 5; ++level) {
      const auto m = make(d, level);
      const double ratio = m->h_measured() / (h0 * std::ldexp(1.0, -level));
      CHECK(ratio > 0.7);
      CHECK(ratio < 1.6);
    }
  }
}

TEST_CASE("longest edge equals h_measured") {
  const auto m = make(Domain::unit_square, 2);
  double longest = 0.0;
  for (const auto& t : m->triangles()) {
    for (int k = 0; k < 3; ++k) {
      const auto a = m->vertices()[t[k]], b = m->vertices()[t[(k + 1) % 3]];
      longest = std::max(longest, std::hypot(a.x - b.x, a.y - b.y));
    }
  }
  CHECK(m->h_measured() == longest);
}

TEST_CASE("boundary vertices lie on the domain boundary") {
  const auto disk = make(Domain::unit_disk, 3);
  for (std::size_t v = 0; v < disk->num_vertices(); ++v) {
    const auto p = disk->vertices()[v];
    if (disk->is_boundary(static_cast<int>(v))) {
      CHECK(std::hypot(p.x, p.y) == doctest::Approx(1.0).epsilon(1e-14));
    } else {
      CHECK(std::hypot(p.x, p.y) < 1.0);
    }
  }
  const auto sq = make(Domain::unit_square, 3);
  for (std::size_t v = 0; v < sq->num_vertices(); ++v) {
    const auto p = sq->vertices()[v];
    const bool on = p.x == 0.0 || p.y == 0.0 || p.x == 1.0 || p.y == 1.0;
    CHECK(on == sq->is_boundary(static_cast<int>(v)));
  }
}

TEST_CASE("generation is deterministic in the seed and meshes are not nested") {
  const auto a = make(Domain::unit_square, 3, 5);
  const auto b = make(Domain::unit_square, 3, 5);
  const auto c = make(Domain::unit_square, 3, 6);
  CHECK(a->same_as(*b));
  CHECK_FALSE(a->same_as(*c));

  const auto coarse = make(Domain::unit_disk, 2, 1);
  const auto fine = make(Domain::unit_disk, 3, 2);
  std::set<std::pair<double, double>> fine_pts;
  for (const auto& p : fine->vertices()) fine_pts.insert({p.x, p.y});
  std::size_t shared_interior = 0;
  for (std::size_t v = 0; v < coarse->num_vertices(); ++v) {
    const auto p = coarse->vertices()[v];
    if (!coarse->is_boundary(static_cast<int>(v)) && fine_pts.count({p.x, p.y})) ++shared_interior;
  }
  CHECK(shared_interior == 0);
}

TEST_CASE("invalid mesh sizes are rejected") {
  CHECK_THROWS_AS(generate_mesh(Domain::unit_square, 0.0, 1), MeshError);
  CHECK_THROWS_AS(generate_mesh(Domain::unit_square, 1.5, 1), MeshError);
  CHECK_THROWS_AS(generate_mesh(Domain::unit_square, -0.1, 1), MeshError);
}

TEST_CASE("validate rejects broken meshes") {
  std::vector<Point2> v = {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}};
  // clockwise triangle
  CHECK_THROWS_AS(Mesh(v, {{0, 4, 1}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}}, {1, 1, 1, 1, 0}).validate(),
                  MeshError);
  // hull edge with an unflagged endpoint
  CHECK_THROWS_AS(Mesh(v, {{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}}, {1, 1, 1, 0, 0}).validate(),
                  MeshError);
  CHECK_NOTHROW(cross_mesh().validate());
}

TEST_CASE("locate returns barycentrics that reproduce the point") {
  const auto m = make(Domain::unit_disk, 3);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.95, 0.95);
  for (int i = 0; i < 500; ++i) {
    const Point2 x{u(rng) * 0.7, u(rng) * 0.7};
    const auto loc = locate_point(*m, x);
    REQUIRE(loc);
    const auto& t = m->triangles()[loc->triangle];
    double px = 0, py = 0, sum = 0;
    for (int k = 0; k < 3; ++k) {
      CHECK(loc->barycentric[k] >= -kBarycentricTolerance);
      px += loc->barycentric[k] * m->vertices()[t[k]].x;
      py += loc->barycentric[k] * m->vertices()[t[k]].y;
      sum += loc->barycentric[k];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(px == doctest::Approx(x.x).epsilon(1e-12));
    CHECK(py == doctest::Approx(x.y).epsilon(1e-12));
  }
  CHECK_FALSE(locate_point(*m, {1.5, 0.0}));
}

TEST_CASE("indexed and brute-force location agree, ties to the lowest index") {
  for (int level : {2, 5}) {
    const auto m = make(Domain::unit_square, level);
    // vertices and edge midpoints are shared by several triangles
    for (std::size_t t = 0; t < m->num_triangles(); t += 7) {
      const auto& tri = m->triangles()[t];
      const auto a = m->vertices()[tri[0]], b = m->vertices()[tri[1]];
      for (Point2 x : {a, Point2{(a.x + b.x) / 2, (a.y + b.y) / 2}}) {
        const auto i = m->locate_indexed(x);
        REQUIRE(i);
        int lowest = -1;
        for (std::size_t s = 0; s < m->num_triangles() && lowest < 0; ++s) {
          const auto& q = m->triangles()[s];
          const auto p0 = m->vertices()[q[0]], p1 = m->vertices()[q[1]], p2 = m->vertices()[q[2]];
          const double area = (p1.x - p0.x) * (p2.y - p0.y) - (p1.y - p0.y) * (p2.x - p0.x);
          const double l0 = ((p1.x - x.x) * (p2.y - x.y) - (p1.y - x.y) * (p2.x - x.x)) / area;
          const double l1 = ((p2.x - x.x) * (p0.y - x.y) - (p2.y - x.y) * (p0.x - x.x)) / area;
          const double l2 = 1.0 - l0 - l1;
          if (l0 >= -1e-10 && l1 >= -1e-10 && l2 >= -1e-10) lowest = static_cast<int>(s);
        }
        CHECK(i->triangle == lowest);
        CHECK(m->locate(x)->triangle == lowest);
      }
    }
  }
}

TEST_CASE("transfer reproduces linear fields and zeroes points outside") {
  const auto src = make(Domain::unit_square, 2, 1);
  const auto dst = make(Domain::unit_square, 4, 2);
  const auto lin = [](Point2 p) { return 2.0 * p.x - 3.0 * p.y + 0.5; };
  ScalarField f{src, {}};
  for (const auto& p : src->vertices()) f.values.push_back(lin(p));
  const auto g = interpolate_field(f, dst);
  for (std::size_t v = 0; v < dst->num_vertices(); ++v) {
    CHECK(g.values[v] == doctest::Approx(lin(dst->vertices()[v])).epsilon(1e-12));
  }

  // disk boundary vertices sit outside coarser inscribed polygons
  const auto dsrc = make(Domain::unit_disk, 1, 1);
  const auto ddst = make(Domain::unit_disk, 3, 2);
  Transfer tr(*dsrc, *ddst);
  CHECK(tr.outside_count() > 0);
  std::vector<double> ones(dsrc->num_vertices(), 1.0), out(ddst->num_vertices());
  tr.apply(ones, out);
  std::size_t zeros = 0;
  for (double v : out) zeros += v == 0.0;
  CHECK(zeros == tr.outside_count());
}

TEST_CASE("transfer onto the same mesh is the identity") {
  const auto m = make(Domain::unit_disk, 2);
  ScalarField f{m, {}};
  for (std::size_t v = 0; v < m->num_vertices(); ++v) f.values.push_back(std::sin(double(v)));
  CHECK(interpolate_field(f, m).values == f.values);
}

TEST_CASE("mesh files round-trip bit-exactly") {
  const auto m = make(Domain::unit_disk, 2);
  std::vector<double> field;
  for (const auto& p : m->vertices()) field.push_back(std::exp(p.x) / 3.0);
  std::vector<std::string> comments = {"a comment", "seed 11"};
  std::stringstream ss;
  write_mesh(ss, *m, &field, comments);
  const auto back = read_mesh(ss);
  CHECK(back.mesh->same_as(*m));
  REQUIRE(back.field);
  CHECK(*back.field == field);
  CHECK(back.comments == comments);

  std::stringstream bad("vertices 3 triangles 1\n0 0 1\n1 0 1\n");
  CHECK_THROWS_AS(read_mesh(bad), MeshError);
}

TEST_CASE("domain names parse") {
  CHECK(parse_domain("unit_disk") == Domain::unit_disk);
  CHECK(parse_domain("unit_square") == Domain::unit_square);
  CHECK(to_string(Domain::unit_disk) == "unit_disk");
  CHECK_THROWS(parse_domain("unit_ball"));
}
