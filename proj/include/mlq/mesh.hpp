#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mlq {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

enum class Domain { unit_disk, unit_square };

std::string_view to_string(Domain domain);
Domain parse_domain(std::string_view name);

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Limits checked by Mesh::validate().
struct MeshQuality {
  double max_radius_ratio = 10.0;  // circumradius / inradius
  double max_edge_ratio = 8.0;     // longest / shortest edge over the mesh
};

/// Result of a successful point location.
struct Location {
  int triangle = -1;
  std::array<double, 3> barycentric{};
};

/// Immutable simplicial triangulation of a 2D domain.
///
/// Triangles are stored counter-clockwise. Every mesh carries a uniform bucket
/// grid; locate() scans all triangles below kBruteForceLocateLimit and uses the
/// grid above it.
class Mesh {
 public:
  Mesh(std::vector<Point2> vertices, std::vector<std::array<int, 3>> triangles,
       std::vector<std::uint8_t> boundary, int level_hint = 0);

  const std::vector<Point2>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<std::uint8_t>& boundary() const { return boundary_; }
  bool is_boundary(int v) const { return boundary_[static_cast<std::size_t>(v)] != 0; }

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }
  std::size_t num_interior() const { return num_interior_; }
  int level_hint() const { return level_hint_; }

  /// Longest edge over all triangles.
  double h_measured() const { return h_measured_; }
  double min_edge() const { return min_edge_; }

  double signed_area(std::size_t t) const;
  Point2 centroid(std::size_t t) const;

  /// Throws MeshError if any structural or quality invariant is violated.
  void validate(const MeshQuality& quality = {}) const;

  /// Finds the lowest-index triangle containing x (barycentric tolerance 1e-10).
  std::optional<Location> locate(Point2 x) const;
  /// Same answer as locate() through the bucket grid at every mesh size.
  std::optional<Location> locate_indexed(Point2 x) const;

  /// Exact structural equality (vertex coordinates bit-for-bit, triangles, flags).
  bool same_as(const Mesh& other) const;

 private:
  bool contains(std::size_t t, Point2 x, std::array<double, 3>& bary) const;
  void build_buckets();

  std::vector<Point2> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<std::uint8_t> boundary_;
  int level_hint_ = 0;
  std::size_t num_interior_ = 0;
  double h_measured_ = 0.0;
  double min_edge_ = 0.0;

  // bucket grid
  Point2 lo_{};
  double cell_ = 0.0;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<std::uint32_t> bucket_start_;
  std::vector<std::uint32_t> bucket_items_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// P1 nodal field bound to a mesh.
struct ScalarField {
  MeshPtr mesh;
  std::vector<double> values;
};

inline constexpr double kBarycentricTolerance = 1e-10;
inline constexpr std::size_t kBruteForceLocateLimit = 10000;

/// Quasi-uniform triangulation of a built-in domain. Interior points of a
/// structured layout are jittered by 0.2 of the spacing using `seed` and then
/// Delaunay-triangulated, so meshes with different seeds or sizes are not nested.
Mesh generate_mesh(Domain domain, double h_target, std::uint64_t seed, int level_hint = 0);

std::optional<Location> locate_point(const Mesh& mesh, Point2 x);

/// Precomputed P1 evaluation of fields on `source` at the vertices of `target`.
/// Target vertices outside the source triangulation map to zero.
class Transfer {
 public:
  Transfer(const Mesh& source, const Mesh& target);

  void apply(std::span<const double> source_values, std::span<double> out) const;
  std::size_t outside_count() const { return outside_; }

 private:
  bool identity_ = false;
  std::size_t source_size_ = 0;
  std::vector<std::array<int, 3>> vertices_;
  std::vector<std::array<double, 3>> weights_;
  std::size_t outside_ = 0;
};

ScalarField interpolate_field(const ScalarField& source, const MeshPtr& target);

// Plain-text mesh format:
//   optional "# ..." comment lines
//   vertices N triangles M
//   N lines "x y boundary_flag"
//   M lines "i j k"
//   optional "field N" followed by N values
// Reals are written with 17 significant digits.
void write_mesh(std::ostream& os, const Mesh& mesh, const std::vector<double>* field = nullptr,
                std::span<const std::string> comments = {});

struct MeshFile {
  MeshPtr mesh;
  std::optional<std::vector<double>> field;
  std::vector<std::string> comments;
};

MeshFile read_mesh(std::istream& is);

}  // namespace mlq
