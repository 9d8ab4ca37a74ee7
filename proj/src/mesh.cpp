#include "mlq/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <utility>

#include "text.hpp"

namespace mlq {

std::string_view to_string(Domain domain) {
  switch (domain) {
    case Domain::unit_disk:
      return "unit_disk";
    case Domain::unit_square:
      return "unit_square";
  }
  return "unknown";
}

Domain parse_domain(std::string_view name) {
  if (name == "unit_disk") return Domain::unit_disk;
  if (name == "unit_square") return Domain::unit_square;
  throw std::invalid_argument("unknown domain '" + std::string(name) + "'");
}

namespace {

double edge_length(const Point2& a, const Point2& b) { return std::hypot(b.x - a.x, b.y - a.y); }

}  // namespace

Mesh::Mesh(std::vector<Point2> vertices, std::vector<std::array<int, 3>> triangles,
           std::vector<std::uint8_t> boundary, int level_hint)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      boundary_(std::move(boundary)),
      level_hint_(level_hint) {
  if (boundary_.size() != vertices_.size()) {
    throw MeshError("boundary flag count does not match vertex count");
  }
  if (triangles_.empty()) throw MeshError("mesh has no triangles");
  const int nv = static_cast<int>(vertices_.size());
  h_measured_ = 0.0;
  min_edge_ = std::numeric_limits<double>::max();
  for (const auto& t : triangles_) {
    for (int k = 0; k < 3; ++k) {
      if (t[k] < 0 || t[k] >= nv) throw MeshError("triangle references a missing vertex");
      const double len = edge_length(vertices_[t[k]], vertices_[t[(k + 1) % 3]]);
      h_measured_ = std::max(h_measured_, len);
      min_edge_ = std::min(min_edge_, len);
    }
  }
  num_interior_ = static_cast<std::size_t>(std::count(boundary_.begin(), boundary_.end(), 0));
  build_buckets();
}

double Mesh::signed_area(std::size_t t) const {
  const auto& tri = triangles_[t];
  const Point2& a = vertices_[tri[0]];
  const Point2& b = vertices_[tri[1]];
  const Point2& c = vertices_[tri[2]];
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
}

Point2 Mesh::centroid(std::size_t t) const {
  const auto& tri = triangles_[t];
  const Point2& a = vertices_[tri[0]];
  const Point2& b = vertices_[tri[1]];
  const Point2& c = vertices_[tri[2]];
  return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

void Mesh::validate(const MeshQuality& quality) const {
  std::map<std::pair<int, int>, int> edge_count;
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const double area = signed_area(t);
    if (!(area > 0.0)) {
      throw MeshError("triangle " + std::to_string(t) + " has non-positive signed area");
    }
    const auto& tri = triangles_[t];
    const double a = edge_length(vertices_[tri[1]], vertices_[tri[2]]);
    const double b = edge_length(vertices_[tri[2]], vertices_[tri[0]]);
    const double c = edge_length(vertices_[tri[0]], vertices_[tri[1]]);
    const double s = 0.5 * (a + b + c);
    const double ratio = a * b * c * s / (4.0 * area * area);
    if (ratio > quality.max_radius_ratio) {
      throw MeshError("triangle " + std::to_string(t) + " has circumradius/inradius ratio " +
                      std::to_string(ratio));
    }
    for (int k = 0; k < 3; ++k) {
      const int u = tri[k], v = tri[(k + 1) % 3];
      ++edge_count[{std::min(u, v), std::max(u, v)}];
    }
  }
  for (const auto& [edge, count] : edge_count) {
    if (count > 2) throw MeshError("edge shared by more than two triangles");
    if (count == 1 && (!is_boundary(edge.first) || !is_boundary(edge.second))) {
      throw MeshError("hull edge (" + std::to_string(edge.first) + ", " +
                      std::to_string(edge.second) + ") has an interior endpoint");
    }
  }
  if (h_measured_ / min_edge_ > quality.max_edge_ratio) {
    throw MeshError("edge length ratio " + std::to_string(h_measured_ / min_edge_) +
                    " exceeds quasi-uniformity bound");
  }
}

bool Mesh::contains(std::size_t t, Point2 x, std::array<double, 3>& bary) const {
  const auto& tri = triangles_[t];
  const Point2& p0 = vertices_[tri[0]];
  const Point2& p1 = vertices_[tri[1]];
  const Point2& p2 = vertices_[tri[2]];
  const double det = (p1.y - p2.y) * (p0.x - p2.x) + (p2.x - p1.x) * (p0.y - p2.y);
  const double l0 = ((p1.y - p2.y) * (x.x - p2.x) + (p2.x - p1.x) * (x.y - p2.y)) / det;
  const double l1 = ((p2.y - p0.y) * (x.x - p2.x) + (p0.x - p2.x) * (x.y - p2.y)) / det;
  const double l2 = 1.0 - l0 - l1;
  if (l0 < -kBarycentricTolerance || l1 < -kBarycentricTolerance || l2 < -kBarycentricTolerance) {
    return false;
  }
  bary = {l0, l1, l2};
  return true;
}

void Mesh::build_buckets() {
  double xmin = vertices_[0].x, xmax = xmin, ymin = vertices_[0].y, ymax = ymin;
  for (const auto& p : vertices_) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const double w = xmax - xmin, h = ymax - ymin;
  cell_ = std::sqrt(w * h / static_cast<double>(triangles_.size())) * 1.5;
  const double pad = 1e-9 * std::max(w, h);
  lo_ = {xmin - pad, ymin - pad};
  nx_ = std::max(1, static_cast<int>(std::ceil((w + 2 * pad) / cell_)));
  ny_ = std::max(1, static_cast<int>(std::ceil((h + 2 * pad) / cell_)));

  const auto cell_range = [&](std::size_t t) {
    const auto& tri = triangles_[t];
    double tx0 = vertices_[tri[0]].x, tx1 = tx0, ty0 = vertices_[tri[0]].y, ty1 = ty0;
    for (int k = 1; k < 3; ++k) {
      tx0 = std::min(tx0, vertices_[tri[k]].x);
      tx1 = std::max(tx1, vertices_[tri[k]].x);
      ty0 = std::min(ty0, vertices_[tri[k]].y);
      ty1 = std::max(ty1, vertices_[tri[k]].y);
    }
    const double eps = 1e-8 * cell_;
    const int i0 = std::clamp(static_cast<int>((tx0 - eps - lo_.x) / cell_), 0, nx_ - 1);
    const int i1 = std::clamp(static_cast<int>((tx1 + eps - lo_.x) / cell_), 0, nx_ - 1);
    const int j0 = std::clamp(static_cast<int>((ty0 - eps - lo_.y) / cell_), 0, ny_ - 1);
    const int j1 = std::clamp(static_cast<int>((ty1 + eps - lo_.y) / cell_), 0, ny_ - 1);
    return std::array<int, 4>{i0, i1, j0, j1};
  };

  bucket_start_.assign(static_cast<std::size_t>(nx_) * ny_ + 1, 0);
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto r = cell_range(t);
    for (int j = r[2]; j <= r[3]; ++j)
      for (int i = r[0]; i <= r[1]; ++i) ++bucket_start_[static_cast<std::size_t>(j) * nx_ + i + 1];
  }
  for (std::size_t c = 1; c < bucket_start_.size(); ++c) bucket_start_[c] += bucket_start_[c - 1];
  bucket_items_.resize(bucket_start_.back());
  std::vector<std::uint32_t> fill(bucket_start_.begin(), bucket_start_.end() - 1);
  // triangles are visited in index order, so every bucket list is ascending
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto r = cell_range(t);
    for (int j = r[2]; j <= r[3]; ++j)
      for (int i = r[0]; i <= r[1]; ++i)
        bucket_items_[fill[static_cast<std::size_t>(j) * nx_ + i]++] = static_cast<std::uint32_t>(t);
  }
}

std::optional<Location> Mesh::locate(Point2 x) const {
  if (triangles_.size() >= kBruteForceLocateLimit) return locate_indexed(x);
  std::array<double, 3> bary{};
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    if (contains(t, x, bary)) return Location{static_cast<int>(t), bary};
  }
  return std::nullopt;
}

std::optional<Location> Mesh::locate_indexed(Point2 x) const {
  std::array<double, 3> bary{};
  const double fx = (x.x - lo_.x) / cell_;
  const double fy = (x.y - lo_.y) / cell_;
  if (!(fx >= 0.0 && fy >= 0.0 && fx < nx_ && fy < ny_)) return std::nullopt;
  const std::size_t c = static_cast<std::size_t>(fy) * nx_ + static_cast<std::size_t>(fx);
  for (std::uint32_t k = bucket_start_[c]; k < bucket_start_[c + 1]; ++k) {
    const std::size_t t = bucket_items_[k];
    if (contains(t, x, bary)) return Location{static_cast<int>(t), bary};
  }
  return std::nullopt;
}

bool Mesh::same_as(const Mesh& other) const {
  if (this == &other) return true;
  if (vertices_.size() != other.vertices_.size() || triangles_ != other.triangles_ ||
      boundary_ != other.boundary_) {
    return false;
  }
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (vertices_[i].x != other.vertices_[i].x || vertices_[i].y != other.vertices_[i].y) return false;
  }
  return true;
}

std::optional<Location> locate_point(const Mesh& mesh, Point2 x) { return mesh.locate(x); }

Transfer::Transfer(const Mesh& source, const Mesh& target) : source_size_(source.num_vertices()) {
  if (source.same_as(target)) {
    identity_ = true;
    return;
  }
  const auto& tv = target.vertices();
  vertices_.resize(tv.size());
  weights_.resize(tv.size());
  for (std::size_t i = 0; i < tv.size(); ++i) {
    const auto loc = source.locate_indexed(tv[i]);
    if (!loc) {
      vertices_[i] = {0, 0, 0};
      weights_[i] = {0.0, 0.0, 0.0};
      ++outside_;
      continue;
    }
    vertices_[i] = source.triangles()[static_cast<std::size_t>(loc->triangle)];
    weights_[i] = loc->barycentric;
  }
}

void Transfer::apply(std::span<const double> source_values, std::span<double> out) const {
  if (source_values.size() != source_size_) {
    throw std::invalid_argument("field length does not match the source mesh");
  }
  if (identity_) {
    std::copy(source_values.begin(), source_values.end(), out.begin());
    return;
  }
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    const auto& v = vertices_[i];
    const auto& w = weights_[i];
    out[i] = w[0] * source_values[v[0]] + w[1] * source_values[v[1]] + w[2] * source_values[v[2]];
  }
}

ScalarField interpolate_field(const ScalarField& source, const MeshPtr& target) {
  if (!source.mesh || !target) throw std::invalid_argument("field without mesh");
  if (source.values.size() != source.mesh->num_vertices()) {
    throw std::invalid_argument("field length does not match its mesh");
  }
  ScalarField out{target, std::vector<double>(target->num_vertices(), 0.0)};
  Transfer(*source.mesh, *target).apply(source.values, out.values);
  return out;
}

void write_mesh(std::ostream& os, const Mesh& mesh, const std::vector<double>* field,
                std::span<const std::string> comments) {
  for (const auto& c : comments) os << "# " << c << '\n';
  os << "vertices " << mesh.num_vertices() << " triangles " << mesh.num_triangles() << '\n';
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    const auto& p = mesh.vertices()[i];
    os << detail::fmt17(p.x) << ' ' << detail::fmt17(p.y) << ' ' << int{mesh.boundary()[i]} << '\n';
  }
  for (const auto& t : mesh.triangles()) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  if (field) {
    if (field->size() != mesh.num_vertices()) {
      throw std::invalid_argument("field length does not match mesh");
    }
    os << "field " << field->size() << '\n';
    for (double v : *field) os << detail::fmt17(v) << '\n';
  }
}

MeshFile read_mesh(std::istream& is) {
  MeshFile out;
  std::string line;
  std::size_t nv = 0, nt = 0;
  bool header = false;
  while (std::getline(is, line)) {
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      out.comments.emplace_back(detail::trim(t.substr(1)));
      continue;
    }
    std::istringstream hs{std::string(t)};
    std::string kv, kt;
    if (!(hs >> kv >> nv >> kt >> nt) || kv != "vertices" || kt != "triangles") {
      throw MeshError("malformed mesh header: " + std::string(t));
    }
    header = true;
    break;
  }
  if (!header) throw MeshError("missing mesh header");
  std::vector<Point2> verts(nv);
  std::vector<std::uint8_t> flags(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    int flag = 0;
    if (!(is >> verts[i].x >> verts[i].y >> flag)) throw MeshError("truncated vertex block");
    flags[i] = static_cast<std::uint8_t>(flag != 0);
  }
  std::vector<std::array<int, 3>> tris(nt);
  for (std::size_t i = 0; i < nt; ++i) {
    if (!(is >> tris[i][0] >> tris[i][1] >> tris[i][2])) throw MeshError("truncated triangle block");
  }
  std::string key;
  if (is >> key) {
    std::size_t n = 0;
    if (key != "field" || !(is >> n) || n != nv) throw MeshError("malformed field section");
    std::vector<double> values(n);
    for (auto& v : values) {
      if (!(is >> v)) throw MeshError("truncated field section");
    }
    out.field = std::move(values);
  }
  out.mesh = std::make_shared<const Mesh>(std::move(verts), std::move(tris), std::move(flags));
  return out;
}

}  // namespace mlq
