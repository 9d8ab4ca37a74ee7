#include "delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

namespace mlq::detail {

namespace {

double orient(const Point2& a, const Point2& b, const Point2& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

// Positive when d lies strictly inside the circumcircle of the CCW triangle abc.
long double incircle(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const long double adx = static_cast<long double>(a.x) - d.x;
  const long double ady = static_cast<long double>(a.y) - d.y;
  const long double bdx = static_cast<long double>(b.x) - d.x;
  const long double bdy = static_cast<long double>(b.y) - d.y;
  const long double cdx = static_cast<long double>(c.x) - d.x;
  const long double cdy = static_cast<long double>(c.y) - d.y;
  const long double alift = adx * adx + ady * ady;
  const long double blift = bdx * bdx + bdy * bdy;
  const long double clift = cdx * cdx + cdy * cdy;
  return alift * (bdx * cdy - bdy * cdx) + blift * (cdx * ady - cdy * adx) +
         clift * (adx * bdy - ady * bdx);
}

std::uint64_t hilbert_index(std::uint32_t x, std::uint32_t y, int order) {
  const std::uint32_t n = 1u << order;
  std::uint64_t d = 0;
  for (std::uint32_t s = n / 2; s > 0; s /= 2) {
    const std::uint32_t rx = (x & s) ? 1u : 0u;
    const std::uint32_t ry = (y & s) ? 1u : 0u;
    d += static_cast<std::uint64_t>(s) * s * ((3u * rx) ^ ry);
    if (ry == 0) {
      if (rx == 1) {
        x = n - 1 - x;
        y = n - 1 - y;
      }
      std::swap(x, y);
    }
  }
  return d;
}

struct Tri {
  std::array<int, 3> v;
  std::array<int, 3> nbr;  // neighbour across the edge opposite v[k]
  bool alive = true;
};

struct EdgeRec {
  int a, b, outside, outside_slot;
};

class Triangulator {
 public:
  explicit Triangulator(std::span<const Point2> input) : n_(static_cast<int>(input.size())) {
    pts_.assign(input.begin(), input.end());
    double xmin = std::numeric_limits<double>::max(), ymin = xmin;
    double xmax = std::numeric_limits<double>::lowest(), ymax = xmax;
    for (const auto& p : pts_) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
    const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
    const double span = std::max({xmax - xmin, ymax - ymin, 1e-300});
    const double r = 40.0 * span;
    pts_.push_back({cx - r, cy - r});
    pts_.push_back({cx + r, cy - r});
    pts_.push_back({cx, cy + r});
    tris_.push_back({{n_, n_ + 1, n_ + 2}, {-1, -1, -1}, true});
  }

  std::vector<std::array<int, 3>> run() {
    for (int idx : insertion_order()) {
      insert(idx);
    }
    std::vector<std::array<int, 3>> out;
    out.reserve(tris_.size() / 2);
    for (const auto& t : tris_) {
      if (!t.alive || t.v[0] >= n_ || t.v[1] >= n_ || t.v[2] >= n_) continue;
      out.push_back(t.v);
    }
    return out;
  }

 private:
  std::vector<int> insertion_order() const {
    double xmin = std::numeric_limits<double>::max(), ymin = xmin;
    double xmax = std::numeric_limits<double>::lowest(), ymax = xmax;
    for (int i = 0; i < n_; ++i) {
      xmin = std::min(xmin, pts_[i].x);
      xmax = std::max(xmax, pts_[i].x);
      ymin = std::min(ymin, pts_[i].y);
      ymax = std::max(ymax, pts_[i].y);
    }
    const double span = std::max({xmax - xmin, ymax - ymin, 1e-300});
    constexpr int order = 16;
    const double scale = static_cast<double>((1u << order) - 1) / span;
    std::vector<std::uint64_t> key(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) {
      const auto hx = static_cast<std::uint32_t>((pts_[i].x - xmin) * scale);
      const auto hy = static_cast<std::uint32_t>((pts_[i].y - ymin) * scale);
      key[i] = hilbert_index(hx, hy, order);
    }
    std::vector<int> order_idx(static_cast<std::size_t>(n_));
    std::iota(order_idx.begin(), order_idx.end(), 0);
    std::stable_sort(order_idx.begin(), order_idx.end(),
                     [&](int a, int b) { return key[a] < key[b]; });
    return order_idx;
  }

  int locate(const Point2& p) const {
    int t = last_;
    if (t < 0 || !tris_[t].alive) t = first_alive();
    const std::size_t max_steps = 4 * tris_.size() + 16;
    for (std::size_t step = 0; step < max_steps; ++step) {
      const Tri& tri = tris_[t];
      bool moved = false;
      for (int k = 0; k < 3; ++k) {
        const Point2& a = pts_[tri.v[(k + 1) % 3]];
        const Point2& b = pts_[tri.v[(k + 2) % 3]];
        if (orient(a, b, p) < 0.0 && tri.nbr[k] >= 0) {
          t = tri.nbr[k];
          moved = true;
          break;
        }
      }
      if (!moved) return t;
    }
    // walk failed to terminate (near-degenerate input); fall back to a scan
    for (std::size_t i = 0; i < tris_.size(); ++i) {
      if (!tris_[i].alive) continue;
      const auto& v = tris_[i].v;
      if (orient(pts_[v[0]], pts_[v[1]], p) >= 0.0 && orient(pts_[v[1]], pts_[v[2]], p) >= 0.0 &&
          orient(pts_[v[2]], pts_[v[0]], p) >= 0.0) {
        return static_cast<int>(i);
      }
    }
    return t;
  }

  int first_alive() const {
    for (std::size_t i = tris_.size(); i-- > 0;) {
      if (tris_[i].alive) return static_cast<int>(i);
    }
    return 0;
  }

  bool in_circle(int t, const Point2& p) const {
    const auto& v = tris_[t].v;
    return incircle(pts_[v[0]], pts_[v[1]], pts_[v[2]], p) > 0.0L;
  }

  void insert(int pi) {
    const Point2& p = pts_[pi];
    const int start = locate(p);

    cavity_.clear();
    stack_.clear();
    stack_.push_back(start);
    mark_[start] = stamp_;
    cavity_.push_back(start);
    while (!stack_.empty()) {
      const int t = stack_.back();
      stack_.pop_back();
      for (int k = 0; k < 3; ++k) {
        const int nb = tris_[t].nbr[k];
        if (nb < 0 || mark_[nb] == stamp_) continue;
        if (in_circle(nb, p)) {
          mark_[nb] = stamp_;
          cavity_.push_back(nb);
          stack_.push_back(nb);
        }
      }
    }

    // boundary edges of the cavity, in CCW orientation of their old triangle
    edges_.clear();
    for (int t : cavity_) {
      for (int k = 0; k < 3; ++k) {
        const int nb = tris_[t].nbr[k];
        if (nb >= 0 && mark_[nb] == stamp_) continue;
        EdgeRec e{tris_[t].v[(k + 1) % 3], tris_[t].v[(k + 2) % 3], nb, -1};
        if (nb >= 0) {
          for (int s = 0; s < 3; ++s) {
            if (tris_[nb].nbr[s] == t) e.outside_slot = s;
          }
        }
        edges_.push_back(e);
      }
    }
    for (int t : cavity_) tris_[t].alive = false;

    // new fan around p: triangle (a, b, p)
    created_.clear();
    for (const auto& e : edges_) {
      Tri tri{{e.a, e.b, pi}, {-1, -1, e.outside}, true};
      int id;
      if (!free_.empty()) {
        id = free_.back();
        free_.pop_back();
        tris_[id] = tri;
      } else {
        id = static_cast<int>(tris_.size());
        tris_.push_back(tri);
        mark_.push_back(0);
      }
      if (e.outside >= 0) tris_[e.outside].nbr[e.outside_slot] = id;
      created_.push_back(id);
    }
    // link fan triangles: (a,b,p) is adjacent across edge (b,p) to the fan
    // triangle starting at b, and across (p,a) to the one ending at a
    for (int id : created_) {
      const int b = tris_[id].v[1];
      for (int other : created_) {
        if (other != id && tris_[other].v[0] == b) {
          tris_[id].nbr[0] = other;
          tris_[other].nbr[1] = id;
          break;
        }
      }
    }
    for (int t : cavity_) free_.push_back(t);
    last_ = created_.front();
    ++stamp_;
    if (stamp_ == 0) {
      std::fill(mark_.begin(), mark_.end(), 0u);
      stamp_ = 1;
    }
  }

  int n_;
  std::vector<Point2> pts_;
  std::vector<Tri> tris_;
  std::vector<std::uint32_t> mark_ = std::vector<std::uint32_t>(1, 0u);
  std::uint32_t stamp_ = 1;
  int last_ = 0;
  std::vector<int> cavity_, stack_, created_, free_;
  std::vector<EdgeRec> edges_;
};

}  // namespace

std::vector<std::array<int, 3>> delaunay_triangulate(std::span<const Point2> points) {
  if (points.size() < 3) return {};
  Triangulator tri(points);
  return tri.run();
}

}  // namespace mlq::detail
