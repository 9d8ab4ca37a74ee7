#include "mlq/fem.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <cmath>

#include "text.hpp"

namespace mlq {

namespace {

struct Gradients {
  double area;
  std::array<double, 3> gx, gy;
};

Gradients p1_gradients(const Mesh& mesh, std::size_t t) {
  const auto& tri = mesh.triangles()[t];
  const auto& v = mesh.vertices();
  const Point2 p[3] = {v[tri[0]], v[tri[1]], v[tri[2]]};
  Gradients g{};
  g.area = mesh.signed_area(t);
  const double inv = 1.0 / (2.0 * g.area);
  for (int i = 0; i < 3; ++i) {
    const Point2& a = p[(i + 1) % 3];
    const Point2& b = p[(i + 2) % 3];
    g.gx[i] = (a.y - b.y) * inv;
    g.gy[i] = (b.x - a.x) * inv;
  }
  return g;
}

std::string describe(std::span<const double> y) {
  std::string s = "(";
  for (std::size_t k = 0; k < y.size(); ++k) s += (k ? ", " : "") + detail::fmt17(y[k]);
  return s + ")";
}

}  // namespace

double default_rel_tol(int level) { return 1e-2 * std::ldexp(1.0, -level); }

std::vector<Eigen::Triplet<double>> SparseSystem::triplets() const {
  std::vector<Eigen::Triplet<double>> out;
  out.reserve(static_cast<std::size_t>(matrix.nonZeros()));
  for (int r = 0; r < matrix.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(matrix, r); it; ++it) {
      out.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    }
  }
  return out;
}

Discretization::Discretization(MeshPtr mesh, const ProblemSpec& problem)
    : mesh_(std::move(mesh)), dimension_(problem.dimension()) {
  const Mesh& m = *mesh_;
  const std::size_t nt = m.num_triangles();

  vertex_unknown_.assign(m.num_vertices(), -1);
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    if (!m.is_boundary(static_cast<int>(v))) {
      vertex_unknown_[v] = static_cast<int>(unknown_vertex_.size());
      unknown_vertex_.push_back(static_cast<int>(v));
    }
  }
  const auto n = static_cast<Eigen::Index>(unknown_vertex_.size());

  std::vector<Eigen::Triplet<double>> structure;
  structure.reserve(nt * 9);
  local_.resize(nt);
  load_ = Eigen::VectorXd::Zero(n);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto g = p1_gradients(m, t);
    const auto& tri = m.triangles()[t];
    const double f = problem.source(m.centroid(t));
    for (int i = 0; i < 3; ++i) {
      for (int k = 0; k < 3; ++k) {
        local_[t][3 * i + k] = g.area * (g.gx[i] * g.gx[k] + g.gy[i] * g.gy[k]);
      }
      const int ui = vertex_unknown_[tri[i]];
      if (ui < 0) continue;
      // one-point rule: phi_i(c_T) = 1/3
      load_[ui] += f * g.area / 3.0;
      for (int k = 0; k < 3; ++k) {
        const int uk = vertex_unknown_[tri[k]];
        if (uk >= 0) structure.emplace_back(ui, uk, 0.0);
      }
    }
  }
  pattern_.resize(n, n);
  pattern_.setFromTriplets(structure.begin(), structure.end());
  pattern_.makeCompressed();

  slots_.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& tri = m.triangles()[t];
    for (int i = 0; i < 3; ++i) {
      for (int k = 0; k < 3; ++k) {
        const int ui = vertex_unknown_[tri[i]];
        const int uk = vertex_unknown_[tri[k]];
        if (ui < 0 || uk < 0) {
          slots_[t][3 * i + k] = -1;
          continue;
        }
        const auto* begin = pattern_.innerIndexPtr() + pattern_.outerIndexPtr()[ui];
        const auto* end = pattern_.innerIndexPtr() + pattern_.outerIndexPtr()[ui + 1];
        const auto* pos = std::lower_bound(begin, end, uk);
        slots_[t][3 * i + k] = static_cast<int>(pos - pattern_.innerIndexPtr());
      }
    }
  }

  if (const auto* rc = std::get_if<ReciprocalProductCoefficient>(&problem.coeff)) {
    reciprocal_ = true;
    reciprocal_coeff_ = *rc;
  } else {
    const auto& affine = std::get<AffineCoefficient>(problem.coeff);
    const std::size_t stride = dimension_ + 1;
    centroid_terms_.resize(nt * stride);
    for (std::size_t t = 0; t < nt; ++t) {
      const Point2 c = m.centroid(t);
      centroid_terms_[t * stride] = affine.mean()(c);
      for (std::size_t k = 0; k < dimension_; ++k) {
        centroid_terms_[t * stride + k + 1] = affine.terms()[k](c);
      }
    }
  }
}

double Discretization::alpha_at(std::size_t t, std::span<const double> y) const {
  if (reciprocal_) return reciprocal_coeff_(y);
  const std::size_t stride = dimension_ + 1;
  const double* row = centroid_terms_.data() + t * stride;
  double a = row[0];
  for (std::size_t k = 0; k < dimension_; ++k) a += row[k + 1] * y[k];
  return a;
}

SparseSystem Discretization::assemble(std::span<const double> y) const {
  if (y.size() != dimension_) {
    throw std::invalid_argument("parameter has dimension " + std::to_string(y.size()) +
                                ", coefficient expects " + std::to_string(dimension_));
  }
  SparseSystem sys{mesh_, pattern_, load_, unknown_vertex_};
  double* values = sys.matrix.valuePtr();
  std::fill(values, values + sys.matrix.nonZeros(), 0.0);
  for (std::size_t t = 0; t < local_.size(); ++t) {
    const double a = alpha_at(t, y);
    if (!(a > 0.0)) {
      const Point2 c = mesh_->centroid(t);
      throw NumericalError("ellipticity violated: alpha = " + detail::fmt17(a) + " at x = (" +
                           detail::fmt17(c.x) + ", " + detail::fmt17(c.y) + ") for y = " +
                           describe(y));
    }
    const auto& loc = local_[t];
    const auto& slot = slots_[t];
    for (int q = 0; q < 9; ++q) {
      if (slot[q] >= 0) values[slot[q]] += a * loc[q];
    }
  }
  return sys;
}

ScalarField Discretization::solve(std::span<const double> y, const SolverOptions& options) const {
  return mlq::solve(assemble(y), options);
}

SparseSystem assemble(const MeshPtr& mesh, const Coefficient& coeff, std::span<const double> y,
                      const SpatialFunction& source) {
  ProblemSpec problem;
  problem.coeff = coeff;
  problem.source = source;
  return Discretization(mesh, problem).assemble(y);
}

namespace {

template <typename Preconditioner>
Eigen::VectorXd run_cg(const SparseSystem& system, const SolverOptions& options) {
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Preconditioner> cg;
  const auto n = static_cast<double>(system.unknowns());
  cg.setTolerance(options.rel_tol);
  cg.setMaxIterations(static_cast<Eigen::Index>(std::ceil(options.max_iteration_factor * n)));
  cg.compute(system.matrix);
  Eigen::VectorXd x = cg.solve(system.load);
  if (cg.info() != Eigen::Success) {
    throw NumericalError("conjugate gradients did not converge: relative residual " +
                         detail::fmt17(cg.error()) + " after " + std::to_string(cg.iterations()) +
                         " iterations (target " + detail::fmt17(options.rel_tol) + ", " +
                         std::to_string(system.unknowns()) + " unknowns)");
  }
  return x;
}

}  // namespace

ScalarField solve(const SparseSystem& system, const SolverOptions& options) {
  ScalarField out{system.mesh, std::vector<double>(system.mesh->num_vertices(), 0.0)};
  if (system.unknowns() == 0) return out;
  const Eigen::VectorXd x =
      options.jacobi ? run_cg<Eigen::DiagonalPreconditioner<double>>(system, options)
                     : run_cg<Eigen::IdentityPreconditioner>(system, options);
  for (std::size_t i = 0; i < system.unknowns(); ++i) {
    out.values[static_cast<std::size_t>(system.unknown_vertex[i])] = x[static_cast<Eigen::Index>(i)];
  }
  return out;
}

namespace {

template <typename Integrand>
double integrate_p1(const ScalarField& field, Integrand&& integrand) {
  if (!field.mesh || field.values.size() != field.mesh->num_vertices()) {
    throw std::invalid_argument("field length does not match its mesh");
  }
  const Mesh& m = *field.mesh;
  double sum = 0.0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto g = p1_gradients(m, t);
    const auto& tri = m.triangles()[t];
    double dx = 0.0, dy = 0.0, mid = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double v = field.values[tri[i]];
      dx += v * g.gx[i];
      dy += v * g.gy[i];
      mid += v;
    }
    sum += g.area * integrand(dx * dx + dy * dy, mid / 3.0);
  }
  return sum;
}

}  // namespace

double h1_norm(const ScalarField& field) {
  return std::sqrt(
      integrate_p1(field, [](double grad2, double mid) { return grad2 + mid * mid; }));
}

double w11_norm(const ScalarField& field) {
  return integrate_p1(field,
                      [](double grad2, double mid) { return std::sqrt(grad2) + std::abs(mid); });
}

}  // namespace mlq
