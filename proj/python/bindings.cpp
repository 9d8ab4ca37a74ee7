#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "mlq/estimator.hpp"
#include "mlq/study.hpp"

namespace py = pybind11;
using namespace mlq;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::array_t<double> to_matrix(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
  py::array_t<double> a({static_cast<py::ssize_t>(rows), static_cast<py::ssize_t>(cols)});
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

py::array_t<double> vertices_of(const Mesh& m) {
  py::array_t<double> a({static_cast<py::ssize_t>(m.num_vertices()), py::ssize_t{2}});
  auto r = a.mutable_unchecked<2>();
  for (std::size_t i = 0; i < m.num_vertices(); ++i) {
    r(i, 0) = m.vertices()[i].x;
    r(i, 1) = m.vertices()[i].y;
  }
  return a;
}

py::array_t<int> triangles_of(const Mesh& m) {
  py::array_t<int> a({static_cast<py::ssize_t>(m.num_triangles()), py::ssize_t{3}});
  auto r = a.mutable_unchecked<2>();
  for (std::size_t t = 0; t < m.num_triangles(); ++t)
    for (int k = 0; k < 3; ++k) r(t, k) = m.triangles()[t][k];
  return a;
}

py::dict level_dict(const LevelRecord& r) {
  py::dict d;
  d["term"] = r.term;
  d["quad_level"] = r.quad_level;
  d["mesh_levels"] = r.mesh_levels;
  d["nodes"] = r.nodes;
  d["solves"] = r.solves;
  d["unknowns"] = r.unknowns;
  d["cost_units"] = r.cost_units;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multilevel quadrature for parametric diffusion on non-nested P1 meshes";
  m.attr("__version__") = "0.1.0";

  py::register_exception<MeshError>(m, "MeshError", PyExc_RuntimeError);
  py::register_exception<CoefficientError>(m, "CoefficientError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_RuntimeError);

  py::enum_<Domain>(m, "Domain")
      .value("unit_disk", Domain::unit_disk)
      .value("unit_square", Domain::unit_square);
  py::enum_<Family>(m, "Family")
      .value("mc", Family::monte_carlo)
      .value("qmc", Family::qmc_halton)
      .value("cc", Family::cc_sparse);
  py::enum_<Representation>(m, "Representation")
      .value("nestedQ", Representation::nestedQ)
      .value("nestedV", Representation::nestedV);
  py::enum_<Norm>(m, "Norm").value("H1", Norm::H1).value("W11", Norm::W11);

  py::class_<Mesh, std::shared_ptr<Mesh>>(m, "Mesh")
      .def_property_readonly("vertices", &vertices_of)
      .def_property_readonly("triangles", &triangles_of)
      .def_property_readonly("boundary", [](const Mesh& x) {
        std::vector<bool> b(x.boundary().begin(), x.boundary().end());
        return b;
      })
      .def_property_readonly("num_vertices", &Mesh::num_vertices)
      .def_property_readonly("num_triangles", &Mesh::num_triangles)
      .def_property_readonly("num_interior", &Mesh::num_interior)
      .def_property_readonly("h_measured", &Mesh::h_measured)
      .def("validate", [](const Mesh& x) { x.validate(); })
      .def("same_as", &Mesh::same_as)
      .def("to_text", [](const Mesh& x) {
        std::ostringstream os;
        write_mesh(os, x, nullptr, {});
        return os.str();
      });

  m.def(
      "generate_mesh",
      [](Domain d, double h, std::uint64_t seed, int level) {
        return std::make_shared<Mesh>(generate_mesh(d, h, seed, level));
      },
      py::arg("domain"), py::arg("h_target"), py::arg("seed"), py::arg("level_hint") = 0);

  py::class_<ScalarField>(m, "ScalarField")
      .def_property_readonly("values", [](const ScalarField& f) { return to_array(f.values); })
      .def_property_readonly("mesh", [](const ScalarField& f) { return std::const_pointer_cast<Mesh>(f.mesh); });
  m.def("h1_norm", &h1_norm);
  m.def("w11_norm", &w11_norm);
  m.def("measure_error", &measure_error, py::arg("estimate"), py::arg("reference"), py::arg("norm"));

  py::class_<ProblemSpec>(m, "ProblemSpec")
      .def_readonly("name", &ProblemSpec::name)
      .def_readonly("domain", &ProblemSpec::domain)
      .def_readwrite("h0", &ProblemSpec::h0)
      .def_property_readonly("dimension", &ProblemSpec::dimension);
  m.def("analytic_disk_problem", &analytic_disk_problem);
  m.def("sinusoidal_square_problem", &sinusoidal_square_problem, py::arg("terms") = 6);
  m.def("analytic_disk_mean", [](double x, double y) { return analytic_disk_mean({x, y}); });

  py::class_<QuadratureRule>(m, "QuadratureRule")
      .def_readonly("family", &QuadratureRule::family)
      .def_readonly("level", &QuadratureRule::level)
      .def_readonly("dimension", &QuadratureRule::dimension)
      .def_readonly("difference", &QuadratureRule::difference)
      .def_readonly("nested_prefix", &QuadratureRule::nested_prefix)
      .def_property_readonly("nodes", [](const QuadratureRule& r) { return to_matrix(r.nodes, r.size(), r.dimension); })
      .def_property_readonly("weights", [](const QuadratureRule& r) { return to_array(r.weights); })
      .def("__len__", &QuadratureRule::size);
  m.def("make_rule", &make_rule, py::arg("family"), py::arg("level"), py::arg("dim"), py::arg("seed") = 0);
  m.def("difference_rule", &difference_rule, py::arg("family"), py::arg("level"), py::arg("dim"),
        py::arg("seed") = 0);
  m.def("clenshaw_curtis", [](int j) {
    const auto r = clenshaw_curtis(j);
    return py::make_tuple(to_array(r.nodes), to_array(r.weights));
  });
  m.def("halton_point", &halton_point, py::arg("index"), py::arg("dim"));

  py::class_<Hierarchy>(m, "Hierarchy")
      .def(py::init<ProblemSpec, int, int, std::uint64_t>(), py::arg("problem"), py::arg("max_level"),
           py::arg("reference_level"), py::arg("seed"))
      .def_property_readonly("max_level", &Hierarchy::max_level)
      .def_property_readonly("reference_level", &Hierarchy::reference_level)
      .def("mesh", [](const Hierarchy& h, int l) { return std::const_pointer_cast<Mesh>(h.mesh(l)); })
      .def_property_readonly("reference_mesh",
                             [](const Hierarchy& h) { return std::const_pointer_cast<Mesh>(h.reference_mesh()); });

  py::class_<MLConfig>(m, "MLConfig")
      .def(py::init<>())
      .def_readwrite("j", &MLConfig::j)
      .def_readwrite("family", &MLConfig::family)
      .def_readwrite("seed", &MLConfig::seed)
      .def_readwrite("representation", &MLConfig::representation)
      .def_readwrite("moments", &MLConfig::moments)
      .def_readwrite("threads", &MLConfig::threads);

  py::class_<EstimateReport>(m, "EstimateReport")
      .def_readonly("j", &EstimateReport::j)
      .def_readonly("total_solves", &EstimateReport::total_solves)
      .def_readonly("total_cost_units", &EstimateReport::total_cost_units)
      .def("statistic", &EstimateReport::statistic, py::arg("p") = 1)
      .def_property_readonly("per_level", [](const EstimateReport& r) {
        py::list out;
        for (const auto& rec : r.per_level) out.append(level_dict(rec));
        return out;
      });
  m.def("ml_estimate", &ml_estimate, py::arg("hierarchy"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());

  py::class_<VarianceEstimate>(m, "VarianceEstimate")
      .def_readonly("mean", &VarianceEstimate::mean)
      .def_readonly("second_moment", &VarianceEstimate::second_moment)
      .def_readonly("variance", &VarianceEstimate::variance)
      .def_readonly("most_negative", &VarianceEstimate::most_negative)
      .def_readonly("under_resolved", &VarianceEstimate::under_resolved);
  m.def("estimate_variance", &estimate_variance, py::arg("hierarchy"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());

  py::class_<CostModel>(m, "CostModel")
      .def_readonly("nestedV", &CostModel::nestedV)
      .def_readonly("nestedQ", &CostModel::nestedQ)
      .def("ratio", &CostModel::ratio);
  m.def("compute_cost_model", &compute_cost_model, py::arg("j"), py::arg("theta"), py::arg("sigma"),
        py::arg("n0"), py::arg("c0"));
  m.def("expected_solves", &expected_solves, py::arg("family"), py::arg("representation"), py::arg("j"),
        py::arg("dim"));

  py::class_<RunConfig>(m, "RunConfig")
      .def_readonly("problem", &RunConfig::problem)
      .def_readwrite("families", &RunConfig::families)
      .def_readwrite("representations", &RunConfig::representations)
      .def_readwrite("moments", &RunConfig::moments)
      .def_readwrite("j_min", &RunConfig::j_min)
      .def_readwrite("j_max", &RunConfig::j_max)
      .def_readwrite("replicates", &RunConfig::replicates)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("reference_offset", &RunConfig::reference_offset)
      .def_readwrite("threads", &RunConfig::threads)
      .def_readwrite("out", &RunConfig::out);
  m.def("parse_config", [](const std::string& text) {
    std::istringstream is(text);
    return parse_config(is, "<string>");
  });
  m.def("load_config", &load_config);
  m.def(
      "run_convergence_study",
      [](const RunConfig& c, bool force) { return run_convergence_study(c, force).files; },
      py::arg("config"), py::arg("force") = false, py::call_guard<py::gil_scoped_release>());
}
