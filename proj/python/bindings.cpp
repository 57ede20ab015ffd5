#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "resonator/experiments.hpp"
#include "resonator/projections.hpp"
#include "resonator/stability.hpp"

namespace py = pybind11;
using namespace resonator;

namespace {

using Int8Matrix = py::array_t<std::int8_t, py::array::f_style | py::array::forcecast>;
using Int8Vector = py::array_t<std::int8_t, py::array::c_style | py::array::forcecast>;

BipolarVector to_bipolar(const Int8Vector& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-d array");
  return BipolarVector(std::vector<std::int8_t>(a.data(), a.data() + a.size()));
}

py::array_t<std::int8_t> to_array(const BipolarVector& v) {
  py::array_t<std::int8_t> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.entries().begin(), v.entries().end(), out.mutable_data());
  return out;
}

Codebook to_codebook(const Int8Matrix& a) {
  if (a.ndim() != 2) throw std::invalid_argument("codebooks are N x D arrays");
  const auto n = static_cast<std::size_t>(a.shape(0));
  const auto d = static_cast<std::size_t>(a.shape(1));
  return Codebook::from_column_major(n, d, std::vector<std::int8_t>(a.data(), a.data() + a.size()));
}

py::array_t<std::int8_t> codebook_array(const Codebook& cb) {
  py::array_t<std::int8_t, py::array::f_style> out({static_cast<py::ssize_t>(cb.dimension()),
                                                     static_cast<py::ssize_t>(cb.size())});
  auto* dst = out.mutable_data();
  for (std::size_t j = 0; j < cb.size(); ++j) {
    const auto col = cb.column_entries(j);
    std::copy(col.begin(), col.end(), dst + j * cb.dimension());
  }
  return out;
}

py::dict result_dict(const SolveResult& r) {
  py::dict d;
  std::vector<int> signs;
  std::vector<double> sims;
  for (const auto& f : r.decoded) {
    signs.push_back(f.sign);
    sims.push_back(f.similarity);
  }
  d["indices"] = r.indices();
  d["signs"] = signs;
  d["factor_similarity"] = sims;
  d["iterations"] = r.iterations;
  d["termination"] = to_string(r.termination.kind);
  d["cycle_length"] = r.termination.cycle_length;
  d["similarity_trace"] = r.similarity_trace;
  d["linear_similarity_trace"] = r.linear_similarity_trace;
  return d;
}

py::dict estimate_dict(const AccuracyEstimate& e) {
  py::dict d;
  d["mean"] = e.mean;
  d["standard_error"] = e.standard_error;
  d["trials"] = e.trials;
  d["aborted"] = e.aborted;
  d["mean_iterations"] = e.mean_iterations;
  return d;
}

WeightVariant parse_variant(const std::string& s) {
  if (s == "op") return WeightVariant::OuterProduct;
  if (s == "ols") return WeightVariant::OrdinaryLeastSquares;
  throw std::invalid_argument("variant must be 'op' or 'ols'");
}

}  // namespace

PYBIND11_MODULE(_resonator, m) {
  m.doc() = "Resonator networks and benchmark factorization algorithms";
  m.attr("__version__") = "0.1.0";

  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<SingularGramError>(m, "SingularGramError", PyExc_ArithmeticError);

  py::class_<FactorizationProblem>(m, "Problem")
      .def(py::init([](const std::vector<Int8Matrix>& codebooks, const Int8Vector& composite,
                       std::optional<std::vector<std::size_t>> truth) {
             std::vector<Codebook> cbs;
             for (const auto& a : codebooks) cbs.push_back(to_codebook(a));
             return FactorizationProblem(std::move(cbs), to_bipolar(composite), std::move(truth));
           }),
           py::arg("codebooks"), py::arg("composite"), py::arg("truth") = py::none())
      .def_property_readonly("codebooks",
                             [](const FactorizationProblem& p) {
                               py::list out;
                               for (const auto& cb : p.codebooks()) out.append(codebook_array(cb));
                               return out;
                             })
      .def_property_readonly("composite", [](const FactorizationProblem& p) { return to_array(p.composite()); })
      .def_property_readonly("truth", &FactorizationProblem::truth)
      .def_property_readonly("dimension", &FactorizationProblem::dimension)
      .def_property_readonly("factors", &FactorizationProblem::factors)
      .def_property_readonly("search_space_size", &FactorizationProblem::search_space_size);

  m.def("sample_problem",
        [](std::uint64_t seed, std::size_t n, const std::vector<std::size_t>& sizes, std::size_t trial) {
          return trial_problem(seed, n, sizes, trial);
        },
        py::arg("seed"), py::arg("n"), py::arg("sizes"), py::arg("trial") = 0,
        "Random problem; the same (seed, n, sizes, trial) always gives the same problem.");

  m.def("compose",
        [](const std::vector<Int8Matrix>& codebooks, const std::vector<std::size_t>& indices) {
          std::vector<Codebook> cbs;
          for (const auto& a : codebooks) cbs.push_back(to_codebook(a));
          return compose(std::move(cbs), indices);
        },
        py::arg("codebooks"), py::arg("indices"));

  m.def("run_resonator",
        [](const FactorizationProblem& p, const std::string& variant, std::size_t max_iterations, bool synchronous,
           std::uint64_t seed) {
          ResonatorConfig c;
          c.weights = parse_variant(variant);
          c.max_iterations = max_iterations;
          c.convention = synchronous ? UpdateConvention::Synchronous : UpdateConvention::Asynchronous;
          return result_dict(run_resonator(p, c, seed));
        },
        py::arg("problem"), py::arg("variant") = "op", py::arg("max_iterations") = 1000,
        py::arg("synchronous") = false, py::arg("seed") = 0);

  m.def("solve",
        [](const FactorizationProblem& p, const std::string& solver, std::size_t iteration_cap, std::uint64_t seed) {
          return result_dict(make_solver(solver).solve(p, seed, iteration_cap));
        },
        py::arg("problem"), py::arg("solver"), py::arg("iteration_cap") = 1000, py::arg("seed") = 0,
        "Runs any solver from solver_names(); iteration_cap only applies to the resonators.");

  m.def("solver_names", &solver_names);
  m.def("benchmark_names", &benchmark_names);

  m.def("accuracy",
        [](std::size_t n, const std::vector<std::size_t>& sizes, std::size_t trials, const std::string& solver,
           std::uint64_t seed, double k_fraction, std::size_t min_iterations, unsigned threads) {
          ExperimentOptions o;
          o.k_fraction = k_fraction;
          o.min_iterations = min_iterations;
          o.threads = threads;
          return estimate_dict(accuracy_at(n, sizes, trials, make_solver(solver), seed, o));
        },
        py::arg("n"), py::arg("sizes"), py::arg("trials"), py::arg("solver") = "resonator-op", py::arg("seed") = 1,
        py::arg("k_fraction") = 0.001, py::arg("min_iterations") = 100, py::arg("threads") = 0);

  m.def("normal_cdf", &normal_cdf, py::arg("x"));
  m.def("hopfield_bitflip", &hopfield_bitflip, py::arg("n"), py::arg("d"), py::arg("self_connections") = true);
  m.def("percolated_chain",
        [](std::size_t n, const std::vector<std::size_t>& sizes) {
          py::list out;
          for (const auto& r : percolated_chain(n, sizes)) {
            py::dict d;
            d["factor"] = r.factor;
            d["h"] = r.h;
            d["r_prime"] = r.r_prime;
            d["r_dprime"] = r.r_dprime;
            d["r"] = r.r;
            d["n"] = r.n;
            out.append(d);
          }
          return out;
        },
        py::arg("n"), py::arg("sizes"));
  m.def("empirical_bitflip",
        [](std::uint64_t seed, std::size_t n, const std::vector<std::size_t>& sizes, std::size_t trials,
           const std::string& variant) {
          std::vector<std::pair<double, double>> out;
          for (const auto& s : empirical_bitflip(seed, n, sizes, trials, parse_variant(variant)))
            out.emplace_back(s.mean, s.standard_error);
          return out;
        },
        py::arg("seed"), py::arg("n"), py::arg("sizes"), py::arg("trials"), py::arg("variant") = "op",
        "Per-factor (mean, standard error) of the flip fraction after one sweep from the truth.");

  m.def("project_simplex", [](const Eigen::VectorXd& v) { return project_simplex(v); }, py::arg("v"));
  m.def("project_l1_ball", [](const Eigen::VectorXd& v, double r) { return project_l1_ball(v, r); }, py::arg("v"),
        py::arg("radius") = 1.0);
  m.def("soft_threshold", [](const Eigen::VectorXd& v, double g) { return soft_threshold(v, g); }, py::arg("v"),
        py::arg("gamma"));
}
