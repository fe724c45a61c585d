#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>

#include "vsepcf/bench.hpp"
#include "vsepcf/error.hpp"
#include "vsepcf/io.hpp"
#include "vsepcf/select.hpp"
#include "vsepcf/simulate.hpp"

namespace py = pybind11;
using namespace vsepcf;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Window to_window(const std::vector<double>& w) {
  if (w.size() != 4) throw InvalidArgument("window must be (x0, y0, x1, y1)");
  return {w[0], w[1], w[2], w[3]};
}

PointPattern to_pattern(const Array& xy, const Window& window,
                        const std::optional<Array>& intensity) {
  if (xy.ndim() != 2 || xy.shape(1) != 2) throw InvalidArgument("points must have shape (n, 2)");
  const auto a = xy.unchecked<2>();
  std::vector<Point> pts(a.shape(0));
  for (py::ssize_t i = 0; i < a.shape(0); ++i) pts[i] = {a(i, 0), a(i, 1)};
  if (!intensity) return {window, std::move(pts)};
  const auto r = intensity->unchecked<1>();
  if (r.shape(0) != a.shape(0)) throw InvalidArgument("intensity must have one value per point");
  std::vector<double> rho(r.data(0), r.data(0) + r.shape(0));
  return {window, std::move(pts), std::move(rho)};
}

// Constant intensity: a number, "plugin" (n/|W|), or per-point values.
struct IntensityChoice {
  IntensityModel model;
  IntensityDescriptor descriptor;
};

IntensityChoice choose_intensity(const PointPattern& x, const py::object& rho) {
  if (rho.is_none() || (py::isinstance<py::str>(rho) && rho.cast<std::string>() == "plugin"))
    return {IntensityModel::constant(x.plugin_intensity()), {"plugin", x.plugin_intensity()}};
  if (py::isinstance<py::float_>(rho) || py::isinstance<py::int_>(rho)) {
    const double v = rho.cast<double>();
    return {IntensityModel::constant(v), {"constant", v}};
  }
  throw InvalidArgument("rho must be a number, 'plugin' or None");
}

ModelSpec make_model(const std::string& name, const py::kwargs& params) {
  ModelSpec m = ModelSpec::reference(model_kind_from_string(name));
  for (const auto& [k, v] : params) {
    const auto key = k.cast<std::string>();
    const double val = v.cast<double>();
    if (key == "rho") m.rho = val;
    else if (key == "kappa") m.kappa = val;
    else if (key == "mu") m.mu = val;
    else if (key == "omega") m.omega = val;
    else if (key == "nu") m.nu = val;
    else if (key == "alpha") m.alpha = val;
    else throw InvalidArgument("unknown model parameter '" + key + "'");
  }
  m.validate();
  return m;
}

Array points_array(const PointPattern& x) {
  Array out({static_cast<py::ssize_t>(x.size()), py::ssize_t{2}});
  auto a = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < x.size(); ++i) {
    a(i, 0) = x[i].x;
    a(i, 1) = x[i].y;
  }
  return out;
}

Array evaluate(const AnyFit& fit, const Array& r) {
  Array out(r.request().shape);
  const auto n = r.size();
  const double* in = r.data();
  double* o = out.mutable_data();
  for (py::ssize_t i = 0; i < n; ++i) o[i] = evaluate_g(fit, in[i]);
  return out;
}

// A fitted estimate with its selection trace.
struct Fit {
  AnyFit fit;
  std::vector<double> tuning;  // K values or bandwidths
  std::vector<double> cv;
  double selected = 0;
};

py::dict summary_dict(const EstimatorSummary& s) {
  py::dict d;
  d["cell"] = s.cell;
  d["model"] = to_string(s.model.kind);
  d["estimator"] = to_string(s.estimator);
  d["r_min"] = s.r_min;
  d["replicates"] = s.replicates;
  d["failures"] = s.failures;
  d["na"] = s.na;
  d["root_mise"] = s.root_mise;
  d["root_mise_trimmed"] = s.root_mise_trimmed;
  d["root_mise_uniform"] = s.root_mise_uniform;
  d["root_mise_uniform_trimmed"] = s.root_mise_uniform_trimmed;
  d["mean_selection"] = s.mean_selection;
  d["min_g"] = s.min_g;
  d["positivity_violations"] = s.positivity_violations;
  d["r"] = s.curve_r;
  d["mean_curve"] = s.mean_curve;
  d["true_curve"] = s.true_curve;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Variational orthogonal series estimation of the pair correlation function.";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<Fit>(m, "Fit")
      .def_property_readonly("kind", [](const Fit& f) { return fit_kind(f.fit); })
      .def_property_readonly("r_min", [](const Fit& f) { return fit_r_min(f.fit); })
      .def_property_readonly("R", [](const Fit& f) { return fit_range(f.fit); })
      .def_property_readonly("selected", [](const Fit& f) { return f.selected; },
                             "Selected K, or the bandwidth for the kernel estimator")
      .def_property_readonly("tuning", [](const Fit& f) { return f.tuning; })
      .def_property_readonly("cv", [](const Fit& f) { return f.cv; })
      .def_property_readonly("coefficients",
                             [](const Fit& f) -> py::object {
                               if (auto* v = std::get_if<VseCoefficients>(&f.fit)) return py::cast(v->beta);
                               if (auto* o = std::get_if<OseFit>(&f.fit)) return py::cast(o->theta);
                               return py::none();
                             })
      .def("__call__", [](const Fit& f, const Array& r) { return evaluate(f.fit, r); }, py::arg("r"))
      .def("to_json", [](const Fit& f) { return fit_to_json(f.fit).dump(); })
      .def_static("from_json",
                  [](const std::string& text) { return Fit{fit_from_json(nlohmann::json::parse(text))}; })
      .def("__repr__", [](const Fit& f) {
        std::ostringstream s;
        s << "<Fit " << fit_kind(f.fit) << " selected=" << f.selected << ">";
        return s.str();
      });

  m.def(
      "simulate",
      [](const std::string& model, const std::vector<double>& window, std::uint64_t seed,
         std::uint64_t stream, const py::kwargs& params) {
        return points_array(simulate(make_model(model, params), to_window(window), {seed, stream}));
      },
      py::arg("model"), py::arg("window") = std::vector<double>{0, 0, 1, 1}, py::arg("seed") = 0,
      py::arg("stream") = 0, "Simulates a pattern; returns an (n, 2) array.");

  m.def(
      "true_pcf",
      [](const std::string& model, const Array& r, const py::kwargs& params) {
        const auto spec = make_model(model, params);
        Array out(r.request().shape);
        for (py::ssize_t i = 0; i < r.size(); ++i) out.mutable_data()[i] = true_pcf(spec, r.data()[i]);
        return out;
      },
      py::arg("model"), py::arg("r"));

  m.def(
      "fit_vse",
      [](const Array& points, const std::vector<double>& window, const py::object& rho,
         std::optional<Array> intensity, double r_min, double R, std::optional<int> K, int k_max,
         const std::string& weighting) {
        const auto x = to_pattern(points, to_window(window), intensity);
        const auto choice = intensity ? IntensityChoice{IntensityModel::per_point(), {"column", 0}}
                                      : choose_intensity(x, rho);
        const BasisSpec basis(R, r_min, std::max(k_max, K.value_or(1)));
        const PsiSpec psi(r_min + R);
        const Weighting w = weighting_from_string(weighting);
        if (K) {
          py::gil_scoped_release release;
          return Fit{fit_vse(x, choice.model, basis, psi, *K, w, choice.descriptor), {}, {},
                     static_cast<double>(*K)};
        }
        if (intensity) throw InvalidArgument("automatic K with per-point intensities needs a raster");
        py::gil_scoped_release release;
        const CvContext ctx(x, choice.model, basis, psi, w);
        SelectOptions opt;
        opt.k_max = k_max;
        auto sel = fit_vse_auto(ctx, choice.descriptor, opt);
        return Fit{std::move(sel.coefficients),
                   {sel.curve.K.begin(), sel.curve.K.end()},
                   sel.curve.cv,
                   static_cast<double>(sel.curve.selected)};
      },
      py::arg("points"), py::arg("window"), py::arg("rho") = py::none(),
      py::arg("intensity") = py::none(), py::arg("r_min") = 0.0, py::arg("R") = 0.125,
      py::arg("K") = py::none(), py::arg("k_max") = BasisSpec::default_k_max,
      py::arg("weighting") = "inverse-distance",
      "Variational series estimate; K chosen by cross-validation when not given.");

  m.def(
      "fit_ose",
      [](const Array& points, const std::vector<double>& window, const py::object& rho, double r_min,
         double R, std::optional<int> K, int k_max) {
        const auto x = to_pattern(points, to_window(window), std::nullopt);
        const auto choice = choose_intensity(x, rho);
        const BasisSpec basis(R, r_min, std::max(k_max, K.value_or(1)));
        py::gil_scoped_release release;
        if (K)
          return Fit{ose_fit(x, choice.model, basis, *K, choice.descriptor), {}, {},
                     static_cast<double>(*K)};
        const OseContext ctx(x, choice.model, basis);
        auto sel = ose_fit_auto(ctx, choice.descriptor, k_max);
        return Fit{std::move(sel.fit),
                   {sel.curve.K.begin(), sel.curve.K.end()},
                   sel.curve.cv,
                   static_cast<double>(sel.curve.selected)};
      },
      py::arg("points"), py::arg("window"), py::arg("rho") = py::none(), py::arg("r_min") = 0.0,
      py::arg("R") = 0.125, py::arg("K") = py::none(), py::arg("k_max") = BasisSpec::default_k_max);

  m.def(
      "fit_kde",
      [](const Array& points, const std::vector<double>& window, const py::object& rho, double r_min,
         double R, std::optional<double> bandwidth, const std::string& divisor) {
        const auto x = to_pattern(points, to_window(window), std::nullopt);
        const auto choice = choose_intensity(x, rho);
        const auto d = kde_divisor_from_string(divisor);
        py::gil_scoped_release release;
        if (bandwidth)
          return Fit{kde_fit(x, choice.model, r_min, R, *bandwidth, d, choice.descriptor), {}, {},
                     *bandwidth};
        KdeOptions opt;
        opt.divisor = d;
        auto sel = kde_fit_auto(x, choice.model, r_min, R, opt, choice.descriptor);
        const double h = sel.fit.bandwidth;
        return Fit{std::move(sel.fit), std::move(sel.bandwidths), std::move(sel.cv), h};
      },
      py::arg("points"), py::arg("window"), py::arg("rho") = py::none(), py::arg("r_min") = 0.0,
      py::arg("R") = 0.125, py::arg("bandwidth") = py::none(), py::arg("divisor") = "distance");

  m.def(
      "run_benchmark",
      [](const std::string& config) {
        std::istringstream in(config);
        const auto c = parse_bench_config(in);
        BenchReport report;
        {
          py::gil_scoped_release release;
          report = run_benchmark(c);
        }
        py::list rows;
        for (const auto& r : report.rows) rows.append(summary_dict(r));
        return rows;
      },
      py::arg("config"), "Runs a study from config text; returns one dict per cell and estimator.");
}
