#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kslab/contact.hpp"
#include "kslab/operators.hpp"
#include "kslab/regularity.hpp"
#include "kslab/solvers.hpp"
#include "kslab/suites.hpp"

namespace py = pybind11;
using namespace kslab;

namespace {

Point to_point(const std::vector<double>& v) {
    if (v.empty() || v.size() > 3) throw std::invalid_argument("points have 1 to 3 coordinates");
    Point p{0.0, 0.0, 0.0};
    std::copy(v.begin(), v.end(), p.begin());
    return p;
}

py::array_t<double> to_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

std::vector<double> from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    return {a.data(), a.data() + a.size()};
}

PucciSign to_sign(const std::string& s) {
    if (s == "minus") return PucciSign::Minus;
    if (s == "plus") return PucciSign::Plus;
    throw std::invalid_argument("sign must be 'minus' or 'plus'");
}

SymMatrix to_sym(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2 || a.shape(0) != a.shape(1) || a.shape(0) < 1 || a.shape(0) > 3)
        throw std::invalid_argument("expected a square matrix of size 1 to 3");
    const int n = static_cast<int>(a.shape(0));
    SymMatrix m(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            if (std::abs(a.at(i, j) - a.at(j, i)) > 1e-12) throw std::invalid_argument("matrix must be symmetric");
            m.set(i, j, a.at(i, j));
        }
    return m;
}

py::dict solve_dict(const SolveResult& r) {
    py::dict d;
    d["field"] = r.field;
    d["residual"] = r.residual;
    d["iterations"] = r.iterations;
    d["provenance"] = r.provenance.dump();
    return d;
}

}  // namespace

PYBIND11_MODULE(_kslab, m) {
    py::register_exception<HypothesisError>(m, "HypothesisError", PyExc_ValueError);

    py::class_<Grid>(m, "Grid")
        .def_static("cube", [](int dim, double h, double half_width) { return Grid::cube(dim, h, half_width); },
                    py::arg("dim"), py::arg("h"), py::arg("half_width") = 1.0)
        .def_property_readonly("dim", &Grid::dim)
        .def_property_readonly("h", &Grid::h)
        .def_property_readonly("size", &Grid::size)
        .def_property_readonly("shape", [](const Grid& g) {
            std::vector<py::ssize_t> s;
            for (int d = 0; d < g.dim(); ++d) s.push_back(g.counts()[d]);
            return s;
        })
        .def("points", [](const Grid& g) {
            py::array_t<double> out({static_cast<py::ssize_t>(g.size()), static_cast<py::ssize_t>(g.dim())});
            auto a = out.mutable_unchecked<2>();
            for (std::size_t i = 0; i < g.size(); ++i)
                for (int d = 0; d < g.dim(); ++d) a(i, d) = g.point(i)[d];
            return out;
        });

    py::class_<ScalarField>(m, "Field")
        .def(py::init([](const Grid& g, const py::array_t<double, py::array::c_style | py::array::forcecast>& v) {
                 if (static_cast<std::size_t>(v.size()) != g.size())
                     throw std::invalid_argument("value count does not match the grid");
                 return ScalarField(g, from_array(v));
             }),
             py::arg("grid"), py::arg("values"))
        .def_property_readonly("grid", &ScalarField::grid)
        .def_property_readonly("name", &ScalarField::name)
        .def_property_readonly("values", [](const ScalarField& u) { return to_array(u.values()); })
        .def("__len__", [](const ScalarField& u) { return u.values().size(); });

    py::class_<Region>(m, "Region")
        .def_static("all", &Region::all)
        .def_static("ball", [](const std::vector<double>& c, double r, bool closed) { return Region::ball(to_point(c), r, closed); },
                    py::arg("center"), py::arg("radius"), py::arg("closed") = false)
        .def_static("cube", [](const std::vector<double>& c, double s, bool closed) { return Region::cube(to_point(c), s, closed); },
                    py::arg("center"), py::arg("side"), py::arg("closed") = false)
        .def_static("halfspace", [](const std::vector<double>& nrm, double off) { return Region::halfspace(to_point(nrm), off); },
                    py::arg("normal"), py::arg("offset"))
        .def("intersect", &Region::intersect)
        .def("minus", &Region::minus)
        .def("unite", &Region::unite)
        .def("contains", [](const Region& r, const std::vector<double>& p) { return r.contains(to_point(p), static_cast<int>(p.size())); })
        .def("__repr__", &Region::describe);

    py::class_<CheckReport>(m, "CheckReport")
        .def_readonly("name", &CheckReport::name)
        .def_readonly("passed", &CheckReport::pass)
        .def_readonly("lhs", &CheckReport::lhs)
        .def_readonly("rhs", &CheckReport::rhs)
        .def_readonly("margin", &CheckReport::margin)
        .def_readonly("tolerance", &CheckReport::tolerance)
        .def("to_json", [](const CheckReport& r) { return to_json(r).dump(); });

    m.def("field_library", &field_library, py::arg("name"), py::arg("grid"), py::arg("params") = LibraryParams{});
    m.def("field_library_names", &field_library_names);

    m.def("pucci_minus", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& M, double lam, double Lam) {
        return pucci_minus(to_sym(M), Ellipticity(lam, Lam));
    }, py::arg("matrix"), py::arg("lam"), py::arg("Lam"));
    m.def("pucci_plus", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& M, double lam, double Lam) {
        return pucci_plus(to_sym(M), Ellipticity(lam, Lam));
    }, py::arg("matrix"), py::arg("lam"), py::arg("Lam"));
    m.def("laplacian", &laplacian);
    m.def("pucci_field", [](const ScalarField& u, double lam, double Lam, const std::string& sign) {
        return pucci_field(u, Ellipticity(lam, Lam), to_sign(sign));
    }, py::arg("field"), py::arg("lam"), py::arg("Lam"), py::arg("sign") = "minus");
    m.def("inf_convolution", &inf_convolution, py::arg("field"), py::arg("eps"));

    m.def("solve_poisson", [](const Grid& g, const Region& domain, const ScalarField& f, const ScalarField& boundary) {
        return solve_dict(solve_poisson(g, domain, f, BoundaryData::from_field(boundary)));
    }, py::arg("grid"), py::arg("domain"), py::arg("f"), py::arg("boundary"));
    m.def("solve_pucci", [](const Grid& g, const Region& domain, const std::string& sign, const ScalarField& f,
                            const ScalarField& boundary, double lam, double Lam) {
        return solve_dict(solve_pucci(g, domain, to_sign(sign), f, BoundaryData::from_field(boundary), Ellipticity(lam, Lam)));
    }, py::arg("grid"), py::arg("domain"), py::arg("sign"), py::arg("f"), py::arg("boundary"), py::arg("lam"), py::arg("Lam"));

    m.def("holder_from_decay", [](double theta, double rho) {
        const auto r = holder_from_decay(theta, rho);
        return py::make_tuple(r.alpha, r.C);
    }, py::arg("theta"), py::arg("rho"));
    m.def("harnack_quotient_check", &harnack_quotient_check, py::arg("field"), py::arg("r"));

    m.def("random_walk_hitting", [](int dim, const Region& target, const std::vector<double>& start, std::uint64_t n_samples,
                                    std::uint64_t seed, double h) {
        WalkConfig w;
        w.n_samples = n_samples;
        w.seed = seed;
        w.h = h;
        const auto e = random_walk_hitting(dim, target, to_point(start), w);
        py::dict d;
        d["probability"] = e.probability;
        d["halfwidth"] = e.halfwidth;
        d["hits"] = e.hits;
        d["samples"] = e.samples;
        return d;
    }, py::arg("dim"), py::arg("target"), py::arg("start"), py::arg("n_samples") = 10000, py::arg("seed") = 1,
       py::arg("h") = 1.0 / 32.0);

    m.def("suite_names", &suite_names);
    m.def("run_suite_json", [](const std::string& name, int dim, std::optional<double> h, std::uint64_t seed,
                               const std::map<std::string, std::string>& params) {
        SuiteSpec s;
        s.name = name;
        s.dim = dim;
        s.h = h;
        s.seed = seed;
        s.params = params;
        return to_json(run_suite(s)).dump();
    }, py::arg("name"), py::arg("dim") = 2, py::arg("h") = std::nullopt, py::arg("seed") = 1,
       py::arg("params") = std::map<std::string, std::string>{});
}
