#include "kslab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kslab {

Ellipticity::Ellipticity(double l, double L) : lambda(l), Lambda(L) {
    if (!(l > 0.0 && L >= l)) throw std::invalid_argument("ellipticity requires 0 < lambda <= Lambda");
}

SymMatrix::SymMatrix(int dim) : dim_(dim) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("matrix dimension must be 1, 2 or 3");
}

SymMatrix SymMatrix::identity(int dim) {
    SymMatrix m(dim);
    for (int i = 0; i < dim; ++i) m.a_[i][i] = 1.0;
    return m;
}

SymMatrix SymMatrix::diagonal(const std::vector<double>& d) {
    SymMatrix m(static_cast<int>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) m.a_[i][i] = d[i];
    return m;
}

void SymMatrix::set(int i, int j, double v) {
    a_[i][j] = v;
    a_[j][i] = v;
}

double SymMatrix::trace() const {
    double t = 0.0;
    for (int i = 0; i < dim_; ++i) t += a_[i][i];
    return t;
}

double SymMatrix::frobenius() const {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) s += a_[i][j] * a_[i][j];
    return std::sqrt(s);
}

double SymMatrix::determinant() const {
    const auto& a = a_;
    switch (dim_) {
        case 1: return a[0][0];
        case 2: return a[0][0] * a[1][1] - a[0][1] * a[1][0];
        default:
            return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                   a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    }
}

double SymMatrix::contract(const SymMatrix& o) const {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) s += a_[i][j] * o.a_[i][j];
    return s;
}

SymMatrix SymMatrix::operator+(const SymMatrix& o) const {
    SymMatrix r(dim_);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r.a_[i][j] = a_[i][j] + o.a_[i][j];
    return r;
}

SymMatrix SymMatrix::operator-(const SymMatrix& o) const { return *this + o * -1.0; }

SymMatrix SymMatrix::operator*(double s) const {
    SymMatrix r(dim_);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r.a_[i][j] = a_[i][j] * s;
    return r;
}

std::vector<double> jacobi_eigenvalues(const SymMatrix& m, double tol) {
    const int n = m.dim();
    double a[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a[i][j] = (i < n && j < n) ? m(i, j) : 0.0;
    const double scale = std::max(m.frobenius(), 1e-300);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
        if (std::sqrt(off) <= tol * scale) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (a[p][q] == 0.0) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
    }
    std::vector<double> e(n);
    for (int i = 0; i < n; ++i) e[i] = a[i][i];
    std::sort(e.begin(), e.end());
    return e;
}

std::vector<double> eigenvalues(const SymMatrix& m) {
    const int n = m.dim();
    if (n == 1) return {m(0, 0)};
    if (n == 2) {
        const double mean = 0.5 * (m(0, 0) + m(1, 1));
        const double half = 0.5 * (m(0, 0) - m(1, 1));
        const double r = std::hypot(half, m(0, 1));
        return {mean - r, mean + r};
    }
    const double p1 = m(0, 1) * m(0, 1) + m(0, 2) * m(0, 2) + m(1, 2) * m(1, 2);
    const double q = m.trace() / 3.0;
    const double d0 = m(0, 0) - q, d1 = m(1, 1) - q, d2 = m(2, 2) - q;
    const double p2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    if (p <= 1e-14 * std::max(std::abs(q), 1e-300)) return {q, q, q};
    const SymMatrix b = (m - SymMatrix::identity(3) * q) * (1.0 / p);
    const double r = b.determinant() / 2.0;
    // acos is ill-conditioned near +-1 (nearly repeated roots)
    if (std::abs(r) > 1.0 - 1e-6) return jacobi_eigenvalues(m);
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    const double e2 = 3.0 * q - e1 - e3;
    std::vector<double> e{e3, e2, e1};
    std::sort(e.begin(), e.end());
    return e;
}

double pucci_minus(const SymMatrix& m, const Ellipticity& ell) {
    double s = 0.0;
    for (double e : eigenvalues(m)) s += e > 0.0 ? ell.lambda * e : ell.Lambda * e;
    return s;
}

double pucci_plus(const SymMatrix& m, const Ellipticity& ell) {
    double s = 0.0;
    for (double e : eigenvalues(m)) s += e > 0.0 ? ell.Lambda * e : ell.lambda * e;
    return s;
}

Point gradient_at(const ScalarField& u, std::size_t idx) {
    const Grid& g = u.grid();
    const Index3 i = g.multi_index(idx);
    Point out{0.0, 0.0, 0.0};
    for (int d = 0; d < g.dim(); ++d) {
        Index3 a = i, b = i;
        ++a[d];
        --b[d];
        out[d] = (u[g.index(a)] - u[g.index(b)]) / (2.0 * g.h());
    }
    return out;
}

SymMatrix hessian_at(const ScalarField& u, std::size_t idx) {
    const Grid& g = u.grid();
    const int n = g.dim();
    const Index3 i = g.multi_index(idx);
    const double h2 = g.h() * g.h();
    const double c = u[idx];
    SymMatrix m(n);
    auto at = [&](int d1, int s1, int d2, int s2) {
        Index3 j = i;
        j[d1] += s1;
        j[d2] += s2;
        return u[g.index(j)];
    };
    for (int d = 0; d < n; ++d) {
        Index3 a = i, b = i;
        ++a[d];
        --b[d];
        m.set(d, d, (u[g.index(a)] + u[g.index(b)] - 2.0 * c) / h2);
        for (int e = d + 1; e < n; ++e)
            m.set(d, e, (at(d, 1, e, 1) - at(d, 1, e, -1) - at(d, -1, e, 1) + at(d, -1, e, -1)) / (4.0 * h2));
    }
    return m;
}

namespace {

Grid interior_grid(const Grid& g) {
    for (int d = 0; d < g.dim(); ++d)
        if (g.counts()[d] < 5) throw std::invalid_argument("grid too small");
    return g.shrink(1);
}

template <class Fn>
void for_interior(const Grid& full, const Grid& inner, Fn&& fn) {
    for (std::size_t k = 0; k < inner.size(); ++k) {
        Index3 i = inner.multi_index(k);
        for (int d = 0; d < full.dim(); ++d) ++i[d];
        fn(k, full.index(i));
    }
}

}  // namespace

VectorField gradient(const ScalarField& u) {
    const Grid inner = interior_grid(u.grid());
    VectorField out{inner, std::vector<Point>(inner.size())};
    for_interior(u.grid(), inner, [&](std::size_t k, std::size_t i) { out.values[k] = gradient_at(u, i); });
    return out;
}

MatrixField hessian(const ScalarField& u) {
    const Grid inner = interior_grid(u.grid());
    MatrixField out{inner, std::vector<SymMatrix>(inner.size(), SymMatrix(u.grid().dim()))};
    for_interior(u.grid(), inner, [&](std::size_t k, std::size_t i) { out.values[k] = hessian_at(u, i); });
    return out;
}

ScalarField laplacian(const ScalarField& u) {
    const Grid inner = interior_grid(u.grid());
    std::vector<double> v(inner.size());
    for_interior(u.grid(), inner, [&](std::size_t k, std::size_t i) { v[k] = hessian_at(u, i).trace(); });
    return ScalarField(inner, std::move(v), "laplacian");
}

ScalarField pucci_field(const ScalarField& u, const Ellipticity& ell, PucciSign sign) {
    const Grid inner = interior_grid(u.grid());
    std::vector<double> v(inner.size());
    for_interior(u.grid(), inner, [&](std::size_t k, std::size_t i) {
        const SymMatrix m = hessian_at(u, i);
        v[k] = sign == PucciSign::Minus ? pucci_minus(m, ell) : pucci_plus(m, ell);
    });
    return ScalarField(inner, std::move(v), sign == PucciSign::Minus ? "pucci_minus" : "pucci_plus");
}

void LinearCoefficients::validate(double tol) const {
    const Grid& g = c.grid();
    if (!A.grid.same_as(g) || !b.grid.same_as(g) || !f.grid().same_as(g))
        throw std::invalid_argument("grid mismatch");
    if (A.values.size() != g.size() || b.values.size() != g.size())
        throw std::invalid_argument("grid mismatch");
    if (!ellipticity) return;
    for (const auto& a : A.values) {
        const auto e = eigenvalues(a);
        if (e.front() < ellipticity->lambda - tol || e.back() > ellipticity->Lambda + tol)
            throw std::invalid_argument("coefficient matrix violates the ellipticity bounds");
    }
}

ScalarField linear_apply(const ScalarField& u, const LinearCoefficients& coeffs) {
    coeffs.validate();
    if (!coeffs.c.grid().same_as(u.grid())) throw std::invalid_argument("grid mismatch");
    const Grid inner = interior_grid(u.grid());
    std::vector<double> v(inner.size());
    for_interior(u.grid(), inner, [&](std::size_t k, std::size_t i) {
        const Point du = gradient_at(u, i);
        double bdu = 0.0;
        for (int d = 0; d < u.grid().dim(); ++d) bdu += coeffs.b.values[i][d] * du[d];
        v[k] = coeffs.A.values[i].contract(hessian_at(u, i)) + bdu + coeffs.c[i] * u[i];
    });
    return ScalarField(inner, std::move(v), "linear_apply");
}

CheckReport pucci_sandwich_residual(const ScalarField& u, const ScalarField& f, const Ellipticity& ell, double tol) {
    for (double x : f.values())
        if (x < 0.0) throw std::invalid_argument("forcing must be non-negative");
    const Grid inner = interior_grid(u.grid());
    double worst_minus = 0.0, worst_plus = 0.0;
    for_interior(u.grid(), inner, [&](std::size_t, std::size_t i) {
        const auto fi = f.grid().same_as(u.grid()) ? f[i] : f.interpolate(u.grid().point(i));
        const SymMatrix m = hessian_at(u, i);
        worst_minus = std::max(worst_minus, pucci_minus(m, ell) - fi);
        worst_plus = std::max(worst_plus, -fi - pucci_plus(m, ell));
    });
    CheckReport r;
    r.name = "pucci_sandwich_residual";
    r.lhs = std::max(worst_minus, worst_plus);
    r.rhs = 0.0;
    r.tolerance = tol;
    r.h = u.grid().h();
    r.dim = u.grid().dim();
    r.constants.extra["lambda"] = ell.lambda;
    r.constants.extra["Lambda"] = ell.Lambda;
    r.measured["violation_minus"] = worst_minus;
    r.measured["violation_plus"] = worst_plus;
    return r.finalize();
}

ScalarField second_difference(const ScalarField& u, const Point& direction, double step) {
    const Grid& g = u.grid();
    const int n = g.dim();
    if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
    const double len = norm(direction, n);
    if (std::abs(len - 1.0) > 1e-9) throw std::invalid_argument("direction must be a unit vector");
    Index3 k{0, 0, 0};
    int margin = 0;
    for (int d = 0; d < n; ++d) {
        const double t = step * direction[d] / g.h();
        const double r = std::round(t);
        if (std::abs(t - r) > 1e-9) throw std::invalid_argument("step must map the direction onto a lattice offset");
        k[d] = static_cast<int>(r);
        margin = std::max(margin, std::abs(k[d]));
    }
    for (int d = 0; d < n; ++d)
        if (g.counts()[d] - 2 * margin < 3) throw std::invalid_argument("step too large for grid");
    const Grid inner = g.shrink(margin);
    std::vector<double> v(inner.size());
    const double s2 = step * step;
    for (std::size_t q = 0; q < inner.size(); ++q) {
        Index3 i = inner.multi_index(q);
        for (int d = 0; d < n; ++d) i[d] += margin;
        Index3 a = i, b = i;
        for (int d = 0; d < n; ++d) {
            a[d] += k[d];
            b[d] -= k[d];
        }
        v[q] = (u[g.index(a)] + u[g.index(b)] - 2.0 * u[g.index(i)]) / s2;
    }
    return ScalarField(inner, std::move(v), "second_difference");
}

namespace {

double sphere_area(int n) { return n * unit_ball_volume(n); }

// Lattice sum over offsets that are multiples of `stride`, restricted to |y| <= radius.
double fractional_sum(const ScalarField& u, const Index3& c, double radius, int stride, double expo) {
    const Grid& g = u.grid();
    const int n = g.dim();
    const double H = g.h() * stride;
    const int K = static_cast<int>(std::floor(radius / H + 1e-12));
    const int K1 = n > 1 ? K : 0, K2 = n > 2 ? K : 0;
    const double uc = u[g.index(c)];
    const double r2 = (radius / H) * (radius / H) * (1.0 + 1e-12);
    double s = 0.0;
    for (int a = -K; a <= K; ++a)
        for (int b = -K1; b <= K1; ++b)
            for (int e = -K2; e <= K2; ++e) {
                const double d2 = static_cast<double>(a * a + b * b + e * e);
                if (d2 == 0.0 || d2 > r2) continue;
                const Index3 p{c[0] + a * stride, c[1] + b * stride, c[2] + e * stride};
                const Index3 m{c[0] - a * stride, c[1] - b * stride, c[2] - e * stride};
                const double len = std::sqrt(d2) * H;
                s += (u[g.index(p)] + u[g.index(m)] - 2.0 * uc) / std::pow(len, expo);
            }
    return s * std::pow(H, n);
}

// Error exponents of the punctured lattice sum for an integrand ~ |y|^{2-n-s} times a smooth
// even function: h^{2-s}, h^2, h^{4-s}, h^4, ...
std::vector<double> richardson_exponents(double s, int count) {
    std::vector<double> e;
    for (int k = 0; static_cast<int>(e.size()) < count + 4; ++k) {
        e.push_back(2.0 * k + 2.0 - s);
        e.push_back(2.0 * k + 2.0);
    }
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }), e.end());
    e.resize(count);
    return e;
}

}  // namespace

FractionalEvaluation fractional_laplacian(const ScalarField& u, const Region& eval_region,
                                          const FractionalParams& params, const TailSpec& tail) {
    if (!(params.sigma > 0.0 && params.sigma < 2.0)) throw std::invalid_argument("sigma must lie in (0,2)");
    if (!(params.C > 0.0)) throw std::invalid_argument("kernel constant must be positive");
    if (params.level < 0 || params.level > 6) throw std::invalid_argument("quadrature level must lie in [0,6]");
    const Grid& g = u.grid();
    const int n = g.dim();
    const double expo = params.kernel_exponent.value_or(n + params.sigma);
    const double s = expo - n;
    if (!(s > 0.0 && s < 2.0)) throw std::invalid_argument("kernel exponent must lie in (n, n+2)");
    const Point lo = g.origin(), hi = g.upper();
    for (int d = 0; d < n; ++d)
        if (lo[d] > -params.R + 1e-12 || hi[d] < params.R - 1e-12)
            throw std::invalid_argument("grid does not cover B_R");
    const auto exps = richardson_exponents(s, params.level);
    const int coarsest = 1 << params.level;

    // suffix maxima of |u| ordered by distance from the origin, for the far-field bound
    std::vector<std::pair<double, double>> by_radius(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) by_radius[j] = {norm(g.point(j), n), std::abs(u[j])};
    std::sort(by_radius.begin(), by_radius.end());
    for (std::size_t j = by_radius.size(); j-- > 1;)
        by_radius[j - 1].second = std::max(by_radius[j - 1].second, by_radius[j].second);
    auto max_beyond = [&](double t) {
        auto it = std::lower_bound(by_radius.begin(), by_radius.end(), std::make_pair(t - 1e-12, -1.0));
        return it == by_radius.end() ? 0.0 : it->second;
    };

    FractionalEvaluation out;
    for (auto idx : eval_region.nodes(g)) {
        const Point x = g.point(idx);
        const double rx = norm(x, n);
        const double radius = params.R - rx;
        if (radius < 2.0 * coarsest * g.h())
            throw std::invalid_argument("eval point too close to grid boundary for requested R");
        const Index3 c = g.multi_index(idx);
        std::vector<double> T(params.level + 1);
        for (int j = 0; j <= params.level; ++j) T[j] = fractional_sum(u, c, radius, 1 << j, expo);
        for (int e = 0; e < params.level; ++e) {
            const double f = std::pow(2.0, exps[e]);
            for (int j = 0; j + 1 < static_cast<int>(T.size()) - e; ++j) T[j] = (f * T[j] - T[j + 1]) / (f - 1.0);
        }
        const double tail_integral = sphere_area(n) * std::pow(radius, -s) / s;
        double value = T[0] - 2.0 * u[idx] * tail_integral;

        // far field: u(x +- y) for |y| > radius is bounded by the largest |u| outside B_{R - 2|x|}
        double far = max_beyond(params.R - 2.0 * rx);
        if (tail.kind == TailSpec::Kind::PowerLaw)
            far = std::max(far, tail.amplitude * std::pow(std::max(params.R - 2.0 * rx, g.h()), -tail.decay));
        // near field: the omitted cell around y = 0 contributes at most |D^2 u| |y|^2 |y|^{-n-s}
        double d2max = 0.0;
        if (g.is_interior(idx)) {
            const auto ev = eigenvalues(hessian_at(u, idx));
            d2max = std::max(std::abs(ev.front()), std::abs(ev.back()));
        }
        const double rho = 0.5 * std::sqrt(static_cast<double>(n)) * g.h();
        const double near = d2max * sphere_area(n) * std::pow(rho, 2.0 - s) / (2.0 - s);
        out.nodes.push_back(idx);
        out.values.push_back(params.C * value);
        out.error_bounds.push_back(params.C * (2.0 * far * tail_integral + near));
    }
    return out;
}

}  // namespace kslab
