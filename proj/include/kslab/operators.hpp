#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "kslab/grid.hpp"
#include "kslab/report.hpp"

namespace kslab {

struct Ellipticity {
    double lambda = 1.0;
    double Lambda = 1.0;
    Ellipticity(double l, double L);
};

class SymMatrix {
public:
    explicit SymMatrix(int dim = 1);
    static SymMatrix identity(int dim);
    static SymMatrix diagonal(const std::vector<double>& d);

    int dim() const { return dim_; }
    double operator()(int i, int j) const { return a_[i][j]; }
    void set(int i, int j, double v);

    double trace() const;
    double frobenius() const;
    double determinant() const;
    // A:M = sum_ij A_ij M_ij
    double contract(const SymMatrix& other) const;

    SymMatrix operator+(const SymMatrix& o) const;
    SymMatrix operator-(const SymMatrix& o) const;
    SymMatrix operator*(double s) const;
    SymMatrix operator-() const { return *this * -1.0; }

private:
    int dim_;
    std::array<std::array<double, 3>, 3> a_{};
};

// Ascending eigenvalues: closed form in dimensions 1-2, trigonometric cubic in 3 with a
// cyclic Jacobi fallback near repeated roots.
std::vector<double> eigenvalues(const SymMatrix& m);
std::vector<double> jacobi_eigenvalues(const SymMatrix& m, double tol = 1e-12);

double pucci_minus(const SymMatrix& m, const Ellipticity& ell);
double pucci_plus(const SymMatrix& m, const Ellipticity& ell);

struct VectorField {
    Grid grid;
    std::vector<Point> values;
};

struct MatrixField {
    Grid grid;
    std::vector<SymMatrix> values;
};

// Centered differences. Outputs live on the interior grid (one node removed per side).
VectorField gradient(const ScalarField& u);
MatrixField hessian(const ScalarField& u);
ScalarField laplacian(const ScalarField& u);

// Discrete derivatives at one interior node of u's grid.
Point gradient_at(const ScalarField& u, std::size_t idx);
SymMatrix hessian_at(const ScalarField& u, std::size_t idx);

enum class PucciSign { Minus, Plus };
ScalarField pucci_field(const ScalarField& u, const Ellipticity& ell, PucciSign sign);

struct LinearCoefficients {
    MatrixField A;
    VectorField b;
    ScalarField c;
    ScalarField f;
    std::optional<Ellipticity> ellipticity;

    // Checks shared grids and, when an ellipticity is attached, lambda I <= A <= Lambda I.
    void validate(double tol = 1e-12) const;
};

ScalarField linear_apply(const ScalarField& u, const LinearCoefficients& coeffs);

CheckReport pucci_sandwich_residual(const ScalarField& u, const ScalarField& f, const Ellipticity& ell,
                                    double tol = 1e-8);

// v = (u(x + s e) + u(x - s e) - 2u(x)) / s^2 where s e must be a lattice offset.
ScalarField second_difference(const ScalarField& u, const Point& direction, double step);

struct FractionalParams {
    double sigma = 1.0;
    double C = 1.0;
    double R = 1.0;
    int level = 0;
    // Kernel denominator |y|^{kernel_exponent}; defaults to n + sigma.
    std::optional<double> kernel_exponent;
};

struct TailSpec {
    enum class Kind { Zero, PowerLaw } kind = Kind::Zero;
    // |u(z)| <= amplitude |z|^{-decay} outside B_R (power-law kind).
    double amplitude = 0.0;
    double decay = 0.0;
};

struct FractionalEvaluation {
    std::vector<std::size_t> nodes;
    std::vector<double> values;
    std::vector<double> error_bounds;
};

FractionalEvaluation fractional_laplacian(const ScalarField& u, const Region& eval_region,
                                          const FractionalParams& params, const TailSpec& tail = {});

}  // namespace kslab
