#pragma once

// Orthogonal-polynomial evaluation and fixed-grid quadrature.
//
// Hermite and associated Laguerre polynomials are generated by their three-term
// recurrences; no closed-form fallbacks.  Quadrature is deliberately plain:
// uniform trapezoid / Simpson panels over a finite window, or Gauss-Hermite for
// integrands with an e^{-x^2} envelope.

#include <array>
#include <cstddef>

#include <Eigen/Eigenvalues>

#include "common.hpp"

namespace iontomo {

// H_n(x), physicists' convention: H_0 = 1, H_1 = 2x,
// H_{n+1} = 2x H_n - 2n H_{n-1}.
inline double hermite(int n, double x) {
    if (n < 0) throw ValidationError("hermite: order must be >= 0");
    double hm1 = 1.0;
    if (n == 0) return hm1;
    double h = 2.0 * x;
    for (int k = 1; k < n; ++k) {
        double hp1 = 2.0 * x * h - 2.0 * k * hm1;
        hm1 = h;
        h = hp1;
    }
    return h;
}

// Fills out[0..n_max] with H_0(x)..H_{n_max}(x).
inline void hermite_sequence(int n_max, double x, std::vector<double>& out) {
    if (n_max < 0) throw ValidationError("hermite_sequence: order must be >= 0");
    out.resize(static_cast<std::size_t>(n_max) + 1);
    out[0] = 1.0;
    if (n_max == 0) return;
    out[1] = 2.0 * x;
    for (int k = 1; k < n_max; ++k)
        out[k + 1] = 2.0 * x * out[k] - 2.0 * k * out[k - 1];
}

// Fills out[0..n_max] with H_n(x)/sqrt(2^n n!).  Same recurrence, rescaled so
// values stay representable for n up to 160.
inline void hermite_normalized_sequence(int n_max, double x, std::vector<double>& out) {
    if (n_max < 0) throw ValidationError("hermite_normalized_sequence: order must be >= 0");
    out.resize(static_cast<std::size_t>(n_max) + 1);
    out[0] = 1.0;
    if (n_max == 0) return;
    out[1] = std::sqrt(2.0) * x;
    for (int k = 1; k < n_max; ++k)
        out[k + 1] = x * std::sqrt(2.0 / (k + 1.0)) * out[k] - std::sqrt(k / (k + 1.0)) * out[k - 1];
}

namespace detail {

// L_n^k(x) for k >= 0 via the recurrence in n:
// (n+1) L_{n+1}^k = (2n + k + 1 - x) L_n^k - (n + k) L_{n-1}^k.
inline double laguerre_nonneg(int n, int k, double x) {
    double lm1 = 1.0;
    if (n == 0) return lm1;
    double l = 1.0 + k - x;
    for (int j = 1; j < n; ++j) {
        double lp1 = ((2.0 * j + k + 1.0 - x) * l - (j + k) * lm1) / (j + 1.0);
        lm1 = l;
        l = lp1;
    }
    return l;
}

inline double factorial(int n) {
    if (n < 0 || n > 170) throw ValidationError("factorial: argument outside [0,170]");
    double r = 1.0;
    for (int k = 2; k <= n; ++k) r *= k;
    return r;
}

// sqrt(n!/m!) without overflow for n, m <= 170.
inline double sqrt_factorial_ratio(int n, int m) {
    double r = 1.0;
    if (n >= m) {
        for (int k = m + 1; k <= n; ++k) r *= std::sqrt(static_cast<double>(k));
    } else {
        for (int k = n + 1; k <= m; ++k) r /= std::sqrt(static_cast<double>(k));
    }
    return r;
}

}  // namespace detail

// Associated Laguerre L_n^k(x).  Negative upper index is mapped through
// L_n^{-j}(x) = (-x)^j (n-j)!/n! L_{n-j}^j(x), valid for j <= n.
inline double laguerre(int n, int k, double x) {
    if (n < 0) throw ValidationError("laguerre: degree must be >= 0");
    if (k >= 0) return detail::laguerre_nonneg(n, k, x);
    int j = -k;
    if (n + k < 0) throw ValidationError("laguerre: negative upper index requires n + k >= 0");
    double scale = detail::factorial(n - j) / detail::factorial(n);
    return std::pow(-x, j) * scale * detail::laguerre_nonneg(n - j, j, x);
}

enum class QuadScheme { trapezoid, simpson, gauss_hermite };

// Finite integration window per axis; axes beyond the integrand's arity are ignored.
// n_points applies to every axis unless a per-axis override is nonzero.
struct QuadratureSpec {
    QuadScheme scheme = QuadScheme::trapezoid;
    int n_points = 257;
    std::array<double, 3> cutoff = {8.0, 8.0, 8.0};
    std::array<int, 3> points = {0, 0, 0};

    int axis_points(int axis) const {
        int n = points[static_cast<std::size_t>(axis)];
        return n > 0 ? n : n_points;
    }
    void validate() const {
        if (n_points < 8) throw ValidationError("QuadratureSpec: n_points must be >= 8");
        for (double c : cutoff)
            if (!(c > 0.0) || !std::isfinite(c))
                throw ValidationError("QuadratureSpec: cutoffs must be finite and positive");
        for (int p : points)
            if (p != 0 && p < 8) throw ValidationError("QuadratureSpec: per-axis points must be >= 8");
    }
};

struct Quad1DResult {
    double value = 0.0;
    double error_estimate = 0.0;
};

// Gauss-Hermite nodes/weights for int e^{-x^2} g(x) dx, via the eigenvalues of
// the Jacobi matrix of the orthonormal recurrence (Golub-Welsch).  Nodes come
// out ascending and are symmetrized exactly about 0.  n <= 256.
inline void gauss_hermite_nodes(int n, std::vector<double>& x, std::vector<double>& w) {
    if (n < 1 || n > 256) throw ValidationError("gauss_hermite_nodes: n outside [1,256]");
    x.assign(static_cast<std::size_t>(n), 0.0);
    w.assign(static_cast<std::size_t>(n), 0.0);
    if (n == 1) {
        w[0] = std::sqrt(pi);
        return;
    }
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1);
    for (int j = 1; j < n; ++j) sub[j - 1] = std::sqrt(0.5 * j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success)
        throw NumericalError("gauss_hermite_nodes: tridiagonal eigensolve failed");
    for (int i = 0; i < n; ++i) {
        x[static_cast<std::size_t>(i)] = es.eigenvalues()[i];
        double q0 = es.eigenvectors()(0, i);
        w[static_cast<std::size_t>(i)] = std::sqrt(pi) * q0 * q0;
    }
    for (int i = 0; i < n / 2; ++i) {
        std::size_t a = static_cast<std::size_t>(i);
        std::size_t b = static_cast<std::size_t>(n - 1 - i);
        double z = 0.5 * (x[b] - x[a]);
        x[a] = -z;
        x[b] = z;
        double wi = 0.5 * (w[a] + w[b]);
        w[a] = w[b] = wi;
    }
    if (n % 2 == 1) x[static_cast<std::size_t>(n / 2)] = 0.0;
}

namespace detail {

template <typename F>
double quad_window(const F& f, double a, double b, int n, QuadScheme scheme) {
    KahanSum acc;
    if (scheme == QuadScheme::simpson && n % 2 == 0) ++n;  // Simpson needs an even panel count
    double h = (b - a) / (n - 1);
    for (int i = 0; i < n; ++i) {
        double xi = a + h * i;
        double wi = 1.0;
        if (scheme == QuadScheme::trapezoid) {
            wi = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        } else {
            wi = (i == 0 || i == n - 1) ? 1.0 / 3.0 : (i % 2 == 1 ? 4.0 / 3.0 : 2.0 / 3.0);
        }
        double v = f(xi);
        if (!std::isfinite(v)) throw NumericalError("integrate_1d: non-finite sample");
        acc.add(wi * v);
    }
    return acc.value() * h;
}

template <typename F>
double quad_gh(const F& f, int n) {
    std::vector<double> x, w;
    gauss_hermite_nodes(n, x, w);
    KahanSum acc;
    for (int i = 0; i < n; ++i) {
        double xi = x[static_cast<std::size_t>(i)];
        double v = f(xi);
        if (!std::isfinite(v)) throw NumericalError("integrate_1d: non-finite sample");
        // weight * e^{x^2} turns the e^{-x^2}-moment rule into a plain integral
        acc.add(w[static_cast<std::size_t>(i)] * std::exp(xi * xi) * v);
    }
    return acc.value();
}

}  // namespace detail

// Integral of f over [-cutoff[0], cutoff[0]] (Gauss-Hermite ignores the window).
// error_estimate is the Richardson difference against a refined rule.
template <typename F>
Quad1DResult integrate_1d(const F& f, const QuadratureSpec& spec) {
    spec.validate();
    int n = spec.axis_points(0);
    double c = spec.cutoff[0];
    Quad1DResult r;
    if (spec.scheme == QuadScheme::gauss_hermite) {
        int n0 = std::min(n, 256);
        double coarse = detail::quad_gh(f, std::max(8, n0 / 2));
        r.value = detail::quad_gh(f, n0);
        r.error_estimate = std::abs(r.value - coarse);
        return r;
    }
    double coarse = detail::quad_window(f, -c, c, (n + 1) / 2, spec.scheme);
    r.value = detail::quad_window(f, -c, c, n, spec.scheme);
    double order = spec.scheme == QuadScheme::simpson ? 15.0 : 3.0;
    r.error_estimate = std::abs(r.value - coarse) / order;
    return r;
}

// Tensor-product rule for f(X, mu, nu) over the three windows.  The integrand may
// be complex; samples must be finite.
template <typename F>
cplx integrate_3d(const F& f, const QuadratureSpec& spec) {
    spec.validate();
    std::array<std::vector<double>, 3> nodes, weights;
    for (int ax = 0; ax < 3; ++ax) {
        int n = spec.axis_points(ax);
        double c = spec.cutoff[static_cast<std::size_t>(ax)];
        auto& xs = nodes[static_cast<std::size_t>(ax)];
        auto& ws = weights[static_cast<std::size_t>(ax)];
        if (spec.scheme == QuadScheme::gauss_hermite) {
            gauss_hermite_nodes(std::min(n, 256), xs, ws);
            for (std::size_t i = 0; i < xs.size(); ++i) ws[i] *= std::exp(xs[i] * xs[i]);
        } else {
            if (spec.scheme == QuadScheme::simpson && n % 2 == 0) ++n;
            double h = 2.0 * c / (n - 1);
            xs.resize(static_cast<std::size_t>(n));
            ws.resize(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                xs[static_cast<std::size_t>(i)] = -c + h * i;
                double wi;
                if (spec.scheme == QuadScheme::trapezoid)
                    wi = (i == 0 || i == n - 1) ? 0.5 : 1.0;
                else
                    wi = (i == 0 || i == n - 1) ? 1.0 / 3.0 : (i % 2 == 1 ? 4.0 / 3.0 : 2.0 / 3.0);
                ws[static_cast<std::size_t>(i)] = wi * h;
            }
        }
    }
    KahanSumC acc;
    for (std::size_t i = 0; i < nodes[0].size(); ++i)
        for (std::size_t j = 0; j < nodes[1].size(); ++j)
            for (std::size_t k = 0; k < nodes[2].size(); ++k) {
                cplx v = f(nodes[0][i], nodes[1][j], nodes[2][k]);
                if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                    throw NumericalError("integrate_3d: non-finite sample");
                acc.add(weights[0][i] * weights[1][j] * weights[2][k] * v);
            }
    return acc.value();
}

}  // namespace iontomo
