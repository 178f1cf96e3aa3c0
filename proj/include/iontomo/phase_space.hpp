#pragma once

// Forward phase-space representations: symplectic-tomography marginals
// w(X, mu, nu) of the quadrature X_hat = mu q_hat + nu p_hat, and Wigner
// functions, both in closed form over the invariant number basis.
//
// Time never enters the series coefficients; it only rotates the arguments:
//   w(X, mu, nu, t)  = w(X, mu(t), nu(t), 0),   mu(t) = mu Re eps + nu Re eps',
//                                               nu(t) = mu Im eps + nu Im eps',
//   W(q, p, t)       = W(q(t), p(t), 0),        q(t) = q Im eps' - p Im eps,
//                                               p(t) = p Re eps  - q Re eps'.
// Both maps have unit determinant whenever the Wronskian invariant holds.
//
// Normalization: int W dq dp / (2 pi) = 1 and int w dX = 1 per (mu, nu) line.

#include "states.hpp"

namespace iontomo {

struct RotatedParams {
    double mu_t = 0.0;
    double nu_t = 0.0;
    // phase-point map (q, p) -> (q_t, p_t)
    double qt_q = 0.0, qt_p = 0.0;
    double pt_q = 0.0, pt_p = 0.0;

    double det() const { return qt_q * pt_p - qt_p * pt_q; }
};

inline RotatedParams rotated_params(const EpsilonTrajectory& traj, double t, double mu, double nu) {
    auto [e, v] = epsilon_at(traj, t);
    RotatedParams rp;
    rp.mu_t = mu * e.real() + nu * v.real();
    rp.nu_t = mu * e.imag() + nu * v.imag();
    rp.qt_q = v.imag();
    rp.qt_p = -e.imag();
    rp.pt_q = -v.real();
    rp.pt_p = e.real();
    return rp;
}

// Gaussian marginal of a correlated coherent state:
//   w = (2 pi sigma_X)^{-1/2} exp(-(X - Xbar)^2 / (2 sigma_X)),
//   Xbar = mu <q> + nu <p>,  sigma_X = mu^2 s_qq + nu^2 s_pp + 2 mu nu s_pq.
inline double gaussian_tomogram(const StateSpec& state, const EpsilonTrajectory& traj, double t,
                                double X, double mu, double nu) {
    if (state.kind != StateKind::coherent)
        throw ValidationError("gaussian_tomogram: state must be coherent");
    if (mu == 0.0 && nu == 0.0)
        throw ValidationError("gaussian_tomogram: (mu, nu) = (0, 0) is degenerate");
    Moments mo = moments(state, traj, t);
    double xbar = mu * mo.mean_q + nu * mo.mean_p;
    double sig = mu * mu * mo.sigma_qq + nu * nu * mo.sigma_pp + 2.0 * mu * nu * mo.sigma_pq;
    if (!(sig > 0.0)) throw NumericalError("gaussian_tomogram: non-positive sigma_X");
    double d = X - xbar;
    return std::exp(-d * d / (2.0 * sig)) / std::sqrt(2.0 * pi * sig);
}

namespace detail {

struct TomogramFrame {
    double s = 0.0;        // mu_t^2 + nu_t^2
    double y = 0.0;        // X / sqrt(s)
    double envelope = 0.0; // (pi s)^{-1/2} exp(-y^2)
    double phi = 0.0;      // atan2(nu_t, mu_t)
};

inline TomogramFrame tomogram_frame(const RotatedParams& rp, double X) {
    TomogramFrame fr;
    fr.s = rp.mu_t * rp.mu_t + rp.nu_t * rp.nu_t;
    if (!(fr.s > 1e-18))
        throw ValidationError("tomogram: rotated (mu, nu) is degenerate");
    fr.y = X / std::sqrt(fr.s);
    fr.envelope = std::exp(-fr.y * fr.y) / std::sqrt(pi * fr.s);
    fr.phi = std::atan2(rp.nu_t, rp.mu_t);
    return fr;
}

}  // namespace detail

// Number-basis matrix element of the quadrature projector,
//   w_nm = (pi s)^{-1/2} 2^{-(n+m)/2} (n! m!)^{-1/2} e^{i(m-n) phi}
//          exp(-X^2/s) H_n(X/sqrt(s)) H_m(X/sqrt(s)),
// with s = mu_t^2 + nu_t^2 and e^{i phi} = (mu_t + i nu_t)/sqrt(s).  Satisfies
// w_nm^* = w_mn; the diagonal is the number-state marginal.  alt_phase selects
// the alternate convention e^{i phi'} = (nu_t + i mu_t)/sqrt(s) with conjugate
// pairing, kept only for comparison: it is not Hermitian in (n, m) and fails
// the position-density identity at (mu, nu) = (1, 0).
inline cplx fock_cross_tomogram(int n, int m, const EpsilonTrajectory& traj, double t, double X,
                                double mu, double nu, bool alt_phase = false) {
    if (n < 0 || m < 0 || n > 160 || m > 160)
        throw ValidationError("fock_cross_tomogram: levels outside [0,160]");
    RotatedParams rp = rotated_params(traj, t, mu, nu);
    auto fr = detail::tomogram_frame(rp, X);
    std::vector<double> h;
    hermite_normalized_sequence(std::max(n, m), fr.y, h);
    double mag = fr.envelope * h[static_cast<std::size_t>(n)] * h[static_cast<std::size_t>(m)];
    double ang = alt_phase ? (n - m) * std::atan2(rp.mu_t, rp.nu_t) : (m - n) * fr.phi;
    return mag * std::exp(cplx{0.0, ang});
}

namespace detail {

// sum_{n,m} c_n c_m^* w_nm collapsed over the common frame:
//   w = (pi s)^{-1/2} e^{-y^2} | sum_n c_n e^{-i n phi} H_n(y)/sqrt(2^n n!) |^2.
inline double series_tomogram(const std::vector<cplx>& coeffs, const EpsilonTrajectory& traj,
                              double t, double X, double mu, double nu) {
    RotatedParams rp = rotated_params(traj, t, mu, nu);
    auto fr = tomogram_frame(rp, X);
    int N = static_cast<int>(coeffs.size()) - 1;
    std::vector<double> h;
    hermite_normalized_sequence(N, fr.y, h);
    cplx rot = std::exp(cplx{0.0, -fr.phi});
    cplx ph = 1.0;
    KahanSumC acc;
    for (int n = 0; n <= N; ++n) {
        acc.add(coeffs[static_cast<std::size_t>(n)] * ph * h[static_cast<std::size_t>(n)]);
        ph *= rot;
    }
    return fr.envelope * std::norm(acc.value());
}

}  // namespace detail

// Marginal of an f-deformed coherent state: the number-basis double series with
// the state's stored coefficients.  Real and nonnegative by construction.
inline double f_tomogram(const StateSpec& state, const EpsilonTrajectory& traj, double t, double X,
                         double mu, double nu) {
    if (state.kind != StateKind::f_coherent)
        throw ValidationError("f_tomogram: state must be f_coherent");
    return detail::series_tomogram(state.coeffs, traj, t, X, mu, nu);
}

// Marginal of any supported state; coherent states take the Gaussian closed form.
inline double state_tomogram(const StateSpec& state, const EpsilonTrajectory& traj, double t,
                             double X, double mu, double nu) {
    if (state.kind == StateKind::coherent)
        return gaussian_tomogram(state, traj, t, X, mu, nu);
    return detail::series_tomogram(state.coeffs, traj, t, X, mu, nu);
}

// Wigner function at the rotated phase point.  Number-basis kernel for m >= n:
//   K_nm = 2 (-1)^n sqrt(n!/m!) (sqrt(2)(q_t + i p_t))^{m-n}
//          L_n^{m-n}(2 r^2) e^{-r^2},   r^2 = q_t^2 + p_t^2,
// summed diagonal by diagonal (d = m - n), conjugate pairs folded; a diagonal
// whose total contribution drops below 1e-14 terminates the sweep.
inline double wigner(const StateSpec& state, const EpsilonTrajectory& traj, double t, double q,
                     double p) {
    RotatedParams rp = rotated_params(traj, t, 1.0, 0.0);
    double qt = rp.qt_q * q + rp.qt_p * p;
    double pt = rp.pt_q * q + rp.pt_p * p;
    double r2 = qt * qt + pt * pt;
    double env = 2.0 * std::exp(-r2);
    cplx z = std::sqrt(2.0) * cplx{qt, pt};
    int N = static_cast<int>(state.coeffs.size()) - 1;

    double total = 0.0;
    cplx zd = 1.0;
    for (int d = 0; d <= N; ++d) {
        // g_n = sqrt(n!/(n+d)!) maintained incrementally
        double g = 1.0 / std::sqrt(detail::factorial(d));
        double sign = 1.0;
        KahanSumC diag;
        for (int n = 0; n + d <= N; ++n) {
            if (n > 0) {
                g *= std::sqrt(n / (n + static_cast<double>(d)));
                sign = -sign;
            }
            cplx cc = state.coeffs[static_cast<std::size_t>(n)] *
                      std::conj(state.coeffs[static_cast<std::size_t>(n) + static_cast<std::size_t>(d)]);
            diag.add(cc * (sign * g * laguerre(n, d, 2.0 * r2)));
        }
        cplx term = env * zd * diag.value();
        double contrib = d == 0 ? std::real(term) : 2.0 * std::real(term);
        total += contrib;
        if (d > 0 && std::abs(contrib) < 1e-14 * std::max(1.0, std::abs(total))) break;
        zd *= z;
    }
    return total;
}

// ---- stored grids ----------------------------------------------------------

struct GridAxis {
    double min = 0.0;
    double max = 0.0;
    int n = 0;

    void validate() const {
        if (n < 2 || !(max > min) || !std::isfinite(min) || !std::isfinite(max))
            throw ValidationError("GridAxis: need n >= 2 and max > min");
    }
    double step() const { return (max - min) / (n - 1); }
    double value(int i) const { return min + step() * i; }
};

enum class TomogramSource { gaussian_closed_form, fock_series, external };

// Tomogram samples along one or more (mu, nu) lines sharing an X axis.
// Values are clamped at -1e-12; each line records its quadrature-normalization
// defect |sum w dX - 1|.
struct Tomogram {
    GridAxis x_axis;
    std::vector<std::pair<double, double>> lines;  // (mu, nu) per line
    std::vector<std::vector<double>> values;       // [line][ix]
    std::vector<double> norm_defect;               // per line
    TomogramSource source = TomogramSource::external;

    double max_norm_defect() const {
        double m = 0.0;
        for (double d : norm_defect) m = std::max(m, d);
        return m;
    }
};

inline Tomogram make_tomogram(const StateSpec& state, const EpsilonTrajectory& traj, double t,
                              const std::vector<std::pair<double, double>>& lines,
                              const GridAxis& x_axis, int threads = 1) {
    x_axis.validate();
    if (lines.empty()) throw ValidationError("make_tomogram: no (mu, nu) lines");
    Tomogram tg;
    tg.x_axis = x_axis;
    tg.lines = lines;
    tg.values.assign(lines.size(), std::vector<double>(static_cast<std::size_t>(x_axis.n), 0.0));
    tg.norm_defect.assign(lines.size(), 0.0);
    tg.source = state.kind == StateKind::coherent ? TomogramSource::gaussian_closed_form
                                                  : TomogramSource::fock_series;
    parallel_for(lines.size(), threads, [&](std::size_t li) {
        auto [mu, nu] = tg.lines[li];
        KahanSum norm;
        for (int i = 0; i < x_axis.n; ++i) {
            double w = state_tomogram(state, traj, t, x_axis.value(i), mu, nu);
            if (w < 0.0) {
                if (w < -1e-12) throw NumericalError("make_tomogram: negative marginal value");
                w = 0.0;
            }
            tg.values[li][static_cast<std::size_t>(i)] = w;
            norm.add((i == 0 || i == x_axis.n - 1 ? 0.5 : 1.0) * w);
        }
        tg.norm_defect[li] = std::abs(norm.value() * x_axis.step() - 1.0);
    });
    return tg;
}

// Wigner samples on a rectangular (q, p) grid with the paper-plane measure
// mass = sum W dq dp / (2 pi).
struct PhaseSpaceGrid {
    GridAxis q_axis;
    GridAxis p_axis;
    std::vector<double> values;  // row-major, values[iq * p_axis.n + ip]
    double imag_residue = 0.0;   // only meaningful for reconstructed grids

    double& at(int iq, int ip) {
        return values[static_cast<std::size_t>(iq) * static_cast<std::size_t>(p_axis.n) +
                      static_cast<std::size_t>(ip)];
    }
    double at(int iq, int ip) const {
        return values[static_cast<std::size_t>(iq) * static_cast<std::size_t>(p_axis.n) +
                      static_cast<std::size_t>(ip)];
    }
    double mass() const {
        KahanSum acc;
        for (int iq = 0; iq < q_axis.n; ++iq)
            for (int ip = 0; ip < p_axis.n; ++ip) {
                double w = (iq == 0 || iq == q_axis.n - 1 ? 0.5 : 1.0) *
                           (ip == 0 || ip == p_axis.n - 1 ? 0.5 : 1.0);
                acc.add(w * at(iq, ip));
            }
        return acc.value() * q_axis.step() * p_axis.step() / (2.0 * pi);
    }
};

inline PhaseSpaceGrid wigner_grid(const StateSpec& state, const EpsilonTrajectory& traj, double t,
                                  const GridAxis& q_axis, const GridAxis& p_axis, int threads = 1) {
    q_axis.validate();
    p_axis.validate();
    PhaseSpaceGrid g;
    g.q_axis = q_axis;
    g.p_axis = p_axis;
    g.values.assign(static_cast<std::size_t>(q_axis.n) * static_cast<std::size_t>(p_axis.n), 0.0);
    parallel_for(static_cast<std::size_t>(q_axis.n), threads, [&](std::size_t iq) {
        for (int ip = 0; ip < p_axis.n; ++ip)
            g.at(static_cast<int>(iq), ip) =
                wigner(state, traj, t, q_axis.value(static_cast<int>(iq)), p_axis.value(ip));
    });
    return g;
}

}  // namespace iontomo
