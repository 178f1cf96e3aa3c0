#pragma once

// Motional states over the invariant number basis of the driven trap.
//
// A state is a finite Fock-coefficient vector c_0..c_N in the basis attached to
// the integral of motion A(t); the basis wavefunctions Psi_m(x,t) morph with
// eps(t) while the coefficients stay frozen.  Nonlinear (f-deformed) coherent
// states enter through a level-dependent factor f(n) multiplying the ladder
// operator: B = A f(A^dag A), B Psi_beta = beta Psi_beta.

#include <Eigen/Dense>

#include "dynamics.hpp"
#include "specfun.hpp"

namespace iontomo {

enum class DeformationVariant { identity, paper_lamb_dicke, vogel_lamb_dicke, custom_table };

struct DeformationSpec {
    DeformationVariant variant = DeformationVariant::identity;
    double eta = 0.0;          // Lamb-Dicke parameter
    std::vector<double> table; // custom_table values, table[0] must be 1

    void validate() const {
        if (!(eta >= 0.0) || !std::isfinite(eta))
            throw ValidationError("DeformationSpec: eta must be finite and >= 0");
        if (variant == DeformationVariant::custom_table) {
            if (table.empty()) throw ValidationError("DeformationSpec: custom table is empty");
            if (table[0] != 1.0)
                throw ValidationError("DeformationSpec: custom table must have table[0] = 1");
            for (double v : table)
                if (!std::isfinite(v)) throw ValidationError("DeformationSpec: non-finite table entry");
        }
    }
};

// f(n); f(0) = 1 by convention for every variant.
//
// paper_lamb_dicke keeps the index placement of the source model literally,
//   f(n) = L^1_{n+1}(eta^2) / (n L^0_{n+1}(eta^2)),  n >= 1,
// which does NOT reduce to 1 at eta = 0 (f(n) -> (n+2)/n).  vogel_lamb_dicke is
// the standard operator form, f(n) = L^1_n(eta^2) / ((n+1) L^0_n(eta^2)), which
// does.  Both are exposed; tests pin each against direct Laguerre evaluation.
inline double f_value(const DeformationSpec& spec, int n) {
    if (n < 0) throw ValidationError("f_value: level must be >= 0");
    if (n == 0) return 1.0;
    switch (spec.variant) {
        case DeformationVariant::identity:
            return 1.0;
        case DeformationVariant::paper_lamb_dicke: {
            double x = spec.eta * spec.eta;
            double den = n * laguerre(n + 1, 0, x);
            if (std::abs(den) < 1e-14)
                throw NumericalError("f_value: Laguerre denominator vanished");
            return laguerre(n + 1, 1, x) / den;
        }
        case DeformationVariant::vogel_lamb_dicke: {
            double x = spec.eta * spec.eta;
            double den = (n + 1.0) * laguerre(n, 0, x);
            if (std::abs(den) < 1e-14)
                throw NumericalError("f_value: Laguerre denominator vanished");
            return laguerre(n, 1, x) / den;
        }
        case DeformationVariant::custom_table:
            if (static_cast<std::size_t>(n) < spec.table.size())
                return spec.table[static_cast<std::size_t>(n)];
            return spec.table.back();  // continuation used only for tail estimates
    }
    throw ValidationError("f_value: unknown variant");
}

// [f(n)]! = f(0) f(1) ... f(n).
inline double f_factorial(const DeformationSpec& spec, int n) {
    double p = 1.0;
    for (int k = 1; k <= n; ++k) p *= f_value(spec, k);
    return p;
}

enum class StateKind { coherent, number, f_coherent };

struct StateSpec {
    StateKind kind = StateKind::coherent;
    cplx amplitude = {0.0, 0.0};  // alpha or beta
    int level = 0;                // number kind only
    DeformationSpec deformation;  // f_coherent kind only
    int truncation = 40;
    std::vector<cplx> coeffs;     // c_0..c_N in the invariant number basis
    double tail_bound = 0.0;      // estimated sum of |c_n|^2 beyond N
};

namespace detail {

constexpr double tail_tolerance = 1e-8;

}  // namespace detail

// Builds the coefficient vector and certifies the truncation: the estimated
// weight beyond N must stay under 1e-8 or construction fails.
inline StateSpec make_state(StateKind kind, cplx amplitude, int level,
                            const DeformationSpec& deformation, int truncation = 40) {
    if (truncation < 1 || truncation > 160)
        throw ValidationError("make_state: truncation outside [1,160]");
    deformation.validate();
    if (!std::isfinite(amplitude.real()) || !std::isfinite(amplitude.imag()))
        throw ValidationError("make_state: non-finite amplitude");

    StateSpec st;
    st.kind = kind;
    st.amplitude = amplitude;
    st.level = level;
    st.deformation = deformation;
    st.truncation = truncation;
    std::size_t n_coeff = static_cast<std::size_t>(truncation) + 1;
    st.coeffs.assign(n_coeff, cplx{0.0, 0.0});

    switch (kind) {
        case StateKind::number: {
            if (level < 0 || level > truncation)
                throw ValidationError("make_state: number level outside [0, truncation]");
            st.coeffs[static_cast<std::size_t>(level)] = 1.0;
            st.tail_bound = 0.0;
            return st;
        }
        case StateKind::coherent: {
            double a2 = std::norm(amplitude);
            double pref = std::exp(-0.5 * a2);
            cplx term = pref;  // alpha^n / sqrt(n!) accumulated
            double kept = 0.0;
            for (int n = 0; n <= truncation; ++n) {
                st.coeffs[static_cast<std::size_t>(n)] = term;
                kept += std::norm(term);
                term *= amplitude / std::sqrt(n + 1.0);
            }
            // Poisson tail beyond N
            double tail = 0.0;
            double p = std::norm(term);
            for (int n = truncation + 1; n < truncation + 600; ++n) {
                tail += p;
                p *= a2 / (n + 1.0);
                if (p < 1e-22 * (kept + tail)) break;
            }
            st.tail_bound = tail;
            break;
        }
        case StateKind::f_coherent: {
            // unnormalized c~_n = beta^n / (sqrt(n!) [f(n)]!), weights a_n = |c~_n|^2
            std::vector<cplx> raw(n_coeff);
            double s_kept = 0.0;
            cplx term = 1.0;
            double fprod = 1.0;
            for (int n = 0; n <= truncation; ++n) {
                if (n > 0) {
                    double fn = f_value(deformation, n);
                    if (std::abs(fn) < 1e-300)
                        throw NumericalError("make_state: deformation factor underflow");
                    fprod *= fn;
                    term *= amplitude / std::sqrt(static_cast<double>(n));
                }
                raw[static_cast<std::size_t>(n)] = term / fprod;
                s_kept += std::norm(raw[static_cast<std::size_t>(n)]);
            }
            double b2 = std::norm(amplitude);
            double tail = 0.0;
            double a = std::norm(raw.back());
            double fp = fprod;
            for (int n = truncation + 1; n < truncation + 600; ++n) {
                double fn = f_value(deformation, n);
                if (std::abs(fn) < 1e-300) break;  // series formally diverges; tail check fails below
                fp *= fn;
                a *= b2 / n;
                double an = a * (fprod / fp) * (fprod / fp);
                tail += an;
                if (an < 1e-22 * (s_kept + tail)) break;
            }
            double total = s_kept + tail;
            double norm = 1.0 / std::sqrt(total);
            for (std::size_t n = 0; n < n_coeff; ++n) st.coeffs[n] = raw[n] * norm;
            st.tail_bound = tail / total;
            break;
        }
    }
    if (!(st.tail_bound < detail::tail_tolerance))
        throw NumericalError("make_state: truncation tail exceeds 1e-8; raise truncation");
    return st;
}

namespace detail {

struct ModeFrame {
    cplx eps;
    cplx eps_dot;
    double abs_eps;
    cplx psi0;    // pi^{-1/4} eps^{-1/2} exp(i eps' x^2 / (2 eps)) without the x factor
    cplx ladder;  // eps^* / (sqrt(2) |eps|); Psi_m picks up ladder^m
};

inline ModeFrame mode_frame(const EpsilonTrajectory& traj, double t) {
    auto [e, v] = epsilon_at(traj, t);
    ModeFrame fr;
    fr.eps = e;
    fr.eps_dot = v;
    fr.abs_eps = std::abs(e);
    if (!(fr.abs_eps > 0.0)) throw NumericalError("mode_frame: |eps| vanished");
    fr.psi0 = std::pow(pi, -0.25) / std::sqrt(e);
    fr.ladder = std::conj(e) / (std::sqrt(2.0) * fr.abs_eps);
    return fr;
}

inline cplx gaussian_factor(const ModeFrame& fr, double x) {
    return std::exp(cplx{0.0, 0.5} * fr.eps_dot * (x * x) / fr.eps);
}

}  // namespace detail

// Psi_m(x,t): the m-th eigenfunction of A^dag(t) A(t).
// Psi_m = (eps^*/(2 eps))^{m/2} Psi_0 H_m(x/|eps|) / sqrt(m!), with the square
// root realized as the single-valued factor eps^*/(sqrt(2)|eps|) so the phase
// tracks the trajectory continuously.
inline cplx psi_number(int m, double x, const EpsilonTrajectory& traj, double t) {
    if (m < 0 || m > 160) throw ValidationError("psi_number: level outside [0,160]");
    auto fr = detail::mode_frame(traj, t);
    cplx base = fr.psi0 * detail::gaussian_factor(fr, x);
    cplx amp = std::pow(fr.ladder, m) / std::sqrt(detail::factorial(m));
    return base * amp * hermite(m, x / fr.abs_eps);
}

// Psi(x,t) for any state.  Coherent states use the closed form
//   Psi_alpha = Psi_0 exp(-|a|^2/2 - a^2 eps^*/(2 eps) + sqrt(2) a x / eps),
// everything else sums the number-basis series with one shared frame.
inline cplx psi_state(const StateSpec& state, double x, const EpsilonTrajectory& traj, double t) {
    auto fr = detail::mode_frame(traj, t);
    cplx base = fr.psi0 * detail::gaussian_factor(fr, x);
    if (state.kind == StateKind::coherent) {
        cplx a = state.amplitude;
        cplx expo = -0.5 * std::norm(a) - a * a * std::conj(fr.eps) / (2.0 * fr.eps) +
                    std::sqrt(2.0) * a * x / fr.eps;
        return base * std::exp(expo);
    }
    int N = static_cast<int>(state.coeffs.size()) - 1;
    std::vector<double> h;
    hermite_sequence(N, x / fr.abs_eps, h);
    KahanSumC acc;
    cplx lad = 1.0;
    double rf = 1.0;  // 1/sqrt(m!)
    for (int m = 0; m <= N; ++m) {
        if (m > 0) {
            lad *= fr.ladder;
            rf /= std::sqrt(static_cast<double>(m));
        }
        acc.add(state.coeffs[static_cast<std::size_t>(m)] * lad * rf * h[static_cast<std::size_t>(m)]);
    }
    return base * acc.value();
}

struct Moments {
    double mean_q = 0.0;
    double mean_p = 0.0;
    double sigma_qq = 0.0;
    double sigma_pp = 0.0;
    double sigma_pq = 0.0;
    double correlation_r = 0.0;
};

// First and second quadrature moments at time t.  Coherent states come from the
// closed forms (sigma_qq = |eps|^2/2, sigma_pp = |eps'|^2/2, sigma_pq =
// Re(eps' eps^*)/2); other kinds integrate the wavefunction, with d/dx taken by
// a 5-point stencil at step 1e-4.
inline Moments moments(const StateSpec& state, const EpsilonTrajectory& traj, double t) {
    Moments mo;
    auto [e, v] = epsilon_at(traj, t);
    if (state.kind == StateKind::coherent) {
        cplx a = state.amplitude;
        mo.mean_q = std::sqrt(2.0) * std::real(a * std::conj(e));
        mo.mean_p = std::sqrt(2.0) * std::real(a * std::conj(v));
        mo.sigma_qq = 0.5 * std::norm(e);
        mo.sigma_pp = 0.5 * std::norm(v);
        mo.sigma_pq = 0.5 * std::real(v * std::conj(e));
    } else {
        int N = static_cast<int>(state.coeffs.size()) - 1;
        double window = (std::sqrt(2.0 * N + 1.0) + 6.0) * std::max(1.0, std::abs(e));
        const int n_nodes = 3001;
        const double h = 2.0 * window / (n_nodes - 1);
        const double dstep = 1e-4;
        KahanSum s_norm, s_q, s_qq, s_p, s_pp, s_pq;
        for (int i = 0; i < n_nodes; ++i) {
            double x = -window + h * i;
            double wtrap = (i == 0 || i == n_nodes - 1) ? 0.5 : 1.0;
            cplx psi = psi_state(state, x, traj, t);
            cplx pm2 = psi_state(state, x - 2.0 * dstep, traj, t);
            cplx pm1 = psi_state(state, x - dstep, traj, t);
            cplx pp1 = psi_state(state, x + dstep, traj, t);
            cplx pp2 = psi_state(state, x + 2.0 * dstep, traj, t);
            cplx dpsi = (pm2 - 8.0 * pm1 + 8.0 * pp1 - pp2) / (12.0 * dstep);
            double rho = std::norm(psi);
            s_norm.add(wtrap * rho);
            s_q.add(wtrap * x * rho);
            s_qq.add(wtrap * x * x * rho);
            cplx cross = std::conj(psi) * dpsi;
            s_p.add(wtrap * std::imag(cross));              // <p> = Im int psi^* psi'
            s_pp.add(wtrap * std::norm(dpsi));              // <p^2> = int |psi'|^2
            s_pq.add(wtrap * x * std::imag(cross));         // sym <qp> - i/2 folded in by Im
        }
        double nrm = s_norm.value() * h;
        if (!(nrm > 0.5))
            throw NumericalError("moments: wavefunction norm lost on the quadrature window");
        mo.mean_q = s_q.value() * h / nrm;
        mo.mean_p = s_p.value() * h / nrm;
        mo.sigma_qq = s_qq.value() * h / nrm - mo.mean_q * mo.mean_q;
        mo.sigma_pp = s_pp.value() * h / nrm - mo.mean_p * mo.mean_p;
        mo.sigma_pq = s_pq.value() * h / nrm - mo.mean_q * mo.mean_p;
    }
    mo.correlation_r = mo.sigma_pq / std::sqrt(mo.sigma_qq * mo.sigma_pp);
    return mo;
}

struct LadderMatrices {
    Eigen::MatrixXcd a;  // bare ladder, a(m-1, m) = sqrt(m)
    Eigen::MatrixXcd b;  // deformed ladder, b = a f(n_hat)
    Eigen::MatrixXcd f;  // commutator target (n+1) f^2(n+1) - n f^2(n), diagonal
};

// (N+1)x(N+1) truncations.  [b, b^dag] matches f exactly on indices < N-1; the
// top corner is truncation-polluted by construction.
inline LadderMatrices ladder_matrices(const DeformationSpec& deformation, int N) {
    if (N < 2 || N > 160) throw ValidationError("ladder_matrices: N outside [2,160]");
    deformation.validate();
    LadderMatrices lm;
    int dim = N + 1;
    lm.a = Eigen::MatrixXcd::Zero(dim, dim);
    lm.b = Eigen::MatrixXcd::Zero(dim, dim);
    lm.f = Eigen::MatrixXcd::Zero(dim, dim);
    for (int m = 1; m <= N; ++m) {
        double sq = std::sqrt(static_cast<double>(m));
        lm.a(m - 1, m) = sq;
        lm.b(m - 1, m) = sq * f_value(deformation, m);
    }
    for (int n = 0; n <= N; ++n) {
        double f1 = f_value(deformation, n + 1);
        double f0 = n == 0 ? 1.0 : f_value(deformation, n);
        lm.f(n, n) = (n + 1.0) * f1 * f1 - n * f0 * f0;
    }
    return lm;
}

// || (B - beta) c || over rows 0..N-1; row N is excluded because B c there needs
// the truncated level N+1.  Exact eigenvectors give roundoff-sized residuals.
inline double verify_eigenstate(const StateSpec& state) {
    if (state.kind == StateKind::number)
        throw ValidationError("verify_eigenstate: number states are not ladder eigenstates");
    bool deformed = state.kind == StateKind::f_coherent;
    int N = static_cast<int>(state.coeffs.size()) - 1;
    double acc = 0.0;
    for (int m = 0; m < N; ++m) {
        double fm = deformed ? f_value(state.deformation, m + 1) : 1.0;
        cplx bc = std::sqrt(m + 1.0) * fm * state.coeffs[static_cast<std::size_t>(m) + 1];
        cplx r = bc - state.amplitude * state.coeffs[static_cast<std::size_t>(m)];
        acc += std::norm(r);
    }
    return std::sqrt(acc);
}

}  // namespace iontomo
