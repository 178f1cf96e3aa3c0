#pragma once

// State reconstruction from symplectic tomograms.
//
// Every inversion integral here factors through the characteristic function
//   chi(mu, nu) = int w(X, mu, nu) e^{iX} dX,
// evaluated per (mu, nu) node.  The X axis is rescaled by r = sqrt(mu^2 + nu^2)
// before sampling: the homogeneity w(X, mu, nu) = |l| w(lX, l mu, l nu) makes
// the rescaled envelope state-sized and node-independent, so one fixed window
// [-Y, Y] in y = X/r serves every node, with the sample step shrunk as r grows
// to keep the e^{i r y} oscillation resolved.  In these variables:
//   Wigner:        W(q, p) = (1/2pi) int chi e^{-i(mu q + nu p)} dmu dnu
//   density matrix <m|rho|n> = sqrt(n!/m!) 2^{(n-m)/2} / (2pi)
//                    int chi e^{-s/4} (nu - i mu)^{m-n} L_n^{m-n}(s/2) dmu dnu,  m >= n
//   photon counts  w(k) = (1/2pi) int chi e^{i sqrt(2)(mu Re a + nu Im a)}
//                    e^{-s/4} L_k(s/2) dmu dnu,              s = mu^2 + nu^2.

#include <atomic>
#include <map>
#include <memory>

#include "phase_space.hpp"

namespace iontomo {

using TomogramFn = std::function<double(double X, double mu, double nu)>;
using TimeTomogramFn = std::function<double(double X, double mu, double nu, double t)>;

inline QuadratureSpec inversion_defaults() {
    QuadratureSpec spec;
    spec.scheme = QuadScheme::trapezoid;
    spec.n_points = 161;
    spec.cutoff = {12.0, 10.0, 10.0};  // {y window, mu cutoff, nu cutoff}
    return spec;
}

struct CharacteristicGrid {
    std::vector<double> mu_nodes, nu_nodes;
    std::vector<double> mu_weights, nu_weights;  // trapezoid weight * step
    std::vector<cplx> chi;                       // [i_mu * n_nu + i_nu]

    cplx at(std::size_t i, std::size_t j) const { return chi[i * nu_nodes.size() + j]; }
};

namespace detail {

// Highest y-frequency the sampler must resolve beyond the e^{i r y} carrier;
// covers marginals of states up to ~150 levels.
constexpr double chi_frequency_margin = 40.0;

inline void uniform_axis(double cutoff, int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(static_cast<std::size_t>(n));
    weights.resize(static_cast<std::size_t>(n));
    double h = 2.0 * cutoff / (n - 1);
    for (int i = 0; i < n; ++i) {
        nodes[static_cast<std::size_t>(i)] = -cutoff + h * i;
        weights[static_cast<std::size_t>(i)] = (i == 0 || i == n - 1 ? 0.5 : 1.0) * h;
    }
}

inline cplx chi_node(const TomogramFn& w, double mu, double nu, double y_window) {
    double r = std::sqrt(mu * mu + nu * nu);
    if (r < 1e-12) return {1.0, 0.0};  // int w dX = 1
    double dy = 2.0 * pi / (r + chi_frequency_margin);
    int n = std::max(33, static_cast<int>(std::ceil(2.0 * y_window / dy)) + 1);
    double h = 2.0 * y_window / (n - 1);
    KahanSumC acc;
    for (int k = 0; k < n; ++k) {
        double y = -y_window + h * k;
        double v = w(r * y, mu, nu);
        if (!std::isfinite(v)) throw NumericalError("characteristic_grid: non-finite tomogram sample");
        double wt = (k == 0 || k == n - 1) ? 0.5 : 1.0;
        acc.add(wt * v * std::exp(cplx{0.0, r * y}));
    }
    return acc.value() * (r * h);
}

}  // namespace detail

// chi over the closed uniform (mu, nu) lattice given by the spec: cutoff[1] x
// cutoff[2], axis_points(1) x axis_points(2) nodes; cutoff[0] is the rescaled
// X window.
inline CharacteristicGrid characteristic_grid(const TomogramFn& w, const QuadratureSpec& spec,
                                              int threads = 1) {
    spec.validate();
    CharacteristicGrid g;
    detail::uniform_axis(spec.cutoff[1], spec.axis_points(1), g.mu_nodes, g.mu_weights);
    detail::uniform_axis(spec.cutoff[2], spec.axis_points(2), g.nu_nodes, g.nu_weights);
    std::size_t n_mu = g.mu_nodes.size();
    std::size_t n_nu = g.nu_nodes.size();
    g.chi.assign(n_mu * n_nu, cplx{0.0, 0.0});
    double y_window = spec.cutoff[0];
    parallel_for(n_mu, threads, [&](std::size_t i) {
        for (std::size_t j = 0; j < n_nu; ++j)
            g.chi[i * n_nu + j] = detail::chi_node(w, g.mu_nodes[i], g.nu_nodes[j], y_window);
    });
    return g;
}

// Wigner function from a tomogram.  Throws NumericalError if the imaginary
// residue of the double Fourier sum exceeds 1e-3; the residue actually seen is
// stored on the returned grid.
inline PhaseSpaceGrid invert_to_wigner(const TomogramFn& w, const GridAxis& q_axis,
                                       const GridAxis& p_axis, const QuadratureSpec& spec,
                                       int threads = 1) {
    q_axis.validate();
    p_axis.validate();
    CharacteristicGrid chi = characteristic_grid(w, spec, threads);
    std::size_t n_mu = chi.mu_nodes.size();
    std::size_t n_nu = chi.nu_nodes.size();

    PhaseSpaceGrid g;
    g.q_axis = q_axis;
    g.p_axis = p_axis;
    g.values.assign(static_cast<std::size_t>(q_axis.n) * static_cast<std::size_t>(p_axis.n), 0.0);
    std::vector<double> residue_by_p(static_cast<std::size_t>(p_axis.n), 0.0);

    parallel_for(static_cast<std::size_t>(p_axis.n), threads, [&](std::size_t ip) {
        double p = p_axis.value(static_cast<int>(ip));
        // column sums C_i = sum_j chi_ij w_j e^{-i nu_j p}
        std::vector<cplx> col(n_mu);
        for (std::size_t i = 0; i < n_mu; ++i) {
            KahanSumC acc;
            for (std::size_t j = 0; j < n_nu; ++j)
                acc.add(chi.at(i, j) * chi.nu_weights[j] *
                        std::exp(cplx{0.0, -chi.nu_nodes[j] * p}));
            col[i] = acc.value();
        }
        double worst_im = 0.0;
        for (int iq = 0; iq < q_axis.n; ++iq) {
            double q = q_axis.value(iq);
            KahanSumC acc;
            for (std::size_t i = 0; i < n_mu; ++i)
                acc.add(col[i] * chi.mu_weights[i] * std::exp(cplx{0.0, -chi.mu_nodes[i] * q}));
            cplx val = acc.value() / (2.0 * pi);
            g.at(iq, static_cast<int>(ip)) = val.real();
            worst_im = std::max(worst_im, std::abs(val.imag()));
        }
        residue_by_p[ip] = worst_im;
    });
    for (double r : residue_by_p) g.imag_residue = std::max(g.imag_residue, r);
    if (g.imag_residue > 1e-3)
        throw NumericalError("invert_to_wigner: imaginary residue exceeds 1e-3");
    return g;
}

struct DensityMatrix {
    int dim = 0;                // N + 1
    std::vector<cplx> entries;  // row-major

    cplx& at(int m, int n) {
        return entries[static_cast<std::size_t>(m) * static_cast<std::size_t>(dim) +
                       static_cast<std::size_t>(n)];
    }
    cplx at(int m, int n) const {
        return entries[static_cast<std::size_t>(m) * static_cast<std::size_t>(dim) +
                       static_cast<std::size_t>(n)];
    }
    cplx trace() const {
        KahanSumC acc;
        for (int i = 0; i < dim; ++i) acc.add(at(i, i));
        return acc.value();
    }
    double purity() const {
        KahanSum acc;
        for (int m = 0; m < dim; ++m)
            for (int n = 0; n < dim; ++n) acc.add(std::real(at(m, n) * at(n, m)));
        return acc.value();
    }
    double hermiticity_defect() const {
        double d = 0.0;
        for (int m = 0; m < dim; ++m)
            for (int n = 0; n < dim; ++n) d = std::max(d, std::abs(at(m, n) - std::conj(at(n, m))));
        return d;
    }
    double min_eigenvalue() const {
        Eigen::MatrixXcd rho(dim, dim);
        for (int m = 0; m < dim; ++m)
            for (int n = 0; n < dim; ++n) rho(m, n) = at(m, n);
        Eigen::MatrixXcd herm = 0.5 * (rho + rho.adjoint());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm);
        return solver.eigenvalues().minCoeff();
    }
};

// Fock density matrix up to level N from a tomogram.  Entries with m >= n come
// from the inversion integral; m < n is filled by Hermitian symmetry.
inline DensityMatrix reconstruct_density_matrix(const TomogramFn& w, int N,
                                                const QuadratureSpec& spec, int threads = 1) {
    if (N < 0 || N > 160) throw ValidationError("reconstruct_density_matrix: N outside [0,160]");
    CharacteristicGrid chi = characteristic_grid(w, spec, threads);
    std::size_t n_mu = chi.mu_nodes.size();
    std::size_t n_nu = chi.nu_nodes.size();

    DensityMatrix rho;
    rho.dim = N + 1;
    rho.entries.assign(static_cast<std::size_t>(rho.dim) * static_cast<std::size_t>(rho.dim),
                       cplx{0.0, 0.0});

    // enumerate upper-triangle entries (m >= n)
    std::vector<std::pair<int, int>> todo;
    for (int m = 0; m <= N; ++m)
        for (int n = 0; n <= m; ++n) todo.emplace_back(m, n);

    parallel_for(todo.size(), threads, [&](std::size_t idx) {
        auto [m, n] = todo[idx];
        int d = m - n;
        double scale = detail::sqrt_factorial_ratio(n, m) * std::pow(2.0, -0.5 * d) / (2.0 * pi);
        KahanSumC acc;
        for (std::size_t i = 0; i < n_mu; ++i) {
            double mu = chi.mu_nodes[i];
            for (std::size_t j = 0; j < n_nu; ++j) {
                double nu = chi.nu_nodes[j];
                double s = mu * mu + nu * nu;
                cplx zc{nu, -mu};
                cplx zd = 1.0;
                for (int k = 0; k < d; ++k) zd *= zc;
                double kern = std::exp(-0.25 * s) * laguerre(n, d, 0.5 * s);
                acc.add(chi.at(i, j) * (chi.mu_weights[i] * chi.nu_weights[j] * kern) * zd);
            }
        }
        rho.at(m, n) = scale * acc.value();
    });
    for (int m = 0; m <= N; ++m)
        for (int n = m + 1; n <= N; ++n) rho.at(m, n) = std::conj(rho.at(n, m));
    return rho;
}

struct PhotonDistribution {
    cplx scan_amplitude{0.0, 0.0};
    std::vector<double> probs;
    double imag_residue = 0.0;

    double total() const {
        KahanSum acc;
        for (double p : probs) acc.add(p);
        return acc.value();
    }
};

// Level populations of the state displaced by scan_amplitude.  scan 0 gives the
// photon-number distribution itself.
inline PhotonDistribution photon_number_distribution(const TomogramFn& w, int n_max,
                                                     cplx scan_amplitude, const QuadratureSpec& spec,
                                                     int threads = 1) {
    if (n_max < 0 || n_max > 160)
        throw ValidationError("photon_number_distribution: n_max outside [0,160]");
    CharacteristicGrid chi = characteristic_grid(w, spec, threads);
    std::size_t n_mu = chi.mu_nodes.size();
    std::size_t n_nu = chi.nu_nodes.size();

    PhotonDistribution dist;
    dist.scan_amplitude = scan_amplitude;
    dist.probs.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
    std::vector<KahanSumC> acc(static_cast<std::size_t>(n_max) + 1);
    double ar = scan_amplitude.real();
    double ai = scan_amplitude.imag();
    std::vector<double> lag;
    for (std::size_t i = 0; i < n_mu; ++i) {
        double mu = chi.mu_nodes[i];
        for (std::size_t j = 0; j < n_nu; ++j) {
            double nu = chi.nu_nodes[j];
            double s = mu * mu + nu * nu;
            cplx common = chi.at(i, j) * (chi.mu_weights[i] * chi.nu_weights[j] *
                                          std::exp(-0.25 * s) / (2.0 * pi)) *
                          std::exp(cplx{0.0, std::sqrt(2.0) * (mu * ar + nu * ai)});
            // L_k(s/2) swept by recurrence
            double x = 0.5 * s;
            double lm1 = 1.0;
            double l = 1.0 - x;
            for (int k = 0; k <= n_max; ++k) {
                double lk = k == 0 ? lm1 : (k == 1 ? l : 0.0);
                if (k >= 2) {
                    lk = ((2.0 * (k - 1) + 1.0 - x) * l - (k - 1) * lm1) / k;
                    lm1 = l;
                    l = lk;
                }
                acc[static_cast<std::size_t>(k)].add(common * lk);
            }
        }
    }
    for (int k = 0; k <= n_max; ++k) {
        cplx v = acc[static_cast<std::size_t>(k)].value();
        dist.probs[static_cast<std::size_t>(k)] = v.real();
        dist.imag_residue = std::max(dist.imag_residue, std::abs(v.imag()));
    }
    if (dist.imag_residue > 1e-3)
        throw NumericalError("photon_number_distribution: imaginary residue exceeds 1e-3");
    return dist;
}

// Residual of the tomogram evolution equation
//   dw/dt - mu dw/dnu + omega^2(t) nu dw/dmu = 0
// by central differences; an exact tomogram stream gives O(h^2).
inline double evolution_residual(const TimeTomogramFn& w, const TrapConfig& trap, double X,
                                 double mu, double nu, double t, double h_t, double h_mu,
                                 double h_nu) {
    if (!(h_t > 0.0) || !(h_mu > 0.0) || !(h_nu > 0.0))
        throw ValidationError("evolution_residual: steps must be > 0");
    if (t - h_t < 0.0) throw ValidationError("evolution_residual: t - h_t below the solved range");
    double dt = (w(X, mu, nu, t + h_t) - w(X, mu, nu, t - h_t)) / (2.0 * h_t);
    double dnu = (w(X, mu, nu + h_nu, t) - w(X, mu, nu - h_nu, t)) / (2.0 * h_nu);
    double dmu = (w(X, mu + h_mu, nu, t) - w(X, mu - h_mu, nu, t)) / (2.0 * h_mu);
    return dt - mu * dnu + trap.omega_sq(t) * nu * dmu;
}

// Closure over a state and trajectory exposing w(X, mu, nu, t).
inline TimeTomogramFn make_time_tomogram(StateSpec state, EpsilonTrajectory traj) {
    auto st = std::make_shared<StateSpec>(std::move(state));
    auto tr = std::make_shared<EpsilonTrajectory>(std::move(traj));
    return [st, tr](double X, double mu, double nu, double t) {
        return state_tomogram(*st, *tr, t, X, mu, nu);
    };
}

inline TomogramFn bind_time(TimeTomogramFn w, double t) {
    return [w = std::move(w), t](double X, double mu, double nu) { return w(X, mu, nu, t); };
}

// ---- externally supplied (gridded) tomograms --------------------------------

struct TomogramSample {
    double X, mu, nu, w;
};

// Interpolating view over measured samples.  Rows are grouped into rays of
// constant (mu, nu); each ray is rescaled onto the unit circle through the
// homogeneity w(X, mu, nu) = |l| w(l X, l mu, l nu), and the mirror ray
// (mu, nu) -> (-mu, -nu), X -> -X closes the circle.  Queries interpolate
// bilinearly in (angle, X/r); y outside a ray's window reads as 0 and bumps
// out_of_range_count.
class GriddedTomogram {
  public:
    explicit GriddedTomogram(const std::vector<TomogramSample>& samples) {
        if (samples.empty()) throw ValidationError("GriddedTomogram: no samples");
        std::map<std::pair<double, double>, std::vector<std::pair<double, double>>> groups;
        for (const auto& s : samples) {
            if (!std::isfinite(s.X) || !std::isfinite(s.w))
                throw ValidationError("GriddedTomogram: non-finite sample");
            groups[{s.mu, s.nu}].emplace_back(s.X, s.w);
        }
        for (auto& [line, pts] : groups) {
            auto [mu, nu] = line;
            double r = std::sqrt(mu * mu + nu * nu);
            if (r < 1e-12) throw ValidationError("GriddedTomogram: ray through (mu, nu) = (0, 0)");
            if (pts.size() < 4) throw ValidationError("GriddedTomogram: ray with fewer than 4 samples");
            std::sort(pts.begin(), pts.end());
            Ray ray;
            ray.phi = std::atan2(nu, mu);
            ray.y.reserve(pts.size());
            ray.w.reserve(pts.size());
            for (auto& [X, wv] : pts) {
                ray.y.push_back(X / r);
                ray.w.push_back(r * wv);  // unit-circle profile
            }
            add_ray(std::move(ray));
        }
        // parity mirrors
        std::vector<Ray> mirrors;
        for (const auto& ray : rays_) {
            Ray m;
            m.phi = ray.phi > 0.0 ? ray.phi - pi : ray.phi + pi;
            m.y.assign(ray.y.rbegin(), ray.y.rend());
            for (double& v : m.y) v = -v;
            m.w.assign(ray.w.rbegin(), ray.w.rend());
            mirrors.push_back(std::move(m));
        }
        for (auto& m : mirrors) add_ray(std::move(m));
        if (rays_.size() < 3)
            throw ValidationError(
                "GriddedTomogram: need >= 3 distinct ray angles to cover the (mu, nu) plane");
        std::sort(rays_.begin(), rays_.end(), [](const Ray& a, const Ray& b) { return a.phi < b.phi; });
    }

    double operator()(double X, double mu, double nu) const {
        double r = std::sqrt(mu * mu + nu * nu);
        if (r < 1e-12) throw ValidationError("GriddedTomogram: query at (mu, nu) = (0, 0)");
        double phi = std::atan2(nu, mu);
        double y = X / r;
        // shift into [phi_first, phi_first + 2pi), then bracket
        if (phi < rays_[0].phi) phi += 2.0 * pi;
        std::size_t hi = 1;
        while (hi < rays_.size() && rays_[hi].phi < phi) ++hi;
        std::size_t lo = hi - 1;
        double phi_lo = rays_[lo].phi;
        double phi_hi = hi == rays_.size() ? rays_[0].phi + 2.0 * pi : rays_[hi].phi;
        if (hi == rays_.size()) hi = 0;
        double span = phi_hi - phi_lo;
        double u = span > 1e-15 ? (phi - phi_lo) / span : 0.0;
        double w_lo = sample_ray(rays_[lo], y);
        double w_hi = sample_ray(rays_[hi], y);
        return ((1.0 - u) * w_lo + u * w_hi) / r;
    }

    long out_of_range_count() const { return oob_.load(); }
    std::size_t ray_count() const { return rays_.size(); }

  private:
    struct Ray {
        double phi = 0.0;
        std::vector<double> y;
        std::vector<double> w;
    };

    void add_ray(Ray&& ray) {
        for (const auto& r : rays_)
            if (std::abs(r.phi - ray.phi) < 1e-12) return;  // duplicate angle: first wins
        rays_.push_back(std::move(ray));
    }

    double sample_ray(const Ray& ray, double y) const {
        if (y < ray.y.front() || y > ray.y.back()) {
            oob_.fetch_add(1, std::memory_order_relaxed);
            return 0.0;
        }
        auto it = std::lower_bound(ray.y.begin(), ray.y.end(), y);
        std::size_t k = static_cast<std::size_t>(it - ray.y.begin());
        if (k == 0) return ray.w.front();
        double y0 = ray.y[k - 1];
        double y1 = ray.y[k];
        double u = y1 > y0 ? (y - y0) / (y1 - y0) : 0.0;
        return (1.0 - u) * ray.w[k - 1] + u * ray.w[k];
    }

    std::vector<Ray> rays_;
    mutable std::atomic<long> oob_{0};
};

}  // namespace iontomo
