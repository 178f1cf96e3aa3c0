#pragma once

// Self-contained invariant battery.  Every check is a fixed, seeded scenario
// with an explicit tolerance and a runtime cap; the CLI `check` subcommand and
// the standalone acceptance runner both print from this table.

#include <chrono>
#include <random>
#include <sstream>

#include <iontomo/io.hpp>
#include <iontomo/tomography.hpp>

namespace iontomo {

struct CheckResult {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double threshold = 0.0;
    double seconds = 0.0;
    double time_cap = 0.0;
    std::string detail;
};

namespace detail {

inline TrapConfig battery_trap(double kappa = 0.5, double omega = 2.0) {
    TrapConfig cfg;
    cfg.kappa = kappa;
    cfg.omega_drive = omega;
    return cfg;
}

inline DeformationSpec battery_deformation(DeformationVariant v, double eta = 0.0) {
    DeformationSpec d;
    d.variant = v;
    d.eta = eta;
    return d;
}

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// trapezoid over a window wide enough for every battery state
inline double x_norm(const std::function<double(double)>& f, double L, int n) {
    double h = 2.0 * L / (n - 1);
    KahanSum acc;
    for (int i = 0; i < n; ++i)
        acc.add(((i == 0 || i == n - 1) ? 0.5 : 1.0) * f(-L + h * i));
    return acc.value() * h;
}

template <typename Fn>
CheckResult timed_check(const std::string& name, double threshold, double time_cap, Fn body) {
    CheckResult r;
    r.name = name;
    r.threshold = threshold;
    r.time_cap = time_cap;
    auto t0 = std::chrono::steady_clock::now();
    r.measured = body(r);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.pass = r.measured <= threshold && r.seconds < time_cap;
    return r;
}

}  // namespace detail

inline std::vector<CheckResult> run_battery(int threads = 1) {
    using detail::battery_deformation;
    using detail::battery_trap;
    using detail::fmt;
    using detail::timed_check;

    std::vector<CheckResult> out;

    // shared driven-trap trajectory for everything below the first check
    auto traj = solve_epsilon(battery_trap(), 10.0, 20000);
    auto identity = battery_deformation(DeformationVariant::identity);
    auto vogel = battery_deformation(DeformationVariant::vogel_lamb_dicke, 0.3);

    out.push_back(timed_check("wronskian-conservation", 1e-8, 1.0, [&](CheckResult&) {
        auto cfg = battery_trap(0.9, 2.0);
        auto tr = solve_epsilon(cfg, 20.0, default_n_steps(cfg, 20.0));
        return tr.max_wronskian_error;
    }));

    out.push_back(timed_check("uncertainty-minimization", 1e-9, 1.0, [&](CheckResult&) {
        auto st = make_state(StateKind::coherent, {0.7, 0.3}, 0, identity);
        double worst = 0.0;
        for (int i = 0; i < 200; ++i) {
            double t = 10.0 * i / 199.0;
            auto mo = moments(st, traj, t);
            worst = std::max(worst,
                             std::abs(mo.sigma_qq * mo.sigma_pp - mo.sigma_pq * mo.sigma_pq - 0.25));
        }
        return worst;
    }));

    out.push_back(timed_check("identity-deformation-limit", 1e-8, 5.0, [&](CheckResult&) {
        cplx alpha{0.8, 0.2};
        auto fc = make_state(StateKind::f_coherent, alpha, 0, identity);
        auto co = make_state(StateKind::coherent, alpha, 0, identity);
        std::mt19937 rng(12345);
        std::uniform_real_distribution<double> ux(-5.0, 5.0), uv(-2.0, 2.0), ut(0.0, 10.0);
        double worst = 0.0;
        int done = 0;
        while (done < 30) {
            double X = ux(rng), mu = uv(rng), nu = uv(rng), t = ut(rng);
            if (mu * mu + nu * nu < 0.1) continue;
            worst = std::max(worst, std::abs(f_tomogram(fc, traj, t, X, mu, nu) -
                                             gaussian_tomogram(co, traj, t, X, mu, nu)));
            ++done;
        }
        return worst;
    }));

    out.push_back(timed_check("tomogram-normalization", 1e-6, 10.0, [&](CheckResult&) {
        auto co = make_state(StateKind::coherent, {0.7, 0.4}, 0, identity);
        auto num = make_state(StateKind::number, {0.0, 0.0}, 3, identity, 8);
        auto fc = make_state(StateKind::f_coherent, {0.6, 0.0}, 0, vogel, 25);
        std::mt19937 rng(12345);
        std::uniform_real_distribution<double> uv(-2.0, 2.0), ut(0.0, 10.0);
        double worst = 0.0;
        int done = 0;
        while (done < 10) {
            double mu = uv(rng), nu = uv(rng), t = ut(rng);
            if (mu * mu + nu * nu < 0.05) continue;
            auto rp = rotated_params(traj, t, mu, nu);
            double L = std::sqrt(rp.mu_t * rp.mu_t + rp.nu_t * rp.nu_t) * 12.1 + 8.0;
            for (const auto* st : {&co, &num, &fc}) {
                double norm = detail::x_norm(
                    [&](double X) { return state_tomogram(*st, traj, t, X, mu, nu); }, L, 32001);
                worst = std::max(worst, std::abs(norm - 1.0));
            }
            ++done;
        }
        return worst;
    }));

    out.push_back(timed_check("evolution-equation-order", 0.2, 30.0, [&](CheckResult& r) {
        auto co = make_state(StateKind::coherent, {0.7, 0.3}, 0, identity);
        auto fc = make_state(StateKind::f_coherent, {0.6, 0.0}, 0, vogel, 25);
        const double pts[5][4] = {{0.7, 0.9, -0.6, 1.3},
                                  {-0.4, 0.5, 1.1, 0.9},
                                  {1.2, -0.8, 0.4, 1.1},
                                  {0.1, 1.3, 0.2, 0.7},
                                  {-0.9, -0.5, -1.0, 1.2}};
        double worst = 0.0;
        std::ostringstream note;
        for (const auto* st : {&co, &fc}) {
            auto stream = make_time_tomogram(*st, traj);
            double rms[2];
            double hs[2] = {4e-3, 1e-3};
            for (int k = 0; k < 2; ++k) {
                KahanSum acc;
                for (const auto& p : pts) {
                    double res = evolution_residual(stream, battery_trap(), p[0], p[1], p[2], p[3],
                                                    hs[k], hs[k], hs[k]);
                    acc.add(res * res);
                }
                rms[k] = std::sqrt(acc.value() / 5.0);
            }
            double slope = std::log(rms[0] / rms[1]) / std::log(hs[0] / hs[1]);
            worst = std::max(worst, std::abs(slope - 2.0));
            note << (st == &co ? "coherent " : "; f-coherent ") << "slope " << fmt(slope);
        }
        r.detail = note.str();
        return worst;
    }));

    out.push_back(timed_check("deformed-ladder-algebra", 1.0, 1.0, [&](CheckResult& r) {
        const int N = 40;
        auto lm = ladder_matrices(vogel, N);
        Eigen::MatrixXcd comm = lm.b * lm.b.adjoint() - lm.b.adjoint() * lm.b;
        double comm_defect = 0.0;
        for (int m = 0; m <= N - 2; ++m)
            for (int n = 0; n <= N - 2; ++n)
                comm_defect = std::max(comm_defect, std::abs(comm(m, n) - lm.f(m, n)));
        auto st = make_state(StateKind::f_coherent, {0.6, 0.0}, 0, vogel, N);
        double eig_defect = verify_eigenstate(st);
        r.detail = "commutator " + fmt(comm_defect) + " (limit 1e-10); eigenvector " +
                   fmt(eig_defect) + " (limit 1e-8)";
        // normalized so both parts share one pass line
        return std::max(comm_defect / 1e-10, eig_defect / 1e-8);
    }));

    out.push_back(timed_check("density-matrix-round-trip", 1e-3, 60.0, [&](CheckResult& r) {
        auto st = make_state(StateKind::f_coherent, {0.6, 0.0}, 0, vogel, 25);
        auto spec = inversion_defaults();

        TomogramFn w0 = [&](double X, double mu, double nu) {
            return state_tomogram(st, traj, 0.0, X, mu, nu);
        };
        auto rho0 = reconstruct_density_matrix(w0, 8, spec, threads);
        double outer_defect = 0.0;
        for (int m = 0; m <= 8; ++m)
            for (int n = 0; n <= 8; ++n)
                outer_defect = std::max(
                    outer_defect,
                    std::abs(rho0.at(m, n) - st.coeffs[static_cast<std::size_t>(m)] *
                                                 std::conj(st.coeffs[static_cast<std::size_t>(n)])));

        TomogramFn w1 = [&](double X, double mu, double nu) {
            return state_tomogram(st, traj, 1.2, X, mu, nu);
        };
        auto rho1 = reconstruct_density_matrix(w1, 8, spec, threads);
        double trace_defect = std::abs(rho1.trace() - cplx{1.0, 0.0});
        double herm = rho1.hermiticity_defect();
        double neg = std::max(0.0, -rho1.min_eigenvalue());
        double purity = rho1.purity();
        r.detail = "t=0 outer product " + fmt(outer_defect) + "; t=1.2 trace defect " +
                   fmt(trace_defect) + ", negativity " + fmt(neg) + ", purity " + fmt(purity);
        double worst = std::max({outer_defect, trace_defect, herm, neg});
        if (purity < 0.995) worst = std::max(worst, 1.0);  // force the fail visibly
        return worst;
    }));

    out.push_back(timed_check("wigner-round-trip", 5e-3, 120.0, [&](CheckResult& r) {
        auto st = make_state(StateKind::coherent, {0.7, 0.3}, 0, identity);
        auto spec = inversion_defaults();
        GridAxis q{-4.0, 4.0, 41}, p{-4.0, 4.0, 41};
        TomogramFn w = [&](double X, double mu, double nu) {
            return gaussian_tomogram(st, traj, 1.2, X, mu, nu);
        };
        auto grid = invert_to_wigner(w, q, p, spec, threads);
        double peak = 0.0, diff = 0.0;
        std::vector<double> direct(static_cast<std::size_t>(41) * 41, 0.0);
        parallel_for(static_cast<std::size_t>(41) * 41, threads, [&](std::size_t k) {
            int iq = static_cast<int>(k) / 41, ip = static_cast<int>(k) % 41;
            direct[k] = wigner(st, traj, 1.2, q.value(iq), p.value(ip));
        });
        for (int iq = 0; iq < 41; ++iq)
            for (int ip = 0; ip < 41; ++ip) {
                double d = direct[static_cast<std::size_t>(iq) * 41 + static_cast<std::size_t>(ip)];
                peak = std::max(peak, std::abs(d));
                diff = std::max(diff, std::abs(grid.at(iq, ip) - d));
            }
        double rel = diff / peak;

        auto vac = make_state(StateKind::coherent, {0.0, 0.0}, 0, identity);
        TomogramFn wv = [&](double X, double mu, double nu) {
            return gaussian_tomogram(vac, traj, 1.2, X, mu, nu);
        };
        GridAxis origin{-0.5, 0.5, 3};  // middle node sits on (0, 0)
        auto vg = invert_to_wigner(wv, origin, origin, spec, threads);
        double peak_defect = std::abs(vg.at(1, 1) - 2.0);
        r.detail = "relative error " + fmt(rel) + " (limit 5e-3); vacuum peak defect " +
                   fmt(peak_defect) + " (limit 2e-2)";
        return std::max(rel / 5e-3, peak_defect / 2e-2) * 5e-3;
    }));

    out.push_back(timed_check("photon-statistics", 1e-3, 60.0, [&](CheckResult&) {
        auto st = make_state(StateKind::coherent, {0.8, 0.0}, 0, identity);
        TomogramFn w = [&](double X, double mu, double nu) {
            return gaussian_tomogram(st, traj, 0.0, X, mu, nu);
        };
        auto dist = photon_number_distribution(w, 25, {0.0, 0.0}, inversion_defaults(), threads);
        double worst = std::abs(dist.total() - 1.0);
        double pk = std::exp(-0.64);
        for (int k = 0; k <= 10; ++k) {
            worst = std::max(worst, std::abs(dist.probs[static_cast<std::size_t>(k)] - pk));
            pk *= 0.64 / (k + 1);
        }
        return worst;
    }));

    out.push_back(timed_check("position-density-slice", 1e-6, 10.0, [&](CheckResult&) {
        auto st = make_state(StateKind::f_coherent, {0.6, 0.0}, 0, vogel, 25);
        double worst = 0.0;
        for (int i = 0; i < 20; ++i) {
            double X = -4.0 + 8.0 * i / 19.0;
            double w = f_tomogram(st, traj, 1.0, X, 1.0, 0.0);
            double density = std::norm(psi_state(st, X, traj, 1.0));
            worst = std::max(worst, std::abs(w - density));
        }
        return worst;
    }));

    return out;
}

inline void print_battery(std::ostream& out, const std::vector<CheckResult>& results) {
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        char line[256];
        std::snprintf(line, sizeof line, "%-4s %2zu  %-28s measured %-10.3g limit %-8.3g %6.2fs (cap %gs)",
                      r.pass ? "PASS" : "FAIL", i + 1, r.name.c_str(), r.measured, r.threshold,
                      r.seconds, r.time_cap);
        out << line;
        if (!r.detail.empty()) out << "  [" << r.detail << ']';
        out << '\n';
    }
}

inline void write_battery_json(std::ostream& out, const std::vector<CheckResult>& results) {
    bool all = true;
    for (const auto& r : results) all = all && r.pass;
    out << "{\n  \"all_pass\": " << (all ? "true" : "false") << ",\n  \"results\": [\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        out << "    {\"name\": " << json_string(r.name) << ", \"pass\": "
            << (r.pass ? "true" : "false") << ", \"measured\": " << g17(r.measured)
            << ", \"threshold\": " << g17(r.threshold) << ", \"seconds\": " << g17(r.seconds)
            << ", \"time_cap\": " << g17(r.time_cap) << ", \"detail\": " << json_string(r.detail)
            << '}' << (i + 1 < results.size() ? ",\n" : "\n");
    }
    out << "  ]\n}\n";
}

}  // namespace iontomo
