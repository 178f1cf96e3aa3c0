#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <iontomo/tomography.hpp>

using namespace iontomo;

namespace {

TrapConfig trap(double kappa = 0.5, double omega = 2.0) {
    TrapConfig cfg;
    cfg.kappa = kappa;
    cfg.omega_drive = omega;
    return cfg;
}

DeformationSpec deformation(DeformationVariant v, double eta = 0.0) {
    DeformationSpec d;
    d.variant = v;
    d.eta = eta;
    return d;
}

StateSpec coherent(cplx alpha, int truncation = 40) {
    return make_state(StateKind::coherent, alpha, 0, deformation(DeformationVariant::identity),
                      truncation);
}

QuadratureSpec reduced_spec(int n_points = 121) {
    QuadratureSpec spec = inversion_defaults();
    spec.n_points = n_points;
    return spec;
}

// overlap of the evolved state with the static oscillator level m;
// psi_number at t = 0 is exactly that eigenfunction
cplx static_overlap(const StateSpec& state, const EpsilonTrajectory& traj, double t, int m) {
    const double L = 12.0;
    const int n = 4001;
    double h = 2.0 * L / (n - 1);
    KahanSumC acc;
    for (int i = 0; i < n; ++i) {
        double x = -L + h * i;
        double wt = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        acc.add(wt * std::conj(psi_number(m, x, traj, 0.0)) * psi_state(state, x, traj, t));
    }
    return acc.value() * h;
}

std::vector<TomogramSample> ray_samples(const TomogramFn& w, double r, double phi, double y_max,
                                        int n) {
    std::vector<TomogramSample> out;
    double mu = r * std::cos(phi), nu = r * std::sin(phi);
    double h = 2.0 * y_max / (n - 1);
    for (int i = 0; i < n; ++i) {
        double X = r * (-y_max + h * i);
        out.push_back({X, mu, nu, w(X, mu, nu)});
    }
    return out;
}

}  // namespace

TEST_CASE("characteristic grid of the vacuum is gaussian") {
    auto traj = solve_epsilon(trap(), 1.0, 2000);
    auto vac = coherent({0.0, 0.0});
    TomogramFn w = [&](double X, double mu, double nu) {
        return gaussian_tomogram(vac, traj, 0.0, X, mu, nu);
    };
    QuadratureSpec spec = reduced_spec(33);
    spec.cutoff = {12.0, 5.0, 5.0};
    auto grid = characteristic_grid(w, spec);
    REQUIRE(grid.mu_nodes.size() == 33);
    REQUIRE(grid.nu_nodes.size() == 33);

    KahanSum wsum;
    for (double v : grid.mu_weights) wsum.add(v);
    REQUIRE(wsum.value() == Catch::Approx(10.0).epsilon(1e-14));
    REQUIRE(grid.mu_nodes[16] == 0.0);
    REQUIRE(grid.at(16, 16) == cplx{1.0, 0.0});  // int w dX = 1 exactly at the origin

    for (std::size_t i = 0; i < 33; i += 4) {
        for (std::size_t j = 0; j < 33; j += 4) {
            double s = grid.mu_nodes[i] * grid.mu_nodes[i] + grid.nu_nodes[j] * grid.nu_nodes[j];
            REQUIRE(std::abs(grid.at(i, j) - cplx{std::exp(-0.25 * s), 0.0}) < 1e-12);
        }
    }
}

TEST_CASE("characteristic grid rejects non-finite tomogram samples") {
    TomogramFn bad = [](double X, double, double) {
        return X > 2.0 ? std::numeric_limits<double>::quiet_NaN() : 0.1;
    };
    REQUIRE_THROWS_AS(characteristic_grid(bad, reduced_spec(33)), NumericalError);
}

TEST_CASE("wigner inversion recovers the vacuum") {
    auto traj = solve_epsilon(trap(), 1.0, 2000);
    auto vac = coherent({0.0, 0.0});
    TomogramFn w = [&](double X, double mu, double nu) {
        return gaussian_tomogram(vac, traj, 0.0, X, mu, nu);
    };
    GridAxis q{-2.0, 2.0, 9}, p{-2.0, 2.0, 9};
    auto grid = invert_to_wigner(w, q, p, reduced_spec());
    REQUIRE(grid.imag_residue < 1e-9);
    for (int iq = 0; iq < 9; ++iq) {
        for (int ip = 0; ip < 9; ++ip) {
            double qv = q.value(iq), pv = p.value(ip);
            double exact = 2.0 * std::exp(-qv * qv - pv * pv);
            REQUIRE(grid.at(iq, ip) == Catch::Approx(exact).margin(1e-8));
        }
    }
}

TEST_CASE("wigner inversion matches the direct series at t > 0") {
    auto traj = solve_epsilon(trap(), 2.0, 4000);
    auto st = coherent({0.7, 0.3});
    TomogramFn w = [&](double X, double mu, double nu) {
        return gaussian_tomogram(st, traj, 1.2, X, mu, nu);
    };
    GridAxis q{-2.5, 2.5, 6}, p{-2.5, 2.5, 6};
    auto grid = invert_to_wigner(w, q, p, reduced_spec(), 2);
    for (int iq = 0; iq < 6; ++iq)
        for (int ip = 0; ip < 6; ++ip)
            REQUIRE(grid.at(iq, ip) ==
                    Catch::Approx(wigner(st, traj, 1.2, q.value(iq), p.value(ip))).margin(1e-6));
}

TEST_CASE("density matrix of the vacuum") {
    auto traj = solve_epsilon(trap(), 1.0, 2000);
    auto vac = coherent({0.0, 0.0});
    TomogramFn w = [&](double X, double mu, double nu) {
        return gaussian_tomogram(vac, traj, 0.0, X, mu, nu);
    };
    auto rho = reconstruct_density_matrix(w, 6, reduced_spec(), 2);
    REQUIRE(rho.dim == 7);
    REQUIRE(std::abs(rho.at(0, 0) - cplx{1.0, 0.0}) < 1e-8);
    REQUIRE(std::abs(rho.trace() - cplx{1.0, 0.0}) < 1e-8);
    REQUIRE(rho.hermiticity_defect() < 1e-12);
    REQUIRE(rho.purity() == Catch::Approx(1.0).margin(1e-7));
    REQUIRE(rho.min_eigenvalue() > -1e-8);
    for (int m = 0; m <= 6; ++m)
        for (int n = 0; n <= 6; ++n)
            if (m != 0 || n != 0) REQUIRE(std::abs(rho.at(m, n)) < 1e-8);
}

TEST_CASE("density matrix matches the coefficient outer product at t = 0") {
    auto traj = solve_epsilon(trap(), 1.0, 2000);
    auto st = make_state(StateKind::f_coherent, {0.6, 0.0}, 0,
                         deformation(DeformationVariant::vogel_lamb_dicke, 0.3), 25);
    TomogramFn w = [&](double X, double mu, double nu) {
        return state_tomogram(st, traj, 0.0, X, mu, nu);
    };
    auto rho = reconstruct_density_matrix(w, 8, reduced_spec(), 2);
    for (int m = 0; m <= 8; ++m) {
        for (int n = 0; n <= 8; ++n) {
            cplx expect = st.coeffs[static_cast<std::size_t>(m)] *
                          std::conj(st.coeffs[static_cast<std::size_t>(n)]);
            INFO("m=" << m << " n=" << n);
            REQUIRE(std::abs(rho.at(m, n) - expect) < 1e-6);
        }
    }
    REQUIRE(std::abs(rho.trace() - cplx{1.0, 0.0}) < 1e-6);
}

TEST_CASE("evolved state reconstructs as overlaps with the static basis") {
    auto traj = solve_epsilon(trap(), 2.0, 4000);
    auto st = coherent({0.6, -0.2});
    double t = 1.2;
    TomogramFn w = [&](double X, double mu, double nu) {
        return gaussian_tomogram(st, traj, t, X, mu, nu);
    };
    auto rho = reconstruct_density_matrix(w, 6, reduced_spec(), 2);
    std::vector<cplx> d(7);
    for (int m = 0; m <= 6; ++m) d[static_cast<std::size_t>(m)] = static_overlap(st, traj, t, m);
    for (int m = 0; m <= 6; ++m) {
        for (int n = 0; n <= 6; ++n) {
            cplx expect = d[static_cast<std::size_t>(m)] * std::conj(d[static_cast<std::size_t>(n)]);
            INFO("m=" << m << " n=" << n);
            REQUIRE(std::abs(rho.at(m, n) - expect) < 1e-6);
        }
    }
}

TEST_CASE("photon distribution of a coherent state is poissonian") {
    auto traj = solve_epsilon(trap(), 1.0, 2000);
    cplx alpha{0.8, 0.5};
    auto st = coherent(alpha);
    TomogramFn w = [&](double X, double mu, double nu) {
        return gaussian_tomogram(st, traj, 0.0, X, mu, nu);
    };
    auto dist = photon_number_distribution(w, 12, {0.0, 0.0}, reduced_spec());
    REQUIRE(dist.imag_residue < 1e-9);
    double mean = std::norm(alpha);
    double pk = std::exp(-mean);
    for (int k = 0; k <= 12; ++k) {
        INFO("k=" << k);
        REQUIRE(dist.probs[static_cast<std::size_t>(k)] == Catch::Approx(pk).margin(1e-7));
        pk *= mean / (k + 1);
    }
    REQUIRE(dist.total() == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("photon scan displaces the sampled distribution") {
    auto traj = solve_epsilon(trap(), 1.0, 2000);
    cplx alpha{0.8, 0.5};
    auto st = coherent(alpha);
    TomogramFn w = [&](double X, double mu, double nu) {
        return gaussian_tomogram(st, traj, 0.0, X, mu, nu);
    };
    // scanning at -alpha recenters the state on the vacuum
    auto back = photon_number_distribution(w, 8, -alpha, reduced_spec());
    REQUIRE(back.probs[0] == Catch::Approx(1.0).margin(1e-7));
    for (int k = 1; k <= 8; ++k) REQUIRE(std::abs(back.probs[static_cast<std::size_t>(k)]) < 1e-7);

    // scanning at +alpha doubles the displacement
    auto out = photon_number_distribution(w, 12, alpha, reduced_spec());
    double mean = 4.0 * std::norm(alpha);
    double pk = std::exp(-mean);
    for (int k = 0; k <= 12; ++k) {
        REQUIRE(out.probs[static_cast<std::size_t>(k)] == Catch::Approx(pk).margin(1e-7));
        pk *= mean / (k + 1);
    }
}

TEST_CASE("photon distribution of series states") {
    auto traj = solve_epsilon(trap(), 1.0, 2000);
    auto three = make_state(StateKind::number, {0.0, 0.0}, 3, deformation(DeformationVariant::identity), 8);
    TomogramFn w3 = [&](double X, double mu, double nu) {
        return state_tomogram(three, traj, 0.0, X, mu, nu);
    };
    auto d3 = photon_number_distribution(w3, 6, {0.0, 0.0}, reduced_spec());
    for (int k = 0; k <= 6; ++k) {
        INFO("k=" << k);
        REQUIRE(d3.probs[static_cast<std::size_t>(k)] ==
                Catch::Approx(k == 3 ? 1.0 : 0.0).margin(1e-7));
    }

    auto fc = make_state(StateKind::f_coherent, {0.6, 0.0}, 0,
                         deformation(DeformationVariant::vogel_lamb_dicke, 0.3), 25);
    TomogramFn wf = [&](double X, double mu, double nu) {
        return state_tomogram(fc, traj, 0.0, X, mu, nu);
    };
    auto df = photon_number_distribution(wf, 10, {0.0, 0.0}, reduced_spec());
    for (int k = 0; k <= 10; ++k) {
        INFO("k=" << k);
        REQUIRE(df.probs[static_cast<std::size_t>(k)] ==
                Catch::Approx(std::norm(fc.coeffs[static_cast<std::size_t>(k)])).margin(1e-6));
    }
}

TEST_CASE("tomogram stream satisfies the evolution equation") {
    auto traj = solve_epsilon(trap(), 3.0, 20000);
    auto st = coherent({0.7, 0.3});
    auto stream = make_time_tomogram(st, traj);

    double X = 0.7, mu = 0.9, nu = -0.6, t = 1.3;
    double r1 = evolution_residual(stream, trap(), X, mu, nu, t, 0.02, 0.02, 0.02);
    double r2 = evolution_residual(stream, trap(), X, mu, nu, t, 0.005, 0.005, 0.005);
    REQUIRE(std::abs(r1) < 2e-3);
    REQUIRE(std::abs(r2) < 1.5e-4);
    // central differences: quartering h divides the residual by ~16
    REQUIRE(std::abs(r1 / r2) == Catch::Approx(16.0).margin(6.0));

    // scattered points stay small at fixed h
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> ux(-2.0, 2.0), uv(-1.5, 1.5), ut(0.5, 2.5);
    for (int i = 0; i < 10; ++i) {
        double res = evolution_residual(stream, trap(), ux(rng), uv(rng), uv(rng), ut(rng), 0.01,
                                        0.01, 0.01);
        REQUIRE(std::abs(res) < 5e-4);
    }
}

TEST_CASE("evolution residual vanishes for the static trap") {
    auto traj = solve_epsilon(trap(0.0, 1.0), 3.0, 12000);
    auto vac = coherent({0.0, 0.0});
    auto stream = make_time_tomogram(vac, traj);
    for (double t : {0.5, 1.5, 2.5}) {
        double res = evolution_residual(stream, trap(0.0, 1.0), 0.8, 0.7, 0.4, t, 0.01, 0.01, 0.01);
        REQUIRE(std::abs(res) < 1e-4);
        double fine =
            evolution_residual(stream, trap(0.0, 1.0), 0.8, 0.7, 0.4, t, 0.0025, 0.0025, 0.0025);
        REQUIRE(std::abs(fine) < 1e-5);  // only the O(h^2) stencil error remains
    }
}

TEST_CASE("evolution residual validates its stencil") {
    auto traj = solve_epsilon(trap(), 1.0, 2000);
    auto stream = make_time_tomogram(coherent({0.3, 0.0}), traj);
    REQUIRE_THROWS_AS(evolution_residual(stream, trap(), 0.0, 1.0, 0.0, 0.5, 0.0, 0.01, 0.01),
                      ValidationError);
    REQUIRE_THROWS_AS(evolution_residual(stream, trap(), 0.0, 1.0, 0.0, 0.005, 0.01, 0.01, 0.01),
                      ValidationError);
}

TEST_CASE("bind_time closes over the stream") {
    auto traj = solve_epsilon(trap(), 2.0, 4000);
    auto st = coherent({0.5, 0.1});
    auto fn = bind_time(make_time_tomogram(st, traj), 1.1);
    REQUIRE(fn(0.4, 0.8, -0.3) == state_tomogram(st, traj, 1.1, 0.4, 0.8, -0.3));
}

TEST_CASE("gridded tomogram interpolates the vacuum across ray radii") {
    auto traj = solve_epsilon(trap(), 1.0, 2000);
    auto vac = coherent({0.0, 0.0});
    TomogramFn w = [&](double X, double mu, double nu) {
        return gaussian_tomogram(vac, traj, 0.0, X, mu, nu);
    };
    std::vector<TomogramSample> samples;
    double radii[] = {0.7, 1.0, 1.6};
    double angles[] = {0.2, 1.25, 2.35};
    for (int k = 0; k < 3; ++k) {
        auto ray = ray_samples(w, radii[k], angles[k], 13.0, 2601);
        samples.insert(samples.end(), ray.begin(), ray.end());
    }
    GriddedTomogram grid(samples);
    REQUIRE(grid.ray_count() == 6);

    std::mt19937 rng(123);
    std::uniform_real_distribution<double> ur(0.4, 2.2), uphi(0.0, 2.0 * pi), uy(-6.0, 6.0);
    for (int i = 0; i < 25; ++i) {
        double r = ur(rng), phi = uphi(rng);
        double mu = r * std::cos(phi), nu = r * std::sin(phi);
        double X = r * uy(rng);
        INFO("r=" << r << " phi=" << phi << " X=" << X);
        REQUIRE(std::abs(grid(X, mu, nu) - w(X, mu, nu)) < 5e-5);
    }
    REQUIRE(grid.out_of_range_count() == 0);
}

TEST_CASE("gridded tomogram mirrors rays by parity") {
    auto profile = [](double X) { return std::exp(-(X - 1.0) * (X - 1.0)) / std::sqrt(pi); };
    std::vector<TomogramSample> samples;
    for (double phi : {0.3, 1.0, 2.0}) {
        double mu = std::cos(phi), nu = std::sin(phi);
        for (int i = 0; i <= 400; ++i) {
            double X = -4.0 + 8.0 * i / 400.0;
            samples.push_back({X, mu, nu, profile(X)});
        }
    }
    GriddedTomogram grid(samples);
    double mu = std::cos(0.3), nu = std::sin(0.3);
    for (double X : {-1.7, 0.4, 2.3}) {
        double direct = grid(X, mu, nu);
        double mirrored = grid(-X, -mu, -nu);
        REQUIRE(mirrored == Catch::Approx(direct).margin(1e-12));
        REQUIRE(direct == Catch::Approx(profile(X)).margin(1e-4));
    }
}

TEST_CASE("explicit rays win over generated mirrors") {
    std::vector<TomogramSample> samples;
    auto push_ray = [&](double phi, double offset) {
        double mu = std::cos(phi), nu = std::sin(phi);
        for (int i = 0; i <= 200; ++i) {
            double X = -4.0 + 8.0 * i / 200.0;
            samples.push_back({X, mu, nu, std::exp(-(X - offset) * (X - offset))});
        }
    };
    push_ray(0.5, 1.0);
    push_ray(0.5 - pi, 0.5);  // not the parity image of the first
    push_ray(1.5, 0.0);
    GriddedTomogram grid(samples);
    REQUIRE(grid.ray_count() == 4);  // two mirror angles already taken
    double q1 = grid(0.2, std::cos(0.5), std::sin(0.5));
    double q2 = grid(0.2, std::cos(0.5 - pi), std::sin(0.5 - pi));
    REQUIRE(q1 == Catch::Approx(std::exp(-0.64)).margin(1e-3));
    REQUIRE(q2 == Catch::Approx(std::exp(-0.09)).margin(1e-3));
}

TEST_CASE("gridded tomogram window reads as zero outside the samples") {
    std::vector<TomogramSample> samples;
    for (double phi : {0.0, 1.0, 2.0}) {
        double mu = std::cos(phi), nu = std::sin(phi);
        for (double X : {-2.0, -1.0, 0.0, 1.0, 2.0}) samples.push_back({X, mu, nu, 0.25});
    }
    GriddedTomogram grid(samples);
    REQUIRE(grid(3.0, std::cos(0.5), std::sin(0.5)) == 0.0);
    REQUIRE(grid.out_of_range_count() == 2);  // both bracketing rays miss
    REQUIRE(grid(-3.0, std::cos(0.5), std::sin(0.5)) == 0.0);
    REQUIRE(grid.out_of_range_count() == 4);
    REQUIRE(grid(0.5, std::cos(0.5), std::sin(0.5)) == Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("gridded tomogram validation") {
    REQUIRE_THROWS_AS(GriddedTomogram({}), ValidationError);
    std::vector<TomogramSample> degenerate;
    for (double X : {-1.0, 0.0, 1.0, 2.0}) degenerate.push_back({X, 0.0, 0.0, 0.1});
    REQUIRE_THROWS_AS(GriddedTomogram(degenerate), ValidationError);

    std::vector<TomogramSample> sparse = {{-1.0, 1.0, 0.0, 0.1},
                                          {0.0, 1.0, 0.0, 0.1},
                                          {1.0, 1.0, 0.0, 0.1}};
    REQUIRE_THROWS_AS(GriddedTomogram(sparse), ValidationError);

    std::vector<TomogramSample> lonely;
    for (double X : {-1.0, 0.0, 1.0, 2.0}) lonely.push_back({X, 1.0, 0.0, 0.1});
    REQUIRE_THROWS_AS(GriddedTomogram(lonely), ValidationError);  // one angle plus its mirror

    std::vector<TomogramSample> nan_in;
    for (double phi : {0.0, 1.0, 2.0})
        for (double X : {-1.0, 0.0, 1.0, 2.0})
            nan_in.push_back({X, std::cos(phi), std::sin(phi),
                              X == 2.0 ? std::numeric_limits<double>::quiet_NaN() : 0.1});
    REQUIRE_THROWS_AS(GriddedTomogram(nan_in), ValidationError);

    std::vector<TomogramSample> ok;
    for (double phi : {0.0, 1.0, 2.0})
        for (double X : {-1.0, 0.0, 1.0, 2.0}) ok.push_back({X, std::cos(phi), std::sin(phi), 0.1});
    GriddedTomogram grid(ok);
    REQUIRE_THROWS_AS(grid(0.0, 0.0, 0.0), ValidationError);
}

TEST_CASE("gridded vacuum round trips through the reconstructions") {
    auto traj = solve_epsilon(trap(), 1.0, 2000);
    auto vac = coherent({0.0, 0.0});
    TomogramFn w = [&](double X, double mu, double nu) {
        return gaussian_tomogram(vac, traj, 0.0, X, mu, nu);
    };
    std::vector<TomogramSample> samples;
    for (double phi : {0.2, 1.25, 2.35}) {
        auto ray = ray_samples(w, 1.0, phi, 12.5, 5001);
        samples.insert(samples.end(), ray.begin(), ray.end());
    }
    auto grid = std::make_shared<GriddedTomogram>(samples);
    TomogramFn gw = [grid](double X, double mu, double nu) { return (*grid)(X, mu, nu); };

    QuadratureSpec spec = reduced_spec(81);
    spec.cutoff = {12.0, 8.0, 8.0};
    auto rho = reconstruct_density_matrix(gw, 4, spec);
    auto rho_direct = reconstruct_density_matrix(w, 4, spec);
    REQUIRE(std::abs(rho.at(0, 0) - cplx{1.0, 0.0}) < 1e-4);
    for (int m = 0; m <= 4; ++m)
        for (int n = 0; n <= 4; ++n)
            REQUIRE(std::abs(rho.at(m, n) - rho_direct.at(m, n)) < 1e-4);

    GridAxis q{-1.5, 1.5, 5}, p{-1.5, 1.5, 5};
    auto wg = invert_to_wigner(gw, q, p, spec);
    for (int iq = 0; iq < 5; ++iq)
        for (int ip = 0; ip < 5; ++ip) {
            double qv = q.value(iq), pv = p.value(ip);
            REQUIRE(wg.at(iq, ip) ==
                    Catch::Approx(2.0 * std::exp(-qv * qv - pv * pv)).margin(1e-3));
        }
}
