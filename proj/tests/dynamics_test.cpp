#include <catch2/catch_amalgamated.hpp>

#include <iontomo/dynamics.hpp>

using namespace iontomo;

namespace {

TrapConfig make_cfg(double kappa, double omega) {
    TrapConfig cfg;
    cfg.kappa = kappa;
    cfg.omega_drive = omega;
    return cfg;
}

}  // namespace

TEST_CASE("initial conditions are stored exactly") {
    auto traj = solve_epsilon(make_cfg(0.7, 1.3), 5.0, 1000);
    REQUIRE(traj.eps[0] == cplx{1.0, 0.0});
    REQUIRE(traj.eps_dot[0] == cplx{0.0, 1.0});
    auto [e0, v0] = epsilon_at(traj, 0.0);
    REQUIRE(e0 == cplx{1.0, 0.0});
    REQUIRE(v0 == cplx{0.0, 1.0});
    REQUIRE(wronskian(traj, 0.0) == cplx{0.0, -2.0});
}

TEST_CASE("harmonic limit reproduces exp(it)") {
    auto traj = solve_epsilon(make_cfg(0.0, 1.0), 20.0, 8000);
    double worst = 0.0;
    for (std::size_t i = 0; i < traj.t_grid.size(); ++i) {
        cplx exact = std::exp(cplx{0.0, traj.t_grid[i]});
        worst = std::max(worst, std::abs(traj.eps[i] - exact));
        worst = std::max(worst, std::abs(traj.eps_dot[i] - cplx{0.0, 1.0} * exact));
    }
    REQUIRE(worst <= 1e-9);

    auto [epi, vpi] = epsilon_at(traj, pi);
    REQUIRE(std::abs(epi - cplx{-1.0, 0.0}) <= 1e-9);
    REQUIRE(std::abs(vpi - cplx{0.0, -1.0}) <= 1e-9);
    auto [eh, vh] = epsilon_at(traj, pi / 2.0);
    REQUIRE(std::abs(eh - cplx{0.0, 1.0}) <= 1e-9);
    REQUIRE(std::abs(vh - cplx{-1.0, 0.0}) <= 1e-9);
}

TEST_CASE("step halving agrees at t=1 for the default trap") {
    auto a = solve_epsilon(make_cfg(0.5, 2.0), 1.0, 200);
    auto b = solve_epsilon(make_cfg(0.5, 2.0), 1.0, 400);
    REQUIRE(std::abs(a.eps.back() - b.eps.back()) <= 1e-10);
    REQUIRE(std::abs(a.eps_dot.back() - b.eps_dot.back()) <= 1e-10);
}

TEST_CASE("interpolation matches a fresh integration stopped at t") {
    auto cfg = make_cfg(0.5, 2.0);
    auto traj = solve_epsilon(cfg, 2.0, 400);
    for (double t : {0.7317, 1.29153, 1.9999}) {
        auto [e, v] = epsilon_at(traj, t);
        auto oracle = solve_epsilon(cfg, t, 40000);
        INFO("t=" << t);
        REQUIRE(std::abs(e - oracle.eps.back()) <= 1e-9);
        REQUIRE(std::abs(v - oracle.eps_dot.back()) <= 1e-9);
    }
}

TEST_CASE("interpolation error drops at fourth order") {
    auto cfg = make_cfg(0.5, 2.0);
    double t = 1.23456789;
    auto oracle = solve_epsilon(cfg, t, 80000).eps.back();
    auto coarse = solve_epsilon(cfg, 2.0, 100);
    auto fine = solve_epsilon(cfg, 2.0, 200);
    double e1 = std::abs(epsilon_at(coarse, t).first - oracle);
    double e2 = std::abs(epsilon_at(fine, t).first - oracle);
    REQUIRE(e1 / e2 == Catch::Approx(16.0).margin(10.0));
}

TEST_CASE("wronskian stays at -2i for the driven trap") {
    auto cfg = make_cfg(0.9, 2.0);
    auto traj = solve_epsilon(cfg, 20.0, default_n_steps(cfg, 20.0));
    REQUIRE(traj.max_wronskian_error <= 1e-8);
    for (double t : {0.1, 3.7, 11.113, 19.99})
        REQUIRE(std::abs(wronskian(traj, t) + cplx{0.0, 2.0}) <= 1e-8);
}

TEST_CASE("wronskian drift converges at fifth order in the step") {
    auto cfg = make_cfg(0.9, 2.0);
    double d1 = solve_epsilon(cfg, 20.0, default_n_steps(cfg, 20.0)).max_wronskian_error;
    double d2 = solve_epsilon(cfg, 20.0, 2 * default_n_steps(cfg, 20.0)).max_wronskian_error;
    REQUIRE(d1 / d2 == Catch::Approx(32.0).margin(18.0));
}

TEST_CASE("mode function never vanishes and respects |eps||epsdot| >= 1") {
    auto traj = solve_epsilon(make_cfg(0.9, 2.0), 20.0, 4000);
    REQUIRE(traj.min_abs_eps > 0.0);
    for (std::size_t i = 0; i < traj.eps.size(); ++i)
        REQUIRE(std::abs(traj.eps[i]) * std::abs(traj.eps_dot[i]) >= 1.0 - 1e-9);
}

TEST_CASE("identical inputs give bitwise identical trajectories") {
    auto a = solve_epsilon(make_cfg(0.5, 2.0), 10.0, 2000);
    auto b = solve_epsilon(make_cfg(0.5, 2.0), 10.0, 2000);
    REQUIRE(a.eps == b.eps);
    REQUIRE(a.eps_dot == b.eps_dot);
    REQUIRE(a.t_grid == b.t_grid);
}

TEST_CASE("resonant drive raises the warning flag") {
    auto cfg = make_cfg(2.0, 2.0);
    auto traj = solve_epsilon(cfg, 20.0, 2 * default_n_steps(cfg, 20.0));
    REQUIRE(traj.resonance_warning);
    REQUIRE(traj.max_abs_eps > 10.0);

    auto calm = solve_epsilon(make_cfg(0.5, 2.0), 20.0, 2000);
    REQUIRE_FALSE(calm.resonance_warning);
}

TEST_CASE("default step tracks the fastest oscillation") {
    REQUIRE(default_step(make_cfg(0.5, 2.0)) == Catch::Approx(pi / 200.0).epsilon(1e-15));
    REQUIRE(default_step(make_cfg(0.5, 0.5)) == Catch::Approx(2.0 * pi / 200.0).epsilon(1e-15));
    REQUIRE(default_n_steps(make_cfg(0.5, 2.0), 20.0) ==
            static_cast<int>(std::ceil(20.0 / (pi / 200.0))));
}

TEST_CASE("validation rejects bad trap and query parameters") {
    REQUIRE_THROWS_AS(solve_epsilon(make_cfg(-1.0, 2.0), 1.0, 100), ValidationError);
    REQUIRE_THROWS_AS(solve_epsilon(make_cfg(0.5, 0.0), 1.0, 100), ValidationError);
    REQUIRE_THROWS_AS(solve_epsilon(make_cfg(0.5, 2.0), 0.0, 100), ValidationError);
    REQUIRE_THROWS_AS(solve_epsilon(make_cfg(0.5, 2.0), 1.0, 1), ValidationError);
    double nan = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(solve_epsilon(make_cfg(nan, 2.0), 1.0, 100), ValidationError);

    auto traj = solve_epsilon(make_cfg(0.5, 2.0), 1.0, 100);
    REQUIRE_THROWS_AS(epsilon_at(traj, -0.1), ValidationError);
    REQUIRE_THROWS_AS(epsilon_at(traj, 1.0001), ValidationError);
}

TEST_CASE("omega_sq is the stated periodic profile") {
    auto cfg = make_cfg(0.9, 2.0);
    for (double t : {0.0, 0.3, 1.7, 4.4}) {
        double s = std::sin(2.0 * t);
        REQUIRE(cfg.omega_sq(t) == Catch::Approx(1.0 + 0.81 * s * s).epsilon(1e-15));
        REQUIRE(cfg.omega_sq(t) >= 1.0);
    }
}
