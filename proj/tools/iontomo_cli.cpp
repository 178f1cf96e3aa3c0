// Command-line front door.  Every subcommand is a pure function of its flags:
// fixed column order, LF endings, %.17g floats, no timestamps, so identical
// invocations give byte-identical output.

#include <fstream>
#include <iostream>
#include <memory>
#include <random>

#include <CLI11.hpp>

#include <iontomo/check.hpp>
#include <iontomo/io.hpp>

namespace {

using namespace iontomo;

struct TrapFlags {
    double kappa = 0.5;
    double omega = 2.0;
    int steps = 0;  // 0: library default for the horizon
};

struct StateFlags {
    std::string kind = "coherent";
    double amp_re = 0.0;
    double amp_im = 0.0;
    int level = 0;
    std::string variant = "identity";
    double eta = 0.0;
    int truncation = 40;
};

void add_trap_flags(CLI::App* cmd, TrapFlags& f) {
    cmd->add_option("--kappa", f.kappa, "drive depth kappa")->check(CLI::NonNegativeNumber);
    cmd->add_option("--omega", f.omega, "drive frequency Omega")->check(CLI::PositiveNumber);
    cmd->add_option("--steps", f.steps, "integrator steps (0 = default density)")
        ->check(CLI::NonNegativeNumber);
}

void add_state_flags(CLI::App* cmd, StateFlags& f) {
    cmd->add_option("--kind", f.kind, "state kind")
        ->check(CLI::IsMember({"coherent", "number", "f-coherent"}));
    cmd->add_option("--alpha-re,--beta-re", f.amp_re, "amplitude, real part");
    cmd->add_option("--alpha-im,--beta-im", f.amp_im, "amplitude, imaginary part");
    cmd->add_option("--level", f.level, "number-state level")->check(CLI::NonNegativeNumber);
    cmd->add_option("--f-variant", f.variant, "deformation profile")
        ->check(CLI::IsMember({"identity", "paper", "vogel"}));
    cmd->add_option("--eta", f.eta, "Lamb-Dicke parameter")->check(CLI::NonNegativeNumber);
    cmd->add_option("--truncation", f.truncation, "level-basis truncation")
        ->check(CLI::Range(1, 160));
}

TrapConfig trap_config(const TrapFlags& f) {
    TrapConfig cfg;
    cfg.kappa = f.kappa;
    cfg.omega_drive = f.omega;
    return cfg;
}

EpsilonTrajectory build_trajectory(const TrapFlags& f, double horizon) {
    TrapConfig cfg = trap_config(f);
    horizon = std::max(horizon, 0.5);
    int n = f.steps > 0 ? f.steps : default_n_steps(cfg, horizon);
    return solve_epsilon(cfg, horizon, n);
}

StateSpec build_state(const StateFlags& f) {
    DeformationSpec d;
    d.variant = f.variant == "identity"  ? DeformationVariant::identity
                : f.variant == "paper"   ? DeformationVariant::paper_lamb_dicke
                                         : DeformationVariant::vogel_lamb_dicke;
    d.eta = f.eta;
    StateKind kind = f.kind == "coherent" ? StateKind::coherent
                     : f.kind == "number" ? StateKind::number
                                          : StateKind::f_coherent;
    return make_state(kind, {f.amp_re, f.amp_im}, f.level, d, f.truncation);
}

// stdout unless --out was given
class OutputTarget {
  public:
    explicit OutputTarget(const std::string& path) {
        if (!path.empty()) {
            file_ = open_out(path);
            out_ = &file_;
        }
    }
    std::ostream& stream() { return *out_; }

  private:
    std::ofstream file_;
    std::ostream* out_ = &std::cout;
};

struct ReconstructFlags {
    TrapFlags trap;
    StateFlags state;
    double t = 0.0;
    std::string tomogram_path;
};

void add_reconstruct_inputs(CLI::App* cmd, ReconstructFlags& f) {
    add_trap_flags(cmd, f.trap);
    add_state_flags(cmd, f.state);
    cmd->add_option("--t", f.t, "reconstruction time")->check(CLI::NonNegativeNumber);
    auto* from_state = cmd->add_flag("--from-state", "evaluate the tomogram from the state flags");
    auto* from_csv =
        cmd->add_option("--tomogram", f.tomogram_path, "read samples from a tomogram CSV");
    from_state->excludes(from_csv);
}

TomogramFn build_input_fn(const ReconstructFlags& f) {
    if (!f.tomogram_path.empty()) {
        std::ifstream in(f.tomogram_path, std::ios::binary);
        if (!in) throw ValidationError("cannot open tomogram file: " + f.tomogram_path);
        auto grid = std::make_shared<GriddedTomogram>(read_tomogram_csv(in));
        return [grid](double X, double mu, double nu) { return (*grid)(X, mu, nu); };
    }
    auto state = build_state(f.state);
    auto traj = build_trajectory(f.trap, f.t);
    return bind_time(make_time_tomogram(std::move(state), std::move(traj)), f.t);
}

int dispatch(CLI::App& app, int argc, char** argv) {
    int threads = 1;
    app.add_option("--threads", threads, "worker threads for grid fills")
        ->check(CLI::PositiveNumber);
    app.set_config("--config", "", "key-value file merged under explicit flags");
    app.fallthrough();
    app.require_subcommand(0, 1);

    // epsilon
    auto* c_eps = app.add_subcommand("epsilon", "integrate the classical trap trajectory");
    TrapFlags eps_trap;
    double eps_tmax = 10.0;
    std::string eps_out;
    add_trap_flags(c_eps, eps_trap);
    c_eps->add_option("--tmax", eps_tmax, "final time")->check(CLI::PositiveNumber);
    c_eps->add_option("--out", eps_out, "output CSV path");

    // state
    auto* c_state = app.add_subcommand("state", "emit level-basis coefficients");
    StateFlags state_flags;
    std::string state_out;
    add_state_flags(c_state, state_flags);
    c_state->add_option("--out", state_out, "output JSON path");

    // tomogram
    auto* c_tomo = app.add_subcommand("tomogram", "marginal distribution along quadrature lines");
    TrapFlags tomo_trap;
    StateFlags tomo_state;
    double tomo_t = 0.0, tomo_mu = 1.0, tomo_nu = 0.0, tomo_phi = 0.0;
    int tomo_phi_steps = 0;
    double x_min = -8.0, x_max = 8.0;
    int x_steps = 321;
    std::string tomo_out;
    add_trap_flags(c_tomo, tomo_trap);
    add_state_flags(c_tomo, tomo_state);
    c_tomo->add_option("--t", tomo_t, "evaluation time")->check(CLI::NonNegativeNumber);
    auto* o_mu = c_tomo->add_option("--mu", tomo_mu, "line coefficient of q");
    auto* o_nu = c_tomo->add_option("--nu", tomo_nu, "line coefficient of p");
    auto* o_phi = c_tomo->add_option("--phi", tomo_phi, "homodyne angle, overrides --mu/--nu");
    auto* o_phi_steps =
        c_tomo->add_option("--phi-steps", tomo_phi_steps, "sweep N angles over the half circle")
            ->check(CLI::PositiveNumber);
    o_phi->excludes(o_mu)->excludes(o_nu);
    o_phi_steps->excludes(o_mu)->excludes(o_nu)->excludes(o_phi);
    c_tomo->add_option("--x-min", x_min, "first X sample");
    c_tomo->add_option("--x-max", x_max, "last X sample");
    c_tomo->add_option("--x-steps", x_steps, "X samples per line")->check(CLI::Range(2, 1000000));
    c_tomo->add_option("--out", tomo_out, "output CSV path");

    // wigner
    auto* c_wig = app.add_subcommand("wigner", "quasidistribution on a phase-space grid");
    TrapFlags wig_trap;
    StateFlags wig_state;
    double wig_t = 0.0;
    double q_min = -4.0, q_max = 4.0, p_min = -4.0, p_max = 4.0;
    int q_steps = 81, p_steps = 81;
    std::string wig_out;
    add_trap_flags(c_wig, wig_trap);
    add_state_flags(c_wig, wig_state);
    c_wig->add_option("--t", wig_t, "evaluation time")->check(CLI::NonNegativeNumber);
    c_wig->add_option("--q-min", q_min);
    c_wig->add_option("--q-max", q_max);
    c_wig->add_option("--q-steps", q_steps)->check(CLI::Range(2, 100000));
    c_wig->add_option("--p-min", p_min);
    c_wig->add_option("--p-max", p_max);
    c_wig->add_option("--p-steps", p_steps)->check(CLI::Range(2, 100000));
    c_wig->add_option("--out", wig_out, "output CSV path");

    // reconstruct-dm
    auto* c_dm = app.add_subcommand("reconstruct-dm", "level-basis density matrix from a tomogram");
    ReconstructFlags dm_in;
    int dm_nmax = 8;
    std::string dm_out;
    add_reconstruct_inputs(c_dm, dm_in);
    c_dm->add_option("--nmax", dm_nmax, "highest level")->check(CLI::Range(0, 160));
    c_dm->add_option("--out", dm_out, "output JSON path");

    // reconstruct-wigner
    auto* c_rw = app.add_subcommand("reconstruct-wigner", "phase-space grid from a tomogram");
    ReconstructFlags rw_in;
    double rq_min = -4.0, rq_max = 4.0, rp_min = -4.0, rp_max = 4.0;
    int rq_steps = 41, rp_steps = 41;
    std::string rw_out;
    add_reconstruct_inputs(c_rw, rw_in);
    c_rw->add_option("--q-min", rq_min);
    c_rw->add_option("--q-max", rq_max);
    c_rw->add_option("--q-steps", rq_steps)->check(CLI::Range(2, 100000));
    c_rw->add_option("--p-min", rp_min);
    c_rw->add_option("--p-max", rp_max);
    c_rw->add_option("--p-steps", rp_steps)->check(CLI::Range(2, 100000));
    c_rw->add_option("--out", rw_out, "output CSV path");

    // photon-stats
    auto* c_ph = app.add_subcommand("photon-stats", "level populations from a tomogram");
    ReconstructFlags ph_in;
    double scan_re = 0.0, scan_im = 0.0;
    int ph_nmax = 16;
    std::string ph_out;
    add_reconstruct_inputs(c_ph, ph_in);
    c_ph->add_option("--scan-re", scan_re, "scan amplitude, real part");
    c_ph->add_option("--scan-im", scan_im, "scan amplitude, imaginary part");
    c_ph->add_option("--nmax", ph_nmax, "highest level")->check(CLI::Range(0, 160));
    c_ph->add_option("--out", ph_out, "output CSV path");

    // check-evolution
    auto* c_ev = app.add_subcommand("check-evolution", "finite-difference residual of the tomogram flow");
    TrapFlags ev_trap;
    StateFlags ev_state;
    double ev_t = 1.0, ev_h = 4e-3;
    int ev_points = 5;
    std::string ev_out;
    c_ev->set_help_flag("--help", "print help");  // frees -h for the stencil step
    add_trap_flags(c_ev, ev_trap);
    add_state_flags(c_ev, ev_state);
    c_ev->add_option("--t", ev_t, "expansion time")->check(CLI::PositiveNumber);
    c_ev->add_option("--h", ev_h, "largest stencil step")->check(CLI::PositiveNumber);
    c_ev->add_option("--points", ev_points, "sample points per step")->check(CLI::PositiveNumber);
    c_ev->add_option("--out", ev_out, "output CSV path");

    // check
    auto* c_chk = app.add_subcommand("check", "run the full invariant battery");
    bool chk_json = false;
    std::string chk_out;
    c_chk->add_flag("--json", chk_json, "emit the report as JSON");
    c_chk->add_option("--out", chk_out, "output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e);
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e);
        return 0;
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // message and usage hint on the error stream
        return 1;
    }

    if (c_eps->parsed()) {
        auto traj = build_trajectory(eps_trap, eps_tmax);
        OutputTarget out(eps_out);
        write_epsilon_csv(out.stream(), traj);
        return 0;
    }

    if (c_state->parsed()) {
        auto st = build_state(state_flags);
        OutputTarget out(state_out);
        write_state_json(out.stream(), st);
        return 0;
    }

    if (c_wig->parsed()) {
        auto st = build_state(wig_state);
        auto traj = build_trajectory(wig_trap, wig_t);
        GridAxis q{q_min, q_max, q_steps}, p{p_min, p_max, p_steps};
        auto grid = wigner_grid(st, traj, wig_t, q, p, threads);
        OutputTarget out(wig_out);
        write_wigner_csv(out.stream(), grid);
        return 0;
    }

    if (c_dm->parsed()) {
        auto fn = build_input_fn(dm_in);
        auto rho = reconstruct_density_matrix(fn, dm_nmax, inversion_defaults(), threads);
        OutputTarget out(dm_out);
        write_density_matrix_json(out.stream(), rho);
        return 0;
    }

    if (c_rw->parsed()) {
        auto fn = build_input_fn(rw_in);
        GridAxis q{rq_min, rq_max, rq_steps}, p{rp_min, rp_max, rp_steps};
        auto grid = invert_to_wigner(fn, q, p, inversion_defaults(), threads);
        OutputTarget out(rw_out);
        write_wigner_csv(out.stream(), grid);
        return 0;
    }

    if (c_ph->parsed()) {
        auto fn = build_input_fn(ph_in);
        auto dist = photon_number_distribution(fn, ph_nmax, {scan_re, scan_im},
                                               inversion_defaults(), threads);
        OutputTarget out(ph_out);
        write_photon_csv(out.stream(), dist);
        return 0;
    }

    if (c_ev->parsed()) {
        auto st = build_state(ev_state);
        auto traj = build_trajectory(ev_trap, ev_t + 4.0 * ev_h + 0.1);
        auto stream = make_time_tomogram(std::move(st), traj);
        if (ev_t - ev_h < 0.0)
            throw ValidationError("check-evolution: --t must exceed --h for the centered stencil");
        std::mt19937 rng(12345);
        std::uniform_real_distribution<double> ux(-2.0, 2.0), uv(-1.5, 1.5);
        std::vector<std::array<double, 3>> pts;
        while (static_cast<int>(pts.size()) < ev_points) {
            double X = ux(rng), mu = uv(rng), nu = uv(rng);
            if (mu * mu + nu * nu < 0.1) continue;
            pts.push_back({X, mu, nu});
        }
        OutputTarget out(ev_out);
        out.stream() << "h,rms_residual,order\n";
        double prev = 0.0;
        for (int k = 0; k < 3; ++k) {
            double h = ev_h / (1 << k);
            KahanSum acc;
            for (const auto& p : pts) {
                double res = evolution_residual(stream, trap_config(ev_trap), p[0], p[1], p[2],
                                                ev_t, h, h, h);
                acc.add(res * res);
            }
            double rms = std::sqrt(acc.value() / pts.size());
            out.stream() << g17(h) << ',' << g17(rms) << ',';
            if (k > 0) out.stream() << g17(std::log2(prev / rms));
            out.stream() << '\n';
            prev = rms;
        }
        return 0;
    }

    if (c_chk->parsed()) {
        auto results = run_battery(threads);
        OutputTarget out(chk_out);
        if (chk_json)
            write_battery_json(out.stream(), results);
        else
            print_battery(out.stream(), results);
        for (const auto& r : results)
            if (!r.pass) return 1;
        return 0;
    }

    // default run, also `tomogram`: marginal CSV on the standard grid
    auto st = build_state(tomo_state);
    auto traj = build_trajectory(tomo_trap, tomo_t);
    std::vector<std::pair<double, double>> lines;
    if (tomo_phi_steps > 0) {
        for (int k = 0; k < tomo_phi_steps; ++k) {
            double phi = pi * k / tomo_phi_steps;
            lines.emplace_back(std::cos(phi), std::sin(phi));
        }
    } else if (o_phi->count() > 0) {
        lines.emplace_back(std::cos(tomo_phi), std::sin(tomo_phi));
    } else {
        lines.emplace_back(tomo_mu, tomo_nu);
    }
    GridAxis x{x_min, x_max, x_steps};
    auto tomo = make_tomogram(st, traj, tomo_t, lines, x, threads);
    OutputTarget out(tomo_out);
    write_tomogram_csv(out.stream(), tomo);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"motional-state tomography for a periodically driven trap"};
    try {
        return dispatch(app, argc, argv);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
