#pragma once

// CSV and JSON emission.  Every float goes through g17 (%.17g, round-trip
// exact), so identical inputs give byte-identical files.  Readers are strict:
// headers must match the writers bit for bit.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <iontomo/tomography.hpp>

namespace iontomo {

inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string json_string(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') {
            out += '\\';
            out += c;
        } else if (static_cast<unsigned char>(c) < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof buf, "\\u%04x", c);
            out += buf;
        } else {
            out += c;
        }
    }
    return out + "\"";
}

// binary mode keeps line endings LF everywhere
inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open output file: " + path);
    return out;
}

inline void write_epsilon_csv(std::ostream& out, const EpsilonTrajectory& traj) {
    out << "t,eps_re,eps_im,epsdot_re,epsdot_im,wronskian_im_err\n";
    for (std::size_t i = 0; i < traj.t_grid.size(); ++i) {
        cplx e = traj.eps[i];
        cplx ed = traj.eps_dot[i];
        double err = std::abs(e * std::conj(ed) - std::conj(e) * ed + cplx{0.0, 2.0});
        out << g17(traj.t_grid[i]) << ',' << g17(e.real()) << ',' << g17(e.imag()) << ','
            << g17(ed.real()) << ',' << g17(ed.imag()) << ',' << g17(err) << '\n';
    }
}

inline void write_tomogram_csv(std::ostream& out, const Tomogram& tomo) {
    out << "X,mu,nu,w\n";
    for (std::size_t l = 0; l < tomo.lines.size(); ++l) {
        auto [mu, nu] = tomo.lines[l];
        for (int i = 0; i < tomo.x_axis.n; ++i)
            out << g17(tomo.x_axis.value(i)) << ',' << g17(mu) << ',' << g17(nu) << ','
                << g17(tomo.values[l][static_cast<std::size_t>(i)]) << '\n';
    }
}

inline std::vector<TomogramSample> read_tomogram_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "X,mu,nu,w")
        throw ValidationError("tomogram csv: header must be exactly 'X,mu,nu,w'");
    std::vector<TomogramSample> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        double v[4];
        const char* p = line.c_str();
        for (int k = 0; k < 4; ++k) {
            char* end = nullptr;
            v[k] = std::strtod(p, &end);
            if (end == p)
                throw ValidationError("tomogram csv: bad number on line " + std::to_string(lineno));
            p = end;
            if (k < 3) {
                if (*p != ',')
                    throw ValidationError("tomogram csv: expected 4 comma-separated fields on line " +
                                          std::to_string(lineno));
                ++p;
            }
        }
        if (*p != '\0')
            throw ValidationError("tomogram csv: trailing characters on line " +
                                  std::to_string(lineno));
        rows.push_back({v[0], v[1], v[2], v[3]});
    }
    if (rows.empty()) throw ValidationError("tomogram csv: no data rows");
    return rows;
}

inline void write_wigner_csv(std::ostream& out, const PhaseSpaceGrid& grid) {
    out << "q,p,W\n";
    for (int iq = 0; iq < grid.q_axis.n; ++iq)
        for (int ip = 0; ip < grid.p_axis.n; ++ip)
            out << g17(grid.q_axis.value(iq)) << ',' << g17(grid.p_axis.value(ip)) << ','
                << g17(grid.at(iq, ip)) << '\n';
}

inline void write_photon_csv(std::ostream& out, const PhotonDistribution& dist) {
    out << "n,w\n";
    for (std::size_t k = 0; k < dist.probs.size(); ++k)
        out << k << ',' << g17(dist.probs[k]) << '\n';
}

inline void write_state_json(std::ostream& out, const StateSpec& state) {
    out << "{\n  \"truncation\": " << state.truncation << ",\n  \"tail_bound\": "
        << g17(state.tail_bound) << ",\n  \"coefficients\": [\n";
    for (std::size_t n = 0; n < state.coeffs.size(); ++n) {
        out << "    {\"n\": " << n << ", \"re\": " << g17(state.coeffs[n].real())
            << ", \"im\": " << g17(state.coeffs[n].imag()) << '}';
        out << (n + 1 < state.coeffs.size() ? ",\n" : "\n");
    }
    out << "  ]\n}\n";
}

inline void write_density_matrix_json(std::ostream& out, const DensityMatrix& rho) {
    cplx tr = rho.trace();
    out << "{\n  \"dim\": " << rho.dim << ",\n  \"trace_re\": " << g17(tr.real())
        << ",\n  \"trace_im\": " << g17(tr.imag())
        << ",\n  \"hermiticity_defect\": " << g17(rho.hermiticity_defect())
        << ",\n  \"min_eigenvalue\": " << g17(rho.min_eigenvalue())
        << ",\n  \"purity\": " << g17(rho.purity()) << ",\n  \"entries\": [\n";
    for (int m = 0; m < rho.dim; ++m) {
        for (int n = 0; n < rho.dim; ++n) {
            cplx v = rho.at(m, n);
            out << "    {\"m\": " << m << ", \"n\": " << n << ", \"re\": " << g17(v.real())
                << ", \"im\": " << g17(v.imag()) << '}';
            out << (m == rho.dim - 1 && n == rho.dim - 1 ? "\n" : ",\n");
        }
    }
    out << "  ]\n}\n";
}

}  // namespace iontomo
