#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "thermnet/linalg.hpp"
#include "thermnet/network.hpp"
#include "thermnet/solvers.hpp"

namespace thermnet {

// Response input: either a boundary-temperature perturbation or a dissipation
// power perturbation at a node.
struct ResponseInput {
    enum class Kind { boundary_temperature, power };
    Kind kind = Kind::boundary_temperature;
    std::string node;
};

// First-order expansion of the energy equation about a steady state T_bar:
//   C dx/dt = -K x + b u,  x = T - T_bar  (descriptor form; arithmetic nodes
// carry zero capacitance rows). K is the negated residual Jacobian, so each
// radiative coupling contributes 4 sigma GR Tbar_i^3 / 4 sigma GR Tbar_j^3
// asymmetrically, and geometric conductors include their dk/dT term.
struct LinearizedSystem {
    Matrix<double> K;                   // [W/K], unknown x unknown
    std::vector<double> C;              // [J/K] diagonal, zero on arithmetic rows
    std::vector<int> nodes;             // model node index per row
    std::vector<std::string> node_ids;  // same order
    std::vector<double> T_bar;          // full node vector
    std::map<std::string, std::vector<double>> B_temp;  // boundary id -> column [W/K]

    int index_of(const std::string& id) const {
        for (std::size_t i = 0; i < node_ids.size(); ++i)
            if (node_ids[i] == id) return static_cast<int>(i);
        return -1;
    }
};

inline LinearizedSystem linearize(const Network& net, const std::vector<double>& T_bar,
                                  double steady_tol = 1e-6) {
    const std::vector<double> r = net.residual(T_bar, 0.0);
    double rmax = 0.0;
    for (int i : net.unknowns()) rmax = std::max(rmax, std::abs(r[i]));
    if (rmax > steady_tol)
        throw ModelError("linearize: T_bar is not a steady state (max residual " +
                         std::to_string(rmax) + " W)");

    const Matrix<double> J = net.full_jacobian(T_bar);
    const auto& unknowns = net.unknowns();
    const int m = static_cast<int>(unknowns.size());

    LinearizedSystem sys;
    sys.K = Matrix<double>(m, m);
    sys.C.resize(m);
    sys.T_bar = T_bar;
    for (int a = 0; a < m; ++a) {
        const int i = unknowns[a];
        const ThermalNode& node = net.model().nodes[i];
        sys.nodes.push_back(i);
        sys.node_ids.push_back(node.id);
        sys.C[a] = node.kind == NodeKind::diffusion
                       ? net.model().node_capacity(node, T_bar[i])
                       : 0.0;
        for (int b = 0; b < m; ++b) sys.K(a, b) = -J(i, unknowns[b]);
    }
    for (int i = 0; i < net.node_count(); ++i) {
        if (net.model().nodes[i].kind != NodeKind::boundary) continue;
        std::vector<double> col(m);
        for (int a = 0; a < m; ++a) col[a] = J(unknowns[a], i);
        sys.B_temp[net.model().nodes[i].id] = std::move(col);
    }
    return sys;
}

struct GainSpectrum {
    std::vector<double> frequencies;               // [Hz]
    std::vector<std::string> node_ids;
    std::vector<std::vector<double>> gain;         // [freq][node], K/K or K/W
    std::vector<std::vector<double>> phase;        // [freq][node], rad
    std::string unit;                              // "K/K" or "K/W"
};

inline std::vector<double> response_column(const LinearizedSystem& sys, const ResponseInput& input) {
    const int m = sys.K.rows();
    std::vector<double> b(m, 0.0);
    if (input.kind == ResponseInput::Kind::boundary_temperature) {
        auto it = sys.B_temp.find(input.node);
        if (it == sys.B_temp.end())
            throw ModelError("transfer input: unknown boundary node '" + input.node + "'");
        b = it->second;
    } else {
        const int idx = sys.index_of(input.node);
        if (idx < 0) throw ModelError("transfer input: unknown node '" + input.node + "'");
        b[idx] = 1.0;
    }
    return b;
}

// Gain(f) = |(i 2 pi f C + K)^-1 b| per node; one complex solve per frequency.
inline GainSpectrum frequency_response(const LinearizedSystem& sys, const ResponseInput& input,
                                       const std::vector<double>& freqs) {
    using cd = std::complex<double>;
    const int m = sys.K.rows();
    const std::vector<double> b = response_column(sys, input);

    GainSpectrum spec;
    spec.frequencies = freqs;
    spec.node_ids = sys.node_ids;
    spec.unit = input.kind == ResponseInput::Kind::boundary_temperature ? "K/K" : "K/W";
    for (double f : freqs) {
        if (!(f > 0.0)) throw ModelError("transfer: frequencies must be > 0");
        Matrix<cd> A(m, m);
        const double w = 2.0 * std::numbers::pi * f;
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c)
                A(r, c) = cd(sys.K(r, c), r == c ? w * sys.C[r] : 0.0);
        std::vector<cd> rhs(m);
        for (int k = 0; k < m; ++k) rhs[k] = cd(b[k], 0.0);
        std::vector<cd> x;
        try {
            x = lu_solve(std::move(A), rhs);
        } catch (const SingularMatrixError&) {
            throw ModelError("transfer: singular system at f = " + std::to_string(f) + " Hz");
        }
        std::vector<double> g(m), ph(m);
        for (int k = 0; k < m; ++k) {
            g[k] = std::abs(x[k]);
            ph[k] = std::arg(x[k]);
        }
        spec.gain.push_back(std::move(g));
        spec.phase.push_back(std::move(ph));
    }
    return spec;
}

struct DcGainCheck {
    std::vector<std::string> node_ids;
    std::vector<double> linear;     // K/K or K/W
    std::vector<double> nonlinear;  // finite-difference re-solve
};

// DC sensitivity of the linearized system against a nonlinear re-solve with
// the input perturbed by delta (0.1 K or 0.1 mW scale keeps the comparison in
// the linear regime).
inline DcGainCheck dc_gain_check(const Network& net, const std::vector<double>& T_bar,
                                 const ResponseInput& input, double delta,
                                 const SolveOptions& options = {}) {
    const LinearizedSystem sys = linearize(net, T_bar, 1e-6);
    const std::vector<double> b = response_column(sys, input);
    const std::vector<double> x = lu_solve(sys.K, b);

    Model perturbed = net.model();
    if (input.kind == ResponseInput::Kind::boundary_temperature) {
        bool found = false;
        for (auto& n : perturbed.nodes)
            if (n.id == input.node && n.kind == NodeKind::boundary) {
                n.temperature += delta;
                found = true;
            }
        if (!found) throw ModelError("dc_gain_check: unknown boundary node '" + input.node + "'");
    } else {
        HeatLoad extra;
        extra.node = input.node;
        extra.kind = LoadKind::constant;
        extra.power = delta;
        perturbed.loads.push_back(extra);
    }
    const Network pnet(perturbed);
    const SteadyResult after = solve_steady_newton(pnet, T_bar, options);

    DcGainCheck chk;
    chk.node_ids = sys.node_ids;
    chk.linear = x;
    for (std::size_t k = 0; k < sys.nodes.size(); ++k)
        chk.nonlinear.push_back((after.temperatures[sys.nodes[k]] - T_bar[sys.nodes[k]]) / delta);
    return chk;
}

// Fractional frequency instability of an optical cavity: |dnu/nu| = |dL/L| =
// |CTE| * gain * input amplitude.
inline double cavity_instability(double gain_at_f, double input_amplitude, double cte) {
    return std::abs(cte) * gain_at_f * input_amplitude;
}

// Logarithmic frequency grid (default span per the transfer-analysis band).
inline std::vector<double> log_frequency_grid(double fmin = 1e-6, double fmax = 1e-1,
                                              int points = 61) {
    std::vector<double> f;
    if (points <= 1) { f.push_back(fmin); return f; }
    const double step = std::log10(fmax / fmin) / (points - 1);
    for (int i = 0; i < points; ++i) f.push_back(fmin * std::pow(10.0, step * i));
    return f;
}

}  // namespace thermnet
