#pragma once

// Closed-form effective qubit-qubit couplings in the dispersive regime and
// the coupler "off point" search. The detuning convention is
// Delta = omega - omega_c with omega the common qubit frequency during the
// interaction; the coupler sits above the qubits, so operating Delta < 0.

#include <cmath>
#include <functional>
#include <limits>
#include <utility>

#include "qswitch/circuit.hpp"
#include "qswitch/errors.hpp"

namespace qswitch {

// Detunings between the bare and the anharmonicity-shifted transitions,
// evaluated at the stored circuit frequencies (omega = omega1, with
// omega~_i = omega_i + alpha_i).
struct Detunings {
    double delta;               // omega1 - omegac
    double delta_tilde;         // omega1 - (omegac + alphac)
    double delta_tilde_prime;   // (omega1 + alpha1) - omegac
    double delta_double_tilde;  // (omega1 + alpha1) - (omegac + alphac)
};

inline Detunings detunings(const CircuitParams& p) {
    return Detunings{
        p.omega1 - p.omegac,
        p.omega1 - (p.omegac + p.alphac),
        (p.omega1 + p.alpha1) - p.omegac,
        (p.omega1 + p.alpha1) - (p.omegac + p.alphac),
    };
}

enum class EffModel { TwoLevel, ThreeLevel };

struct EffectiveCoupling {
    double value;       // g_eff (GHz, signed)
    int coupler_state;  // n in {0, 1}
    EffModel model;
    double delta;       // Delta used (GHz)
};

namespace detail {
inline void check_coupler_state(int n) {
    if (n != 0 && n != 1)
        throw invalid_state_error("coupler state must be 0 or 1");
}
inline constexpr double singularity_eps = 1e-12;
} // namespace detail

// Two-level-system result: g12 + (-1)^n g1 g2 / Delta.
inline EffectiveCoupling g_eff_two_level(const CircuitParams& p, double delta, int n) {
    detail::check_coupler_state(n);
    if (std::abs(delta) < detail::singularity_eps)
        throw resonance_singularity_error("g_eff_two_level: Delta = 0");
    const double sign = (n == 0) ? 1.0 : -1.0;
    return {p.g12 + sign * p.g1 * p.g2 / delta, n, EffModel::TwoLevel, delta};
}

// Three-level result: g12 + g1 g2 (2/(Delta - delta_{n1} alphac) - 1/Delta).
// For n = 0 this evaluates the same expression as the two-level formula, so
// the two models agree identically there.
inline EffectiveCoupling g_eff_three_level(const CircuitParams& p, double delta, int n) {
    detail::check_coupler_state(n);
    if (std::abs(delta) < detail::singularity_eps)
        throw resonance_singularity_error("g_eff_three_level: Delta = 0");
    double value;
    if (n == 0) {
        value = p.g12 + p.g1 * p.g2 / delta;
    } else {
        const double d_shift = delta - p.alphac;
        if (std::abs(d_shift) < detail::singularity_eps)
            throw resonance_singularity_error("g_eff_three_level: Delta = alphac");
        value = p.g12 + p.g1 * p.g2 * (2.0 / d_shift - 1.0 / delta);
    }
    return {value, n, EffModel::ThreeLevel, delta};
}

// Reduced single-excitation Hamiltonian on the ordered basis {|10>, |01>}:
// 2*pi*g_eff*[[0,1],[1,0]] (rad/ns). Eigenvalues are +-2*pi*g_eff with
// eigenstates (|01> +- |10>)/sqrt(2). The state-dependent energy shift that
// accompanies the exchange term promotes no population transfer and is left
// out; the full model carries its physical effect.
inline Operator effective_two_qubit_hamiltonian(const CircuitParams& p, double delta, int n) {
    const double g = g_eff_three_level(p, delta, n).value;
    Operator h(2, 2);
    h << 0.0, two_pi * g, two_pi * g, 0.0;
    return h;
}

namespace detail {

// Bracketed root finding: bisection to coarse_tol, then secant polish to tol.
// Assumes f is continuous with f(a)*f(b) < 0.
inline double bracketed_root(const std::function<double(double)>& f, double a, double b,
                             double coarse_tol, double tol) {
    double fa = f(a);
    double fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0.0)
        throw no_root_error("bracketed_root: no sign change on interval");
    while (b - a > coarse_tol) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (fm == 0.0) return m;
        if (fa * fm < 0.0) {
            b = m;
            fb = fm;
        } else {
            a = m;
            fa = fm;
        }
    }
    double x0 = a, x1 = b, f0 = fa, f1 = fb;
    for (int it = 0; it < 100; ++it) {
        const double denom = f1 - f0;
        if (denom == 0.0) break;
        double x2 = x1 - f1 * (x1 - x0) / denom;
        if (x2 < a || x2 > b) x2 = 0.5 * (a + b);  // secant left the bracket
        const double f2 = f(x2);
        if (std::abs(x2 - x1) < tol || f2 == 0.0) return x2;
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
    }
    return x1;
}

} // namespace detail

// Finds Delta in [interval.first, interval.second] where the three-level
// effective coupling for coupler state n vanishes. Tolerance 1e-9 GHz.
inline double find_off_point(const CircuitParams& p, int n,
                             std::pair<double, double> interval) {
    detail::check_coupler_state(n);
    const double a = interval.first;
    const double b = interval.second;
    if (!(a < b))
        throw invalid_interval_error("find_off_point: empty interval");
    auto inside = [&](double x) { return x > a && x < b; };
    if (inside(0.0) || (n == 1 && inside(p.alphac)))
        throw invalid_interval_error("find_off_point: singularity inside interval");
    auto g = [&](double d) { return g_eff_three_level(p, d, n).value; };
    return detail::bracketed_root(g, a, b, 1e-6, 1e-9);
}

// Coupler frequency realizing the off point for coupler state n, with the
// interaction resonance taken at omega2 (Q1 is the tuned qubit).
inline double off_point_coupler_frequency(const CircuitParams& p, int n,
                                          std::pair<double, double> interval = {-2.6, -1.2}) {
    return p.omega2 - find_off_point(p, n, interval);
}

} // namespace qswitch
