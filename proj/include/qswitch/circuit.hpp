#pragma once

// Multilevel model of a qubit--tunable-coupler--qubit superconducting circuit.
//
// Conventions used throughout the library:
//   * frequencies are linear and in GHz, times in ns, rates in 1/ns;
//   * Hamiltonian matrix entries are angular (rad/ns), i.e. every builder
//     multiplies by 2*pi so that phases are 2*pi*f*t (GHz*ns = 1);
//   * the three elements are ordered (Q1, Q2, C) and the product state
//     |n1 n2 nc> sits at index n1*levels^2 + n2*levels + nc.

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qswitch/errors.hpp"

namespace qswitch {

using complexd = std::complex<double>;
using Operator = Eigen::MatrixXcd;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

enum class Site { Q1 = 0, Q2 = 1, Coupler = 2 };

inline const char* site_name(Site s) {
    switch (s) {
        case Site::Q1: return "Q1";
        case Site::Q2: return "Q2";
        default: return "C";
    }
}

// Device parameters. Defaults are the measured values of the three-element
// chip the simulator models; coherence times are the idling-point values.
// Use std::numeric_limits<double>::infinity() to disable a decay channel.
struct CircuitParams {
    double omega1 = 4.670;   // Q1 idle transition frequency (GHz)
    double omega2 = 4.619;   // Q2 transition frequency (GHz), fixed
    double omegac = 6.183;   // coupler transition frequency (GHz)
    double alpha1 = -0.222;  // anharmonicities (GHz, negative for transmons)
    double alpha2 = -0.242;
    double alphac = -0.378;
    double g1 = 0.110;       // Q1-coupler coupling (GHz)
    double g2 = 0.105;       // Q2-coupler coupling (GHz)
    double g12 = 0.0075;     // direct Q1-Q2 coupling (GHz)
    double t1_q1 = 6510.0;   // relaxation times (ns)
    double t1_q2 = 6580.0;
    double t1_c = 4060.0;
    double t2_q1 = 540.0;    // Ramsey dephasing times (ns)
    double t2_q2 = 7430.0;
    double t2_c = 270.0;
    int levels = 3;          // truncation per element (>= 2)

    void validate() const {
        if (levels < 2)
            throw invalid_dimension_error("CircuitParams: levels must be >= 2");
        if (g1 < 0.0 || g2 < 0.0 || g12 < 0.0)
            throw invalid_state_error("CircuitParams: coupling magnitudes must be >= 0");
        check_coherence("Q1", t1_q1, t2_q1);
        check_coherence("Q2", t1_q2, t2_q2);
        check_coherence("C", t1_c, t2_c);
    }

    // Copy with the tunable frequencies replaced (Q2 is fixed-frequency).
    CircuitParams with_frequencies(double new_omega1, double new_omegac) const {
        CircuitParams p = *this;
        p.omega1 = new_omega1;
        p.omegac = new_omegac;
        return p;
    }

    int dim() const { return levels * levels * levels; }

private:
    static void check_coherence(const char* who, double t1, double t2) {
        if (t1 <= 0.0 || t2 <= 0.0)
            throw invalid_coherence_error(std::string("CircuitParams: nonpositive coherence time for ") + who);
        if (std::isfinite(t2) && t2 > 2.0 * t1 + 1e-12)
            throw invalid_coherence_error(std::string("CircuitParams: T2 > 2*T1 for ") + who);
    }
};

inline int basis_index(int n1, int n2, int nc, int levels) {
    return (n1 * levels + n2) * levels + nc;
}

// Labels "|n1 n2 nc>" in basis order.
inline std::vector<std::string> product_basis_labels(int levels) {
    std::vector<std::string> labels;
    labels.reserve(static_cast<std::size_t>(levels) * levels * levels);
    for (int n1 = 0; n1 < levels; ++n1)
        for (int n2 = 0; n2 < levels; ++n2)
            for (int nc = 0; nc < levels; ++nc)
                labels.push_back("|" + std::to_string(n1) + " " + std::to_string(n2) + " " +
                                 std::to_string(nc) + ">");
    return labels;
}

// d x d lowering operator, entries sqrt(k) at (k-1, k).
inline Operator annihilation_op(int d) {
    if (d < 2)
        throw invalid_dimension_error("annihilation_op: dimension must be >= 2");
    Operator a = Operator::Zero(d, d);
    for (int k = 1; k < d; ++k)
        a(k - 1, k) = std::sqrt(static_cast<double>(k));
    return a;
}

inline Operator number_op(int d) {
    if (d < 2)
        throw invalid_dimension_error("number_op: dimension must be >= 2");
    Operator n = Operator::Zero(d, d);
    for (int k = 0; k < d; ++k)
        n(k, k) = static_cast<double>(k);
    return n;
}

// Kronecker embedding I (x) ... (x) op (x) ... (x) I with site order (Q1, Q2, C).
inline Operator embed_op(const Operator& op, Site site, int levels) {
    if (levels < 2)
        throw invalid_dimension_error("embed_op: levels must be >= 2");
    if (op.rows() != levels || op.cols() != levels)
        throw invalid_dimension_error("embed_op: operator dimension does not match levels");
    const int dim = levels * levels * levels;
    Operator out = Operator::Zero(dim, dim);
    const int s = static_cast<int>(site);
    for (int row = 0; row < dim; ++row) {
        int idx[3] = {row / (levels * levels), (row / levels) % levels, row % levels};
        for (int k = 0; k < levels; ++k) {
            const complexd v = op(idx[s], k);
            if (v == complexd(0.0, 0.0)) continue;
            int cidx[3] = {idx[0], idx[1], idx[2]};
            cidx[s] = k;
            out(row, basis_index(cidx[0], cidx[1], cidx[2], levels)) += v;
        }
    }
    return out;
}

// Sum over elements of 2*pi*[w_i n_i + (alpha_i/2) a_i^dag a_i^dag a_i a_i];
// diagonal in the product basis.
inline Operator bare_hamiltonian(const CircuitParams& p) {
    p.validate();
    const int L = p.levels;
    const double w[3] = {p.omega1, p.omega2, p.omegac};
    const double al[3] = {p.alpha1, p.alpha2, p.alphac};
    Operator h = Operator::Zero(p.dim(), p.dim());
    for (int n1 = 0; n1 < L; ++n1)
        for (int n2 = 0; n2 < L; ++n2)
            for (int nc = 0; nc < L; ++nc) {
                const double n[3] = {static_cast<double>(n1), static_cast<double>(n2),
                                     static_cast<double>(nc)};
                double e = 0.0;
                for (int s = 0; s < 3; ++s)
                    e += w[s] * n[s] + 0.5 * al[s] * n[s] * (n[s] - 1.0);
                h(basis_index(n1, n2, nc, L), basis_index(n1, n2, nc, L)) = two_pi * e;
            }
    return h;
}

// 2*pi*[g1 (a1^dag ac + h.c.) + g2 (a2^dag ac + h.c.) + g12 (a1^dag a2 + h.c.)].
// Hermitian, conserves the total excitation number.
inline Operator interaction_hamiltonian(const CircuitParams& p) {
    p.validate();
    const int L = p.levels;
    const Operator a = annihilation_op(L);
    const Operator a1 = embed_op(a, Site::Q1, L);
    const Operator a2 = embed_op(a, Site::Q2, L);
    const Operator ac = embed_op(a, Site::Coupler, L);
    Operator v = p.g1 * (a1.adjoint() * ac) + p.g2 * (a2.adjoint() * ac) +
                 p.g12 * (a1.adjoint() * a2);
    v += v.adjoint().eval();
    return two_pi * v;
}

inline Operator full_hamiltonian(const CircuitParams& p) {
    return bare_hamiltonian(p) + interaction_hamiltonian(p);
}

// n1 + n2 + nc on the product space.
inline Operator total_number_op(int levels) {
    const Operator n = number_op(levels);
    return embed_op(n, Site::Q1, levels) + embed_op(n, Site::Q2, levels) +
           embed_op(n, Site::Coupler, levels);
}

// |n1 n2 nc><n1 n2 nc|
inline Operator projector(int n1, int n2, int nc, int levels) {
    const int dim = levels * levels * levels;
    Operator pr = Operator::Zero(dim, dim);
    pr(basis_index(n1, n2, nc, levels), basis_index(n1, n2, nc, levels)) = 1.0;
    return pr;
}

// Projector onto qubit occupation (n1, n2), traced over the coupler:
// sum_nc |n1 n2 nc><n1 n2 nc|.
inline Operator qubit_marginal_projector(int n1, int n2, int levels) {
    const int dim = levels * levels * levels;
    Operator pr = Operator::Zero(dim, dim);
    for (int nc = 0; nc < levels; ++nc) {
        const int i = basis_index(n1, n2, nc, levels);
        pr(i, i) = 1.0;
    }
    return pr;
}

inline double hermiticity_defect(const Operator& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const Operator& m, double rel_tol = 1e-12) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return hermiticity_defect(m) <= rel_tol * scale;
}

inline Eigen::VectorXcd basis_ket(int index, int dim) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
    v(index) = 1.0;
    return v;
}

} // namespace qswitch
