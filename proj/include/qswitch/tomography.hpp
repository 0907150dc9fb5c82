#pragma once

// Two-qubit state and process tomography with readout-error correction.
//
// Conventions:
//   * two-qubit kets use the Kronecker order |q1 q2> -> index 2*n1 + n2;
//   * probability 4-vectors for readout follow the transfer-matrix order
//     (p00, p10, p01, p11) -- q1 is the fast bit there;
//   * the process matrix chi is 16x16 in the unnormalized Pauli basis
//     ordered (II, IX, IY, IZ, XI, ..., ZZ), E(rho) = sum chi_mn P_m rho P_n,
//     so Tr(chi) = 1 for trace-preserving channels.

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "qswitch/circuit.hpp"
#include "qswitch/errors.hpp"

namespace qswitch {

using Matrix2 = Eigen::Matrix2cd;
using Matrix4 = Eigen::Matrix4cd;
using Vector4 = Eigen::Vector4cd;

namespace pauli {

inline Matrix2 i2() { return Matrix2::Identity(); }
inline Matrix2 x() {
    Matrix2 m;
    m << 0, 1, 1, 0;
    return m;
}
inline Matrix2 y() {
    Matrix2 m;
    m << complexd(0, 0), complexd(0, -1), complexd(0, 1), complexd(0, 0);
    return m;
}
inline Matrix2 z() {
    Matrix2 m;
    m << 1, 0, 0, -1;
    return m;
}

inline Matrix2 single(int k) {
    switch (k) {
        case 0: return i2();
        case 1: return x();
        case 2: return y();
        default: return z();
    }
}

// m = 4*m1 + m2 in the (II, IX, ..., ZZ) ordering
inline Matrix4 two_qubit(int m) {
    const Matrix2 a = single((m / 4) % 4);
    const Matrix2 b = single(m % 4);
    Matrix4 out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return out;
}

} // namespace pauli

// --- input states ------------------------------------------------------------

// {|0>, |1>, (|0>+|1>)/sqrt2, (|0>+i|1>)/sqrt2}
inline Eigen::Vector2cd single_qubit_input_state(int s) {
    Eigen::Vector2cd v;
    const double r = 1.0 / std::sqrt(2.0);
    switch (s) {
        case 0: v << 1, 0; break;
        case 1: v << 0, 1; break;
        case 2: v << r, r; break;
        case 3: v << r, complexd(0, r); break;
        default: throw invalid_state_error("single_qubit_input_state: index out of range");
    }
    return v;
}

// 16 product states, id = 4*s1 + s2 (s1 on Q1).
inline std::array<Vector4, 16> prepare_input_states() {
    std::array<Vector4, 16> states;
    for (int s1 = 0; s1 < 4; ++s1)
        for (int s2 = 0; s2 < 4; ++s2) {
            const Eigen::Vector2cd a = single_qubit_input_state(s1);
            const Eigen::Vector2cd b = single_qubit_input_state(s2);
            Vector4 v;
            v << a(0) * b(0), a(0) * b(1), a(1) * b(0), a(1) * b(1);
            states[static_cast<std::size_t>(4 * s1 + s2)] = v;
        }
    return states;
}

// --- measurement bookkeeping --------------------------------------------------

// columns are the +1 and -1 eigenvectors of the chosen Pauli axis
inline Matrix2 measurement_eigenbasis(char axis) {
    const double r = 1.0 / std::sqrt(2.0);
    Matrix2 m;
    switch (axis) {
        case 'x': m << r, r, r, -r; break;
        case 'y': m << r, r, complexd(0, r), complexd(0, -r); break;
        case 'z': m = Matrix2::Identity(); break;
        default: throw invalid_state_error(std::string("unknown measurement axis: ") + axis);
    }
    return m;
}

// outcome order (p00, p10, p01, p11): q1 is the fast bit
inline int readout_index(int s1, int s2) { return s1 + 2 * s2; }

// Born probabilities of the four two-qubit outcomes in readout order.
inline Eigen::Vector4d exact_outcome_populations(const Matrix4& rho, char b1, char b2) {
    const Matrix2 r1 = measurement_eigenbasis(b1);
    const Matrix2 r2 = measurement_eigenbasis(b2);
    Eigen::Vector4d out;
    for (int s1 = 0; s1 < 2; ++s1)
        for (int s2 = 0; s2 < 2; ++s2) {
            Vector4 v;
            const Eigen::Vector2cd a = r1.col(s1), b = r2.col(s2);
            v << a(0) * b(0), a(0) * b(1), a(1) * b(0), a(1) * b(1);
            out(readout_index(s1, s2)) = std::max(0.0, (v.adjoint() * rho * v)(0, 0).real());
        }
    const double s = out.sum();
    if (s > 0.0) out /= s;
    return out;
}

struct TomographyRecord {
    int input_state_id = 0;       // 0..15
    std::string basis = "zz";     // pair from {x,y,z}, first char on Q1
    Eigen::Vector4d populations;  // readout order (p00, p10, p01, p11)
    long shots = 0;               // 0 means exact populations

    void validate() const {
        if (input_state_id < 0 || input_state_id > 15)
            throw invalid_state_error("TomographyRecord: input_state_id out of range");
        if (basis.size() != 2 || std::string("xyz").find(basis[0]) == std::string::npos ||
            std::string("xyz").find(basis[1]) == std::string::npos)
            throw invalid_state_error("TomographyRecord: bad basis tag");
        if (std::abs(populations.sum() - 1.0) > 1e-9)
            throw invalid_state_error("TomographyRecord: populations do not sum to 1");
    }
};

// --- physicality projection -----------------------------------------------------

// Frobenius-nearest PSD matrix with the given trace: eigenvalues are
// projected onto the simplex {l_i >= 0, sum l_i = trace_target}.
inline Eigen::MatrixXcd project_to_psd_with_trace(const Eigen::MatrixXcd& a,
                                                  double trace_target) {
    const Eigen::MatrixXcd h = 0.5 * (a + a.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    Eigen::VectorXd lam = es.eigenvalues();
    const int d = static_cast<int>(lam.size());

    // Euclidean projection of the spectrum onto the simplex
    std::vector<double> sorted(lam.data(), lam.data() + d);
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double cum = 0.0, mu = 0.0;
    int k = 0;
    for (int i = 0; i < d; ++i) {
        cum += sorted[static_cast<std::size_t>(i)];
        const double trial = (cum - trace_target) / (i + 1);
        if (sorted[static_cast<std::size_t>(i)] - trial > 0.0) {
            mu = trial;
            k = i + 1;
        }
    }
    (void)k;
    Eigen::VectorXd lam_proj(d);
    for (int i = 0; i < d; ++i) lam_proj(i) = std::max(lam(i) - mu, 0.0);
    return es.eigenvectors() * lam_proj.asDiagonal() * es.eigenvectors().adjoint();
}

inline Eigen::MatrixXcd project_to_physical(const Eigen::MatrixXcd& rho) {
    return project_to_psd_with_trace(rho, 1.0);
}

// --- state tomography -----------------------------------------------------------

// Linear inversion rho = (1/4) sum <P_m> P_m from the nine basis-pair records
// of one input state, followed by the physicality projection.
inline Matrix4 state_tomography(const std::vector<TomographyRecord>& records) {
    std::array<std::array<bool, 3>, 3> seen{};
    std::array<std::array<Eigen::Vector4d, 3>, 3> pops{};
    auto axis_of = [](char c) { return c == 'x' ? 0 : (c == 'y' ? 1 : 2); };
    for (const auto& r : records) {
        r.validate();
        seen[static_cast<std::size_t>(axis_of(r.basis[0]))]
            [static_cast<std::size_t>(axis_of(r.basis[1]))] = true;
        pops[static_cast<std::size_t>(axis_of(r.basis[0]))]
            [static_cast<std::size_t>(axis_of(r.basis[1]))] = r.populations;
    }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (!seen[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)])
                throw incomplete_data_error("state_tomography: missing basis pair");

    auto corr = [&](int b1, int b2) {  // <sigma_b1 sigma_b2>
        const Eigen::Vector4d& p = pops[static_cast<std::size_t>(b1)][static_cast<std::size_t>(b2)];
        double e = 0.0;
        for (int s1 = 0; s1 < 2; ++s1)
            for (int s2 = 0; s2 < 2; ++s2)
                e += ((s1 ^ s2) ? -1.0 : 1.0) * p(readout_index(s1, s2));
        return e;
    };
    auto single1 = [&](int b1) {  // <sigma_b1 (x) I>, averaged over partner bases
        double e = 0.0;
        for (int b2 = 0; b2 < 3; ++b2) {
            const Eigen::Vector4d& p =
                pops[static_cast<std::size_t>(b1)][static_cast<std::size_t>(b2)];
            for (int s1 = 0; s1 < 2; ++s1)
                for (int s2 = 0; s2 < 2; ++s2)
                    e += (s1 ? -1.0 : 1.0) * p(readout_index(s1, s2));
        }
        return e / 3.0;
    };
    auto single2 = [&](int b2) {
        double e = 0.0;
        for (int b1 = 0; b1 < 3; ++b1) {
            const Eigen::Vector4d& p =
                pops[static_cast<std::size_t>(b1)][static_cast<std::size_t>(b2)];
            for (int s1 = 0; s1 < 2; ++s1)
                for (int s2 = 0; s2 < 2; ++s2)
                    e += (s2 ? -1.0 : 1.0) * p(readout_index(s1, s2));
        }
        return e / 3.0;
    };

    Matrix4 rho = Matrix4::Zero();
    for (int m1 = 0; m1 < 4; ++m1)
        for (int m2 = 0; m2 < 4; ++m2) {
            double ev;
            if (m1 == 0 && m2 == 0)
                ev = 1.0;
            else if (m1 == 0)
                ev = single2(m2 - 1);
            else if (m2 == 0)
                ev = single1(m1 - 1);
            else
                ev = corr(m1 - 1, m2 - 1);
            rho += 0.25 * ev * pauli::two_qubit(4 * m1 + m2);
        }
    return project_to_physical(rho);
}

// --- process tomography -----------------------------------------------------------

struct ProcessMatrix {
    Eigen::MatrixXcd chi;  // 16x16
    std::string label;
    double trace() const { return chi.trace().real(); }
};

// chi from the channel outputs on the 16 standard product inputs (ordered as
// prepare_input_states) via superoperator inversion; Hermitized and projected
// to PSD.
inline ProcessMatrix process_tomography_from_outputs(const std::array<Matrix4, 16>& outputs,
                                                     std::string label = {}) {
    const auto inputs = prepare_input_states();
    Eigen::MatrixXcd vin(16, 16), vout(16, 16);
    for (int k = 0; k < 16; ++k) {
        const Matrix4 rin = inputs[static_cast<std::size_t>(k)] *
                            inputs[static_cast<std::size_t>(k)].adjoint();
        const Matrix4& rout = outputs[static_cast<std::size_t>(k)];
        vin.col(k) = Eigen::Map<const Eigen::VectorXcd>(rin.data(), 16);
        vout.col(k) = Eigen::Map<const Eigen::VectorXcd>(rout.data(), 16);
    }
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(vin);
    if (!lu.isInvertible())
        throw rank_error("process_tomography: input states are not informationally complete");
    const Eigen::MatrixXcd sup = vout * lu.inverse();

    Eigen::MatrixXcd chi(16, 16);
    for (int m = 0; m < 16; ++m)
        for (int n = 0; n < 16; ++n) {
            // basis element P_n^T (x) P_m has squared norm 16
            const Matrix4 pm = pauli::two_qubit(m);
            const Matrix4 pn = pauli::two_qubit(n);
            complexd acc(0.0, 0.0);
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j)
                    for (int k = 0; k < 4; ++k)
                        for (int l = 0; l < 4; ++l)
                            acc += std::conj(pn(j, i) * pm(k, l)) * sup(4 * i + k, 4 * j + l);
            chi(m, n) = acc / 16.0;
        }
    chi = 0.5 * (chi + chi.adjoint()).eval();
    const double target = std::max(chi.trace().real(), 0.0);
    ProcessMatrix out;
    out.chi = project_to_psd_with_trace(chi, target);
    out.label = std::move(label);
    return out;
}

inline ProcessMatrix process_tomography(const std::function<Matrix4(const Matrix4&)>& channel,
                                        std::string label = {}) {
    const auto inputs = prepare_input_states();
    std::array<Matrix4, 16> outputs;
    for (int k = 0; k < 16; ++k)
        outputs[static_cast<std::size_t>(k)] =
            channel(inputs[static_cast<std::size_t>(k)] *
                    inputs[static_cast<std::size_t>(k)].adjoint());
    return process_tomography_from_outputs(outputs, std::move(label));
}

// chi of a unitary channel from its Pauli expansion U = sum a_m P_m,
// chi_mn = a_m conj(a_n).
inline ProcessMatrix chi_from_unitary(const Matrix4& u, std::string label = {}) {
    Eigen::VectorXcd a(16);
    for (int m = 0; m < 16; ++m) a(m) = (pauli::two_qubit(m).adjoint() * u).trace() / 4.0;
    ProcessMatrix out;
    out.chi = a * a.adjoint();
    out.label = std::move(label);
    return out;
}

inline Matrix4 ideal_iswap() {
    Matrix4 u = Matrix4::Zero();
    u(0, 0) = 1.0;
    u(3, 3) = 1.0;
    u(1, 2) = complexd(0.0, 1.0);
    u(2, 1) = complexd(0.0, 1.0);
    return u;
}

// F = Re Tr(chi_a chi_b), clamped to [0, 1]. Both inputs must be Hermitian
// with traces within 1e-3 of 1 (the trace-preserving convention); violations
// raise convention_error. When clamping removes more than 1e-6 the excess is
// reported through clamped_excess.
inline double process_fidelity(const ProcessMatrix& a, const ProcessMatrix& b,
                               double* clamped_excess = nullptr) {
    auto check = [](const ProcessMatrix& x) {
        if (x.chi.rows() != 16 || x.chi.cols() != 16)
            throw convention_error("process_fidelity: chi must be 16x16");
        if (hermiticity_defect(x.chi) > 1e-8)
            throw convention_error("process_fidelity: chi is not Hermitian");
        if (std::abs(x.trace() - 1.0) > 1e-3)
            throw convention_error("process_fidelity: chi trace differs from 1 beyond 1e-3");
    };
    check(a);
    check(b);
    const double f = (a.chi * b.chi).trace().real();
    const double clamped = std::clamp(f, 0.0, 1.0);
    if (clamped_excess) *clamped_excess = std::abs(f - clamped);
    return clamped;
}

// --- readout transfer matrix -------------------------------------------------------

struct ReadoutMatrix {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();  // columns: true state, order (00,10,01,11)

    void validate() const {
        for (int c = 0; c < 4; ++c) {
            double sum = 0.0;
            for (int r = 0; r < 4; ++r) {
                if (m(r, c) < -1e-12 || m(r, c) > 1.0 + 1e-12)
                    throw invalid_state_error("ReadoutMatrix: entry outside [0, 1]");
                sum += m(r, c);
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw invalid_state_error("ReadoutMatrix: column does not sum to 1");
        }
    }

    double condition_number() const {
        Eigen::JacobiSVD<Eigen::Matrix4d> svd(m);
        const double smin = svd.singularValues().minCoeff();
        if (smin <= 0.0) return std::numeric_limits<double>::infinity();
        return svd.singularValues().maxCoeff() / smin;
    }
};

// Independent per-qubit assignment errors: eN_up = P(read 1 | prepared 0),
// eN_down = P(read 0 | prepared 1).
inline ReadoutMatrix readout_from_flip_probs(double e1_up, double e1_down, double e2_up,
                                             double e2_down) {
    for (double e : {e1_up, e1_down, e2_up, e2_down})
        if (e < 0.0 || e > 1.0)
            throw invalid_state_error("readout_from_flip_probs: probability outside [0, 1]");
    auto conf = [](double eu, double ed) {
        Eigen::Matrix2d c;
        c << 1.0 - eu, ed, eu, 1.0 - ed;  // c(meas, true)
        return c;
    };
    const Eigen::Matrix2d c1 = conf(e1_up, e1_down);
    const Eigen::Matrix2d c2 = conf(e2_up, e2_down);
    ReadoutMatrix out;
    for (int m1 = 0; m1 < 2; ++m1)
        for (int m2 = 0; m2 < 2; ++m2)
            for (int t1 = 0; t1 < 2; ++t1)
                for (int t2 = 0; t2 < 2; ++t2)
                    out.m(readout_index(m1, m2), readout_index(t1, t2)) =
                        c1(m1, t1) * c2(m2, t2);
    return out;
}

inline Eigen::Vector4d readout_apply(const ReadoutMatrix& m, const Eigen::Vector4d& p_true) {
    m.validate();
    if (std::abs(p_true.sum() - 1.0) > 1e-9)
        throw invalid_state_error("readout_apply: populations do not sum to 1");
    return m.m * p_true;
}

// Euclidean projection onto the probability simplex.
inline Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
    const int d = static_cast<int>(v.size());
    std::vector<double> sorted(v.data(), v.data() + d);
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double cum = 0.0, mu = 0.0;
    for (int i = 0; i < d; ++i) {
        cum += sorted[static_cast<std::size_t>(i)];
        const double trial = (cum - 1.0) / (i + 1);
        if (sorted[static_cast<std::size_t>(i)] - trial > 0.0) mu = trial;
    }
    Eigen::VectorXd out(d);
    for (int i = 0; i < d; ++i) out(i) = std::max(v(i) - mu, 0.0);
    return out;
}

inline Eigen::Vector4d readout_correct(const ReadoutMatrix& m, const Eigen::Vector4d& p_meas,
                                       bool project = false) {
    m.validate();
    Eigen::FullPivLU<Eigen::Matrix4d> lu(m.m);
    if (!lu.isInvertible())
        throw singular_matrix_error("readout_correct: transfer matrix is singular");
    Eigen::Vector4d p = lu.solve(p_meas);
    if (project) p = project_to_simplex(p);
    return p;
}

// --- synthetic measurements ----------------------------------------------------------

// Multinomial draw via a chain of binomials.
inline Eigen::Vector4d multinomial_frequencies(const Eigen::Vector4d& probs, long shots,
                                               std::mt19937_64& rng) {
    Eigen::Vector4d counts = Eigen::Vector4d::Zero();
    long remaining = shots;
    double mass = 1.0;
    for (int k = 0; k < 3 && remaining > 0; ++k) {
        const double p = std::clamp(probs(k) / std::max(mass, 1e-300), 0.0, 1.0);
        std::binomial_distribution<long> bin(remaining, p);
        const long c = bin(rng);
        counts(k) = static_cast<double>(c);
        remaining -= c;
        mass -= probs(k);
    }
    counts(3) = static_cast<double>(remaining);
    return counts / static_cast<double>(shots);
}

// Samples shot outcomes from the Born probabilities of (rho, basis) and then
// smears the empirical frequencies with the transfer matrix M. Deterministic
// for a given seed.
inline TomographyRecord simulate_measurement(const Matrix4& rho, char b1, char b2, long shots,
                                             const ReadoutMatrix& m, std::uint64_t seed,
                                             int input_state_id = 0) {
    if (shots < 1) throw invalid_state_error("simulate_measurement: shots must be >= 1");
    const Eigen::Vector4d born = exact_outcome_populations(rho, b1, b2);
    std::mt19937_64 rng(seed);
    const Eigen::Vector4d freq = multinomial_frequencies(born, shots, rng);
    TomographyRecord rec;
    rec.input_state_id = input_state_id;
    rec.basis = {b1, b2};
    rec.populations = m.m * freq;
    rec.shots = shots;
    return rec;
}

inline const std::array<std::pair<char, char>, 9>& basis_pairs() {
    static const std::array<std::pair<char, char>, 9> pairs = {{{'x', 'x'},
                                                                {'x', 'y'},
                                                                {'x', 'z'},
                                                                {'y', 'x'},
                                                                {'y', 'y'},
                                                                {'y', 'z'},
                                                                {'z', 'x'},
                                                                {'z', 'y'},
                                                                {'z', 'z'}}};
    return pairs;
}

} // namespace qswitch
