#pragma once

// Time evolution: exact unitary propagation through one eigendecomposition,
// and Lindblad master-equation integration
//   drho/dt = -i[H, rho] + sum_k rate_k (L_k rho L_k^dag - {L_k^dag L_k, rho}/2)
// with an adaptive Dormand-Prince 4(5) stepper. The stepper works in the
// interaction picture of the (diagonal) bare part of H -- an exact change of
// variables, no rotating-wave approximation -- which removes the fast bare
// phases from the integrated equations; all inputs and outputs are lab-frame.

#include <algorithm>
#include <array>
#include <cmath>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "qswitch/circuit.hpp"
#include "qswitch/errors.hpp"

namespace qswitch {

struct CollapseChannel {
    Operator op;  // collapse operator (lab frame, full space)
    double rate;  // Lindblad rate (1/ns), >= 0
};

// --- unitary propagation -------------------------------------------------

class EigenPropagator {
public:
    explicit EigenPropagator(const Operator& h) {
        if (!is_hermitian(h, 1e-10))
            throw invalid_state_error("EigenPropagator: Hamiltonian is not Hermitian");
        Eigen::SelfAdjointEigenSolver<Operator> es(h);
        evals_ = es.eigenvalues();
        evecs_ = es.eigenvectors();
    }

    Eigen::VectorXcd propagate(const Eigen::VectorXcd& psi0, double t) const {
        if (psi0.size() != evals_.size())
            throw invalid_dimension_error("EigenPropagator: state dimension mismatch");
        Eigen::VectorXcd c = evecs_.adjoint() * psi0;
        for (Eigen::Index k = 0; k < c.size(); ++k)
            c(k) *= std::polar(1.0, -evals_(k) * t);
        return evecs_ * c;
    }

    Operator unitary(double t) const {
        Eigen::VectorXcd phases(evals_.size());
        for (Eigen::Index k = 0; k < evals_.size(); ++k)
            phases(k) = std::polar(1.0, -evals_(k) * t);
        return evecs_ * phases.asDiagonal() * evecs_.adjoint();
    }

    const Eigen::VectorXd& eigenvalues() const { return evals_; }
    const Operator& eigenvectors() const { return evecs_; }

private:
    Eigen::VectorXd evals_;
    Operator evecs_;
};

inline Eigen::VectorXcd evolve_unitary(const Operator& h, const Eigen::VectorXcd& psi0,
                                       double t) {
    const double n0 = psi0.norm();
    if (std::abs(n0 - 1.0) > 1e-10)
        throw invalid_state_error("evolve_unitary: state is not normalized");
    return EigenPropagator(h).propagate(psi0, t);
}

// --- collapse channels ---------------------------------------------------

// Maps per-element (T1, T2) to Lindblad channels: relaxation L = a at rate
// 1/T1 and pure dephasing L = a^dag a at rate 1/T2 - 1/(2 T1). An infinite
// time disables the corresponding channel. Note that with this normalization
// the 0-1 coherence of an element decays at rate 1/(2 T1) + gamma_phi/2.
inline std::vector<CollapseChannel> collapse_channels_from_coherence(const CircuitParams& p) {
    p.validate();
    const int L = p.levels;
    std::vector<CollapseChannel> channels;
    const Site sites[3] = {Site::Q1, Site::Q2, Site::Coupler};
    const double t1s[3] = {p.t1_q1, p.t1_q2, p.t1_c};
    const double t2s[3] = {p.t2_q1, p.t2_q2, p.t2_c};
    for (int s = 0; s < 3; ++s) {
        const double g1 = std::isfinite(t1s[s]) ? 1.0 / t1s[s] : 0.0;
        if (g1 > 0.0)
            channels.push_back({embed_op(annihilation_op(L), sites[s], L), g1});
        const double gphi = (std::isfinite(t2s[s]) ? 1.0 / t2s[s] : 0.0) - 0.5 * g1;
        if (gphi < -1e-15)
            throw invalid_coherence_error("collapse_channels_from_coherence: T2 > 2*T1");
        if (gphi > 0.0)
            channels.push_back({embed_op(number_op(L), sites[s], L), gphi});
    }
    return channels;
}

// Pure dephasing of the coupler with rate Gamma, defined such that the
// coupler 0-1 coherence <0|rho_c|1> decays as exp(-Gamma t). The master
// equation's bracket normalization is ambiguous by a factor of two; this
// helper pins the observable convention instead.
inline CollapseChannel coupler_dephasing_channel(const CircuitParams& p, double gamma) {
    if (gamma < 0.0)
        throw invalid_state_error("coupler_dephasing_channel: negative rate");
    return {embed_op(number_op(p.levels), Site::Coupler, p.levels), 2.0 * gamma};
}

// --- state validation ----------------------------------------------------

inline void check_density_matrix(const Operator& rho, double eig_tol = 1e-9) {
    if (rho.rows() != rho.cols())
        throw invalid_state_error("density matrix is not square");
    if (!is_hermitian(rho, 1e-9))
        throw invalid_state_error("density matrix is not Hermitian");
    if (std::abs(rho.trace().real() - 1.0) > 1e-9 || std::abs(rho.trace().imag()) > 1e-9)
        throw invalid_state_error("density matrix trace is not 1");
    Eigen::SelfAdjointEigenSolver<Operator> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -eig_tol)
        throw invalid_state_error("density matrix has a negative eigenvalue");
}

inline Operator density_from_pure(const Eigen::VectorXcd& psi) {
    return psi * psi.adjoint();
}

// --- Lindblad integration (adaptive RK45) --------------------------------

namespace detail {

struct SparseEntries {
    std::vector<std::tuple<int, int, complexd>> items;
};

inline SparseEntries sparsify(const Operator& m, double cutoff = 0.0) {
    SparseEntries s;
    for (int j = 0; j < m.rows(); ++j)
        for (int k = 0; k < m.cols(); ++k)
            if (std::abs(m(j, k)) > cutoff) s.items.emplace_back(j, k, m(j, k));
    return s;
}

// Right-hand side of the interaction-picture master equation. The diagonal
// part D of H defines the frame; V = H - D enters with phases
// e^{i(D_j - D_k) t}, and so do the off-diagonal collapse entries.
class LindbladRhs {
public:
    LindbladRhs(const Operator& h, const std::vector<CollapseChannel>& channels)
        : dim_(static_cast<int>(h.rows())), diag_(h.real().diagonal()) {
        Operator v = h;
        v.diagonal().setZero();
        v_entries_ = sparsify(v, 1e-15).items;
        for (const auto& ch : channels) {
            if (ch.rate < 0.0)
                throw invalid_state_error("evolve_lindblad: negative collapse rate");
            if (ch.op.rows() != dim_ || ch.op.cols() != dim_)
                throw invalid_dimension_error("evolve_lindblad: channel dimension mismatch");
            if (ch.rate == 0.0) continue;
            Channel c;
            c.rate = ch.rate;
            c.entries = sparsify(ch.op, 1e-15).items;
            c.ldl_diag = (ch.op.adjoint() * ch.op).real().diagonal();
            channels_.push_back(std::move(c));
        }
    }

    int dim() const { return dim_; }

    void operator()(double t, const Operator& rho, Operator& drho) const {
        // -i [V_I(t), rho]
        Operator vi = Operator::Zero(dim_, dim_);
        for (const auto& [j, k, val] : v_entries_)
            vi(j, k) = val * std::polar(1.0, (diag_(j) - diag_(k)) * t);
        drho.noalias() = complexd(0.0, -1.0) * (vi * rho - rho * vi);
        // dissipators
        for (const auto& ch : channels_) {
            for (const auto& [r, c, v] : ch.entries) {
                const complexd phase_rc = std::polar(1.0, (diag_(r) - diag_(c)) * t);
                for (const auto& [r2, c2, v2] : ch.entries) {
                    const complexd phase2 = std::polar(1.0, (diag_(r2) - diag_(c2)) * t);
                    drho(r, r2) += ch.rate * v * phase_rc * std::conj(v2 * phase2) * rho(c, c2);
                }
            }
            for (int j = 0; j < dim_; ++j)
                for (int k = 0; k < dim_; ++k)
                    drho(j, k) -= 0.5 * ch.rate * (ch.ldl_diag(j) + ch.ldl_diag(k)) * rho(j, k);
        }
    }

    // Lab frame <-> interaction picture (elementwise phases).
    Operator to_frame(const Operator& rho_lab, double t) const {
        return apply_phases(rho_lab, t, +1.0);
    }
    Operator to_lab(const Operator& rho_i, double t) const {
        return apply_phases(rho_i, t, -1.0);
    }

private:
    struct Channel {
        double rate;
        std::vector<std::tuple<int, int, complexd>> entries;
        Eigen::VectorXd ldl_diag;
    };

    Operator apply_phases(const Operator& rho, double t, double sign) const {
        Operator out(dim_, dim_);
        for (int j = 0; j < dim_; ++j)
            for (int k = 0; k < dim_; ++k)
                out(j, k) = rho(j, k) * std::polar(1.0, sign * (diag_(j) - diag_(k)) * t);
        return out;
    }

    int dim_;
    Eigen::VectorXd diag_;
    std::vector<std::tuple<int, int, complexd>> v_entries_;
    std::vector<Channel> channels_;
};

} // namespace detail

// Integrates the master equation and returns lab-frame states at t_grid.
// Relative step tolerance 1e-9, absolute 1e-10; trace drift stays below 1e-7
// over trajectories at the scales this library targets.
inline std::vector<Operator> evolve_lindblad(const Operator& h, const Operator& rho0,
                                             const std::vector<CollapseChannel>& channels,
                                             const std::vector<double>& t_grid,
                                             double rel_tol = 1e-9, double abs_tol = 1e-10) {
    if (!is_hermitian(h, 1e-10))
        throw invalid_state_error("evolve_lindblad: Hamiltonian is not Hermitian");
    check_density_matrix(rho0);
    if (rho0.rows() != h.rows())
        throw invalid_dimension_error("evolve_lindblad: state dimension mismatch");
    if (t_grid.empty())
        throw invalid_state_error("evolve_lindblad: empty time grid");
    for (std::size_t i = 0; i + 1 < t_grid.size(); ++i)
        if (!(t_grid[i] < t_grid[i + 1]))
            throw invalid_state_error("evolve_lindblad: time grid must be ascending");
    if (t_grid.front() < 0.0)
        throw invalid_state_error("evolve_lindblad: negative time");

    // Dormand-Prince 5(4) tableau.
    static const double A[7][6] = {
        {},
        {1.0 / 5},
        {3.0 / 40, 9.0 / 40},
        {44.0 / 45, -56.0 / 15, 32.0 / 9},
        {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
        {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
        {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
    };
    static const double C[7] = {0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
    static const double B5[7] = {35.0 / 384,     0.0,  500.0 / 1113, 125.0 / 192,
                                 -2187.0 / 6784, 11.0 / 84, 0.0};
    static const double B4[7] = {5179.0 / 57600,  0.0,       7571.0 / 16695, 393.0 / 640,
                                 -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

    detail::LindbladRhs rhs(h, channels);
    const int d = rhs.dim();

    std::vector<Operator> out;
    out.reserve(t_grid.size());

    Operator y = rhs.to_frame(rho0, 0.0);
    double t = 0.0;
    double hstep = 1e-3;
    std::array<Operator, 7> k;
    for (auto& m : k) m = Operator::Zero(d, d);
    Operator ytmp(d, d), y5(d, d), y4(d, d);

    std::size_t next = 0;
    while (next < t_grid.size() && t_grid[next] <= 1e-15) {
        out.push_back(rho0);
        ++next;
    }

    while (next < t_grid.size()) {
        const double t_target = t_grid[next];
        double hcur = std::min(hstep, t_target - t);
        rhs(t, y, k[0]);
        for (;;) {
            for (int s = 1; s < 7; ++s) {
                ytmp = y;
                for (int j = 0; j < s; ++j)
                    if (A[s][j] != 0.0) ytmp += (hcur * A[s][j]) * k[j];
                rhs(t + C[s] * hcur, ytmp, k[s]);
            }
            y5 = y;
            y4 = y;
            for (int s = 0; s < 7; ++s) {
                if (B5[s] != 0.0) y5 += (hcur * B5[s]) * k[s];
                if (B4[s] != 0.0) y4 += (hcur * B4[s]) * k[s];
            }
            const double err = (y5 - y4).norm();
            const double scale = abs_tol + rel_tol * std::max(y.norm(), y5.norm());
            if (err <= scale || hcur <= 1e-12) {
                t += hcur;
                y = y5;
                const double grow = (err > 0.0) ? 0.9 * std::pow(scale / err, 0.2) : 5.0;
                hstep = hcur * std::clamp(grow, 0.2, 5.0);
                break;
            }
            hcur *= std::clamp(0.9 * std::pow(scale / err, 0.2), 0.2, 0.9);
        }
        if (t >= t_target - 1e-12) {
            out.push_back(rhs.to_lab(y, t));
            ++next;
        } else {
            hstep = std::min(hstep, t_target - t);
        }
    }
    return out;
}

// --- Lindblad superoperator and exact segment stepping --------------------

// Column-stacking vec convention: vec(A X B) = (B^T kron A) vec(X).
inline Operator kron(const Operator& a, const Operator& b) {
    Operator out(a.rows() * b.rows(), a.cols() * b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Operator liouvillian(const Operator& h, const std::vector<CollapseChannel>& channels) {
    const int d = static_cast<int>(h.rows());
    const Operator id = Operator::Identity(d, d);
    Operator sup = complexd(0.0, -1.0) * (kron(id, h) - kron(h.transpose(), id));
    for (const auto& ch : channels) {
        if (ch.rate < 0.0)
            throw invalid_state_error("liouvillian: negative collapse rate");
        if (ch.rate == 0.0) continue;
        const Operator ldl = ch.op.adjoint() * ch.op;
        sup += ch.rate * (kron(ch.op.conjugate(), ch.op) -
                          0.5 * kron(id, ldl) - 0.5 * kron(ldl.transpose(), id));
    }
    return sup;
}

// Exact propagator over a fixed step: rho(t+dt) = unvec(exp(L dt) vec(rho)).
// Used for long decoherent segments where only a fixed grid is needed; agrees
// with evolve_lindblad to integrator tolerance.
class LindbladPropagator {
public:
    LindbladPropagator(const Operator& h, const std::vector<CollapseChannel>& channels,
                       double dt)
        : dim_(static_cast<int>(h.rows())) {
        prop_ = (liouvillian(h, channels) * dt).exp();
    }

    Operator apply(const Operator& rho) const {
        Eigen::Map<const Eigen::VectorXcd> v(rho.data(), rho.size());
        Eigen::VectorXcd w = prop_ * v;
        return Eigen::Map<const Operator>(w.data(), dim_, dim_);
    }

private:
    int dim_;
    Operator prop_;
};

// --- observables -----------------------------------------------------------

inline double population(const Operator& projector, const Operator& rho) {
    return (projector.transpose().cwiseProduct(rho)).sum().real();
}

inline double population(const Operator& projector, const Eigen::VectorXcd& psi) {
    return (psi.adjoint() * projector * psi)(0, 0).real();
}

// Expectation table Tr(P rho) for a trajectory; result[i][j] is projector j
// at time point i.
inline std::vector<std::vector<double>> populations(const std::vector<Operator>& traj,
                                                    const std::vector<Operator>& projectors) {
    std::vector<std::vector<double>> table;
    table.reserve(traj.size());
    for (const auto& rho : traj) {
        std::vector<double> row;
        row.reserve(projectors.size());
        for (const auto& pr : projectors) row.push_back(population(pr, rho));
        table.push_back(std::move(row));
    }
    return table;
}

} // namespace qswitch
