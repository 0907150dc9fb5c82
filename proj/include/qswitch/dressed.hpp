#pragma once

// Eigenbasis bookkeeping: each eigenvector of a circuit Hamiltonian is
// assigned the product-state label it overlaps most with. Preparation and
// measurement act on these dressed states -- the idealization of adiabatic
// flux ramps plus calibrated dispersive readout, which address the actual
// eigenstates rather than the bare product basis.

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "qswitch/circuit.hpp"
#include "qswitch/errors.hpp"

namespace qswitch {

class DressedBasis {
public:
    DressedBasis(const Operator& h, int levels) : levels_(levels) {
        const int dim = levels * levels * levels;
        if (h.rows() != dim)
            throw invalid_dimension_error("DressedBasis: Hamiltonian/levels mismatch");
        if (!is_hermitian(h, 1e-10))
            throw invalid_state_error("DressedBasis: Hamiltonian is not Hermitian");
        Eigen::SelfAdjointEigenSolver<Operator> es(h);
        evals_ = es.eigenvalues();
        evecs_ = es.eigenvectors();
        column_of_.assign(dim, -1);
        min_overlap_ = 1.0;

        // greedy global assignment on the overlap matrix
        Eigen::MatrixXd w = evecs_.cwiseAbs2();  // w(bare, k)
        std::vector<bool> bare_done(dim, false), col_done(dim, false);
        for (int pass = 0; pass < dim; ++pass) {
            int bi = -1, bk = -1;
            double best = -1.0;
            for (int b = 0; b < dim; ++b) {
                if (bare_done[b]) continue;
                for (int k = 0; k < dim; ++k) {
                    if (col_done[k]) continue;
                    if (w(b, k) > best) {
                        best = w(b, k);
                        bi = b;
                        bk = k;
                    }
                }
            }
            column_of_[bi] = bk;
            bare_done[bi] = true;
            col_done[bk] = true;
            min_overlap_ = std::min(min_overlap_, best);
        }
    }

    int levels() const { return levels_; }
    int dim() const { return static_cast<int>(evals_.size()); }
    double min_assigned_overlap() const { return min_overlap_; }

    int column_of(int n1, int n2, int nc) const {
        return column_of_[basis_index(n1, n2, nc, levels_)];
    }

    Eigen::VectorXcd state(int n1, int n2, int nc) const {
        return evecs_.col(column_of(n1, n2, nc));
    }

    // eigenvalue of the labeled state (rad/ns)
    double energy(int n1, int n2, int nc) const { return evals_(column_of(n1, n2, nc)); }

    // transition frequency from the dressed ground state, in GHz
    double transition_ghz(int n1, int n2, int nc) const {
        return (energy(n1, n2, nc) - energy(0, 0, 0)) / two_pi;
    }

    Operator projector(int n1, int n2, int nc) const {
        const Eigen::VectorXcd s = state(n1, n2, nc);
        return s * s.adjoint();
    }

    // sum over coupler levels of the dressed projectors with qubit labels (n1, n2)
    Operator qubit_marginal_projector(int n1, int n2) const {
        Operator pr = Operator::Zero(dim(), dim());
        for (int nc = 0; nc < levels_; ++nc) pr += projector(n1, n2, nc);
        return pr;
    }

    double marginal_population(int n1, int n2, const Eigen::VectorXcd& psi) const {
        double p = 0.0;
        for (int nc = 0; nc < levels_; ++nc)
            p += std::norm(state(n1, n2, nc).dot(psi));
        return p;
    }

    // Ideal pi pulse on one element: exp(-i pi X/2) on the dressed 0<->1
    // levels of that site, identity on levels >= 2.
    Operator pi_pulse(Site site) const {
        const int d = dim();
        Operator u = Operator::Zero(d, d);
        const complexd minus_i(0.0, -1.0);
        for (int n1 = 0; n1 < levels_; ++n1)
            for (int n2 = 0; n2 < levels_; ++n2)
                for (int nc = 0; nc < levels_; ++nc) {
                    int lbl[3] = {n1, n2, nc};
                    const int s = static_cast<int>(site);
                    if (lbl[s] == 0) {
                        int partner[3] = {n1, n2, nc};
                        partner[s] = 1;
                        const Eigen::VectorXcd a = state(n1, n2, nc);
                        const Eigen::VectorXcd b = state(partner[0], partner[1], partner[2]);
                        u += minus_i * (b * a.adjoint() + a * b.adjoint());
                    } else if (lbl[s] >= 2) {
                        const Eigen::VectorXcd a = state(n1, n2, nc);
                        u += a * a.adjoint();
                    }
                }
        return u;
    }

    const Eigen::VectorXd& energies() const { return evals_; }
    const Operator& vectors() const { return evecs_; }

private:
    int levels_;
    Eigen::VectorXd evals_;
    Operator evecs_;
    std::vector<int> column_of_;
    double min_overlap_;
};

} // namespace qswitch
