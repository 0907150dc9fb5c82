#include "doctest.h"

#include "qswitch/tomography.hpp"

#include <random>

using namespace qswitch;

namespace {

Matrix4 haar_unitary(std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix4 g;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) g(i, j) = complexd(normal(rng), normal(rng));
    Eigen::HouseholderQR<Matrix4> qr(g);
    Matrix4 q = qr.householderQ();
    const Matrix4 r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < 4; ++i) q.col(i) *= r(i, i) / std::abs(r(i, i));
    return q;
}

std::vector<TomographyRecord> exact_records(const Matrix4& rho, int input_id = 0) {
    std::vector<TomographyRecord> recs;
    for (const auto& [b1, b2] : basis_pairs()) {
        TomographyRecord r;
        r.input_state_id = input_id;
        r.basis = {b1, b2};
        r.populations = exact_outcome_populations(rho, b1, b2);
        r.shots = 0;
        recs.push_back(r);
    }
    return recs;
}

} // namespace

TEST_CASE("input state set") {
    const auto states = prepare_input_states();
    CHECK((states[0] - Vector4(1, 0, 0, 0)).norm() < 1e-15);  // |00>
    for (const auto& s : states) CHECK(s.norm() == doctest::Approx(1.0).epsilon(1e-12));

    // informational completeness: the 16 projectors span the operator space
    Eigen::MatrixXcd vin(16, 16);
    for (int k = 0; k < 16; ++k) {
        const Matrix4 pr = states[static_cast<std::size_t>(k)] *
                           states[static_cast<std::size_t>(k)].adjoint();
        vin.col(k) = Eigen::Map<const Eigen::VectorXcd>(pr.data(), 16);
    }
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(vin);
    CHECK(lu.rank() == 16);

    // the 4 single-qubit states form a rank-4 operator family
    Eigen::MatrixXcd v1(4, 4);
    for (int s = 0; s < 4; ++s) {
        const Eigen::Vector2cd v = single_qubit_input_state(s);
        const Matrix2 pr = v * v.adjoint();
        v1.col(s) = Eigen::Map<const Eigen::VectorXcd>(pr.data(), 4);
    }
    CHECK(Eigen::FullPivLU<Eigen::MatrixXcd>(v1).rank() == 4);
}

TEST_CASE("physicality projection") {
    SUBCASE("PSD input is unchanged") {
        Matrix4 rho = Matrix4::Zero();
        rho(0, 0) = 0.6;
        rho(3, 3) = 0.4;
        rho(0, 3) = rho(3, 0) = 0.3;
        const Eigen::MatrixXcd proj = project_to_physical(rho);
        CHECK((proj - rho).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("diag(1.1, -0.1) projects to diag(1, 0)") {
        Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(2, 2);
        a(0, 0) = 1.1;
        a(1, 1) = -0.1;
        const Eigen::MatrixXcd proj = project_to_physical(a);
        CHECK(proj(0, 0).real() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(proj(1, 1)) < 1e-12);
    }
    SUBCASE("output is PSD with unit trace") {
        std::mt19937_64 rng(3);
        std::normal_distribution<double> n(0.0, 1.0);
        Matrix4 a;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) a(i, j) = complexd(n(rng), n(rng));
        a = 0.5 * (a + a.adjoint()).eval();
        const Eigen::MatrixXcd proj = project_to_physical(a);
        CHECK(proj.trace().real() == doctest::Approx(1.0).epsilon(1e-10));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(proj);
        CHECK(es.eigenvalues().minCoeff() > -1e-12);
    }
}

TEST_CASE("state tomography") {
    SUBCASE("|00> from exact expectations") {
        Matrix4 rho = Matrix4::Zero();
        rho(0, 0) = 1.0;
        const Matrix4 rec = state_tomography(exact_records(rho));
        CHECK((rec - rho).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("Bell state round trip") {
        Vector4 bell;
        bell << 1.0 / std::sqrt(2.0), 0, 0, 1.0 / std::sqrt(2.0);
        const Matrix4 rho = bell * bell.adjoint();
        const Matrix4 rec = state_tomography(exact_records(rho));
        const double fid = (bell.adjoint() * rec * bell)(0, 0).real();
        CHECK(fid == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("finite shots keep unit trace after projection") {
        Vector4 plus;
        plus << 0.5, 0.5, 0.5, 0.5;
        const Matrix4 rho = plus * plus.adjoint();
        std::vector<TomographyRecord> recs;
        int k = 0;
        for (const auto& [b1, b2] : basis_pairs())
            recs.push_back(simulate_measurement(rho, b1, b2, 1000, ReadoutMatrix{}, 99 + k++));
        const Matrix4 rec = state_tomography(recs);
        CHECK(rec.trace().real() == doctest::Approx(1.0).epsilon(1e-12));
        Eigen::SelfAdjointEigenSolver<Matrix4> es(rec);
        CHECK(es.eigenvalues().minCoeff() > -1e-12);
    }
    SUBCASE("missing basis raises") {
        Matrix4 rho = Matrix4::Zero();
        rho(0, 0) = 1.0;
        auto recs = exact_records(rho);
        recs.pop_back();
        CHECK_THROWS_AS(state_tomography(recs), incomplete_data_error);
    }
}

TEST_CASE("process tomography of named channels") {
    SUBCASE("identity channel") {
        const ProcessMatrix chi = process_tomography([](const Matrix4& r) { return r; });
        CHECK(chi.chi(0, 0).real() == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(chi.chi.cwiseAbs().sum() == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(chi.trace() == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("ideal iSWAP chi has the (II, XX, YY, ZZ) block") {
        const Matrix4 u = ideal_iswap();
        const ProcessMatrix chi =
            process_tomography([&](const Matrix4& r) { return Matrix4(u * r * u.adjoint()); });
        const ProcessMatrix analytic = chi_from_unitary(u);
        CHECK((chi.chi - analytic.chi).cwiseAbs().maxCoeff() < 1e-10);
        // expansion coefficients (1/2, i/2, i/2, 1/2) on II, XX, YY, ZZ
        CHECK(analytic.chi(0, 0).real() == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(analytic.chi(5, 5).real() == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(analytic.chi(10, 10).real() == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(analytic.chi(15, 15).real() == doctest::Approx(0.25).epsilon(1e-12));
        CHECK(std::abs(analytic.chi(0, 5) - complexd(0.0, -0.25)) < 1e-12);
        CHECK(std::abs(analytic.chi(5, 15) - complexd(0.0, 0.25)) < 1e-12);
    }
    SUBCASE("depolarizing channel gives diagonal chi") {
        const double prob = 0.2;
        const ProcessMatrix chi = process_tomography([&](const Matrix4& r) {
            return Matrix4((1.0 - prob) * r +
                           prob * 0.25 * r.trace() * Matrix4::Identity());
        });
        for (int m = 0; m < 16; ++m)
            for (int n = 0; n < 16; ++n) {
                const double expected =
                    (m != n) ? 0.0 : (m == 0 ? (1.0 - prob) + prob / 16.0 : prob / 16.0);
                CHECK(std::abs(chi.chi(m, n) - expected) < 1e-9);
            }
    }
}

TEST_CASE("process fidelity") {
    const ProcessMatrix iswap = chi_from_unitary(ideal_iswap());
    SUBCASE("self-fidelity is 1") {
        CHECK(process_fidelity(iswap, iswap) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("symmetric in its arguments") {
        const ProcessMatrix ident = chi_from_unitary(Matrix4::Identity());
        CHECK(process_fidelity(iswap, ident) ==
              doctest::Approx(process_fidelity(ident, iswap)).epsilon(1e-12));
    }
    SUBCASE("convention violations are rejected") {
        ProcessMatrix bad = iswap;
        bad.chi *= 0.9;
        CHECK_THROWS_AS(process_fidelity(bad, iswap), convention_error);
    }
}

TEST_CASE("QPT round trip on random unitaries") {
    std::mt19937_64 rng(12345);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix4 u = haar_unitary(rng);
        const ProcessMatrix chi =
            process_tomography([&](const Matrix4& r) { return Matrix4(u * r * u.adjoint()); });
        const double f = process_fidelity(chi, chi_from_unitary(u));
        CHECK(f > 0.999);
    }
}

TEST_CASE("readout transfer matrix") {
    SUBCASE("identity for zero error rates") {
        const ReadoutMatrix m = readout_from_flip_probs(0, 0, 0, 0);
        CHECK((m.m - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("column sums and entries for the 3%/5% model") {
        const ReadoutMatrix m = readout_from_flip_probs(0.03, 0.05, 0.03, 0.05);
        m.validate();
        // P(read 10 | true 00) = P(q1 flips up) * P(q2 stays)
        CHECK(m.m(readout_index(1, 0), readout_index(0, 0)) ==
              doctest::Approx(0.03 * 0.97).epsilon(1e-12));
        CHECK(m.m(readout_index(0, 0), readout_index(1, 1)) ==
              doctest::Approx(0.05 * 0.05).epsilon(1e-12));
    }
    SUBCASE("apply then correct is the identity") {
        const ReadoutMatrix m = readout_from_flip_probs(0.03, 0.05, 0.02, 0.04);
        const Eigen::Vector4d p(0.1, 0.2, 0.3, 0.4);
        const Eigen::Vector4d rec = readout_correct(m, readout_apply(m, p));
        CHECK((rec - p).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("calibration round trip from synthetic preparations") {
        const ReadoutMatrix truth = readout_from_flip_probs(0.03, 0.03, 0.05, 0.05);
        ReadoutMatrix measured;
        for (int t1 = 0; t1 < 2; ++t1)
            for (int t2 = 0; t2 < 2; ++t2) {
                Eigen::Vector4d prep = Eigen::Vector4d::Zero();
                prep(readout_index(t1, t2)) = 1.0;
                measured.m.col(readout_index(t1, t2)) = readout_apply(truth, prep);
            }
        CHECK((measured.m - truth.m).cwiseAbs().maxCoeff() < 1e-12);
        const Eigen::Vector4d mixed(0.25, 0.25, 0.3, 0.2);
        const Eigen::Vector4d rec = readout_correct(measured, readout_apply(truth, mixed));
        CHECK((rec - mixed).cwiseAbs().maxCoeff() < 1e-9);
    }
    SUBCASE("singular matrix is rejected") {
        ReadoutMatrix m = readout_from_flip_probs(0.5, 0.5, 0.5, 0.5);
        const Eigen::Vector4d p(0.25, 0.25, 0.25, 0.25);
        CHECK_THROWS_AS(readout_correct(m, p), singular_matrix_error);
    }
}

TEST_CASE("simplex projection") {
    Eigen::VectorXd v(4);
    v << 0.5, 0.6, -0.2, 0.1;
    const Eigen::VectorXd p = project_to_simplex(v);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.minCoeff() >= 0.0);
    Eigen::VectorXd q(4);
    q << 0.1, 0.2, 0.3, 0.4;
    CHECK((project_to_simplex(q) - q).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("synthetic measurements") {
    Matrix4 rho = Matrix4::Zero();
    rho(0, 0) = 1.0;

    SUBCASE("z measurements of |00> report 00 for every shot") {
        const TomographyRecord rec =
            simulate_measurement(rho, 'z', 'z', 500, ReadoutMatrix{}, 42);
        CHECK(rec.populations(readout_index(0, 0)) == doctest::Approx(1.0));
    }
    SUBCASE("same seed reproduces the record") {
        Vector4 plus;
        plus << 0.5, 0.5, 0.5, 0.5;
        const Matrix4 r2 = plus * plus.adjoint();
        const TomographyRecord a = simulate_measurement(r2, 'x', 'y', 777, ReadoutMatrix{}, 5);
        const TomographyRecord b = simulate_measurement(r2, 'x', 'y', 777, ReadoutMatrix{}, 5);
        CHECK((a.populations - b.populations).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("large-shot frequencies approach Born values") {
        Vector4 psi;
        psi << std::sqrt(0.4), 0, 0, std::sqrt(0.6);
        const Matrix4 r2 = psi * psi.adjoint();
        const TomographyRecord rec =
            simulate_measurement(r2, 'z', 'z', 1000000, ReadoutMatrix{}, 11);
        const double sigma = std::sqrt(0.4 * 0.6 / 1e6);
        CHECK(std::abs(rec.populations(readout_index(0, 0)) - 0.4) < 3.0 * sigma);
        CHECK(std::abs(rec.populations(readout_index(1, 1)) - 0.6) < 3.0 * sigma);
    }
}
