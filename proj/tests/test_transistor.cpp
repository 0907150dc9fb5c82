#include "doctest.h"

#include "qswitch/transistor.hpp"

#include <cmath>

using namespace qswitch;

TEST_CASE("open-gate population run") {
    CircuitParams p;
    const TransistorRun run = run_transistor(p, true, false);

    // transfer happens near pi/(2 g~): consistent with the run's own fit...
    const double implied = 0.5 / (1e-3 * run.fit.frequency_mhz);
    CHECK(std::abs(run.transfer_time_ns - implied) / implied < 0.02);
    // ...and lands near the measured 59 ns with the default parameters
    CHECK(std::abs(run.transfer_time_ns - 59.0) / 59.0 < 0.15);
    CHECK(run.peak_p10 > 0.95);

    SUBCASE("excitation returns at twice the transfer time (recurrence)") {
        TransistorScheduleConfig cfg;
        cfg.coupler_state = 1;
        cfg.interaction_ns = 2.0 * run.transfer_time_ns + 1.0;
        const PulseSchedule s = build_transistor_schedule(p, cfg);
        const PopulationTrace back =
            run_schedule(s, p, {2.0 * run.transfer_time_ns}, false);
        CHECK(back.p01(0) > 0.98);
    }
}

TEST_CASE("closed-gate population run") {
    CircuitParams p;
    const TransistorRun run = run_transistor(p, false, false, 100.0, 201);
    CHECK(run.min_p01 > 0.99);
    CHECK(run.peak_p10 < 0.05);
}

TEST_CASE("decoherence lowers the transfer peak") {
    CircuitParams p;
    const TransistorRun clean = run_transistor(p, true, false, 80.0, 81);
    const TransistorRun noisy = run_transistor(p, true, true, 80.0, 81);
    CHECK(noisy.peak_p10 < clean.peak_p10);
    CHECK(noisy.peak_p10 > 0.5);
}

TEST_CASE("noiseless gate process tomography") {
    CircuitParams p;

    SUBCASE("open gate is an iSWAP") {
        GateQptOptions opt;
        opt.open_gate = true;
        const GateQpt qpt = simulate_gate_qpt(p, opt);
        CHECK(qpt.fidelity >= 0.99);
        CHECK(qpt.chi.trace() == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(qpt.gate_ns > 40.0);
        CHECK(qpt.gate_ns < 70.0);
    }

    SUBCASE("closed gate is the identity") {
        GateQptOptions opt;
        opt.open_gate = false;
        const GateQpt qpt = simulate_gate_qpt(p, opt);
        CHECK(qpt.fidelity >= 0.995);
    }
}

TEST_CASE("decoherent gate process tomography") {
    CircuitParams p;
    GateQptOptions opt;
    opt.open_gate = true;
    opt.noisy = true;
    const GateQpt qpt = simulate_gate_qpt(p, opt);
    CHECK(qpt.fidelity < qpt.noiseless_fidelity);
    CHECK(qpt.fidelity > 0.85);
    CHECK(qpt.fidelity < 0.97);
}

TEST_CASE("shots and readout errors round-trip through the reconstruction") {
    CircuitParams p;
    GateQptOptions opt;
    opt.open_gate = true;
    opt.shots = 3000;
    opt.seed = 2024;
    opt.readout = readout_from_flip_probs(0.02, 0.03, 0.02, 0.03);
    opt.correct_readout = true;
    opt.bootstrap_resamples = 40;
    const GateQpt qpt = simulate_gate_qpt(p, opt);
    // sampling noise only; fidelity stays close to the exact value
    CHECK(qpt.fidelity > qpt.noiseless_fidelity - 0.05);
    CHECK(qpt.bootstrap_sigma > 0.0);
    CHECK(qpt.bootstrap_sigma < 0.05);
    CHECK(qpt.records.size() == 16 * 9);

    // reconstruction from the records alone reproduces the result
    const GateQpt again = reconstruct_qpt(qpt.records, opt.readout, true, qpt.phi1, qpt.phi2,
                                          qpt.target_label);
    CHECK(again.fidelity == doctest::Approx(qpt.fidelity).epsilon(1e-12));

    // an input state without data is rejected
    std::vector<TomographyRecord> partial;
    for (const auto& rec : qpt.records)
        if (rec.input_state_id != 5) partial.push_back(rec);
    CHECK_THROWS_AS(
        reconstruct_qpt(partial, opt.readout, true, qpt.phi1, qpt.phi2, qpt.target_label),
        incomplete_data_error);
}
