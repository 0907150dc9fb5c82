#pragma once

// Measurement protocols: the three-segment transistor pulse sequence, chevron
// scans, oscillation fitting, and the coupling-vs-detuning extraction.
//
// Calibration emulation. The detuning axis of coupling_vs_detuning is made of
// measured quantities, as in the lab: the qubit frequency is the dressed
// |010> transition calibrated once at the idle configuration, the coupler
// set point is the dressed |001> transition at the interaction configuration,
// and Q1 is tuned per point to the dressed resonance (minimum exchange gap).
// Comparing the closed forms at bare detunings instead misplaces every point
// by the dispersive repulsion (tens of MHz near small |Delta|).

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "qswitch/circuit.hpp"
#include "qswitch/dressed.hpp"
#include "qswitch/dynamics.hpp"
#include "qswitch/effective.hpp"
#include "qswitch/errors.hpp"
#include "qswitch/fit.hpp"

namespace qswitch {

// --- schedules -------------------------------------------------------------

struct PulseSegment {
    double duration_ns;
    double omega1;               // GHz
    double omegac;               // GHz
    std::vector<Site> pi_pulses; // applied instantaneously at segment start
};

struct PulseSchedule {
    std::vector<PulseSegment> segments;
    std::size_t swept_segment = 1;  // segment whose duration the time axis samples
};

struct TransistorScheduleConfig {
    int coupler_state = 1;          // initial coupler state: 0 closed, 1 open
    double interaction_omegac = std::numeric_limits<double>::quiet_NaN();
    double interaction_ns = 120.0;
    double idle_ns = 5.0;
    double idle_detuning = 0.050;   // Q1 idle offset above Q2 (GHz)
};

// Idle configuration: Q1 parked above Q2 and the coupler at the off point of
// the coupler state the sequence operates in. The ground-state off point does
// not switch off the excited-coupler exchange, so sequences with an excited
// coupler idle at their own off point.
inline std::pair<double, double> idle_frequencies(const CircuitParams& p, int coupler_state = 0,
                                                  double idle_detuning = 0.050) {
    return {p.omega2 + idle_detuning, off_point_coupler_frequency(p, coupler_state)};
}

// Three segments: idle with state preparation, resonant interaction, idle for
// measurement. The closed gate keeps the coupler at its ground-state off
// point throughout; the open gate adds a coupler pi pulse and moves the
// coupler to the requested interaction frequency.
inline PulseSchedule build_transistor_schedule(const CircuitParams& p,
                                               const TransistorScheduleConfig& cfg) {
    if (cfg.coupler_state != 0 && cfg.coupler_state != 1)
        throw invalid_state_error("build_transistor_schedule: coupler state must be 0 or 1");
    if (cfg.interaction_ns <= 0.0 || cfg.idle_ns <= 0.0)
        throw invalid_state_error("build_transistor_schedule: durations must be positive");
    const auto [w1_idle, wc_idle] = idle_frequencies(p, cfg.coupler_state, cfg.idle_detuning);
    double wc_int = cfg.interaction_omegac;
    if (std::isnan(wc_int)) wc_int = (cfg.coupler_state == 1) ? p.omegac : wc_idle;

    PulseSchedule s;
    std::vector<Site> preps{Site::Q2};
    if (cfg.coupler_state == 1) preps.push_back(Site::Coupler);
    s.segments.push_back({cfg.idle_ns, w1_idle, wc_idle, preps});
    s.segments.push_back({cfg.interaction_ns, p.omega2, wc_int, {}});
    s.segments.push_back({cfg.idle_ns, w1_idle, wc_idle, {}});
    s.swept_segment = 1;
    return s;
}

// --- schedule execution ------------------------------------------------------

// Two views of the measured two-qubit populations, both traced over the
// coupler: `labels` are the exact dressed-label marginals plus the leakage
// (any qubit label at level >= 2, summed independently, so the five entries
// partition unity), `binned` is what binary readout reports (each qubit
// classified 1 unless its dressed label is 0, four entries summing to one).
struct PopulationRow {
    std::array<double, 5> labels;  // p00, p01, p10, p11, leakage
    std::array<double, 4> binned;  // p00, p01, p10, p11
};

struct PopulationTrace {
    std::vector<double> t_ns;  // swept-segment duration
    std::vector<PopulationRow> rows;
    double p01(std::size_t i) const { return rows[i].binned[1]; }
    double p10(std::size_t i) const { return rows[i].binned[2]; }
};

namespace detail {

template <typename State>
PopulationRow marginals(const DressedBasis& basis, const State& state) {
    const int L = basis.levels();
    Eigen::MatrixXd grid = Eigen::MatrixXd::Zero(L, L);
    for (int n1 = 0; n1 < L; ++n1)
        for (int n2 = 0; n2 < L; ++n2) {
            if constexpr (std::is_same_v<State, Eigen::VectorXcd>) {
                grid(n1, n2) = basis.marginal_population(n1, n2, state);
            } else {
                grid(n1, n2) = population(basis.qubit_marginal_projector(n1, n2), state);
            }
        }
    PopulationRow row{};
    row.labels[0] = grid(0, 0);
    row.labels[1] = grid(0, 1);
    row.labels[2] = grid(1, 0);
    row.labels[3] = grid(1, 1);
    row.labels[4] = 0.0;  // population with any qubit label at level >= 2
    for (int n1 = 0; n1 < L; ++n1)
        for (int n2 = 0; n2 < L; ++n2)
            if (n1 >= 2 || n2 >= 2) row.labels[4] += grid(n1, n2);
    for (int s1 = 0; s1 < 2; ++s1)
        for (int s2 = 0; s2 < 2; ++s2) {
            double acc = 0.0;
            for (int n1 = 0; n1 < L; ++n1)
                for (int n2 = 0; n2 < L; ++n2)
                    if ((n1 > 0 ? 1 : 0) == s1 && (n2 > 0 ? 1 : 0) == s2) acc += grid(n1, n2);
            row.binned[static_cast<std::size_t>(2 * s1 + s2)] = acc;
        }
    return row;
}

} // namespace detail

// Runs the schedule for every requested duration of the swept segment and
// reports the two-qubit populations seen by binary readout at the end of the
// sequence: dressed-state marginals of the measurement (idle) configuration,
// traced over the coupler. Segments after the swept one are applied in full.
inline PopulationTrace run_schedule(const PulseSchedule& s, const CircuitParams& p,
                                    const std::vector<double>& t_grid, bool noisy,
                                    std::optional<Eigen::VectorXcd> psi0 = std::nullopt) {
    p.validate();
    if (s.segments.empty())
        throw invalid_state_error("run_schedule: empty schedule");
    if (s.swept_segment >= s.segments.size())
        throw invalid_state_error("run_schedule: swept segment out of range");
    for (const auto& seg : s.segments)
        if (seg.duration_ns < 0.0)
            throw invalid_state_error("run_schedule: negative segment duration");
    if (t_grid.empty())
        throw invalid_state_error("run_schedule: empty time grid");

    const int L = p.levels;
    std::vector<Operator> hs;
    std::vector<DressedBasis> bases;
    hs.reserve(s.segments.size());
    for (const auto& seg : s.segments) {
        hs.push_back(full_hamiltonian(p.with_frequencies(seg.omega1, seg.omegac)));
        bases.emplace_back(hs.back(), L);
    }
    const DressedBasis& meas = bases.front();

    PopulationTrace trace;
    trace.t_ns = t_grid;
    trace.rows.reserve(t_grid.size());

    const auto channels = noisy ? collapse_channels_from_coherence(p)
                                : std::vector<CollapseChannel>{};

    Eigen::VectorXcd psi = psi0.value_or(meas.state(0, 0, 0));
    if (psi.size() != meas.dim())
        throw invalid_dimension_error("run_schedule: initial state dimension mismatch");

    if (!noisy) {
        // advance through the segments before the swept one
        for (std::size_t i = 0; i < s.swept_segment; ++i) {
            for (Site site : s.segments[i].pi_pulses) psi = bases[i].pi_pulse(site) * psi;
            psi = EigenPropagator(hs[i]).propagate(psi, s.segments[i].duration_ns);
        }
        for (Site site : s.segments[s.swept_segment].pi_pulses)
            psi = bases[s.swept_segment].pi_pulse(site) * psi;
        EigenPropagator swept(hs[s.swept_segment]);
        for (double t : t_grid) {
            Eigen::VectorXcd phi = swept.propagate(psi, t);
            for (std::size_t i = s.swept_segment + 1; i < s.segments.size(); ++i) {
                for (Site site : s.segments[i].pi_pulses) phi = bases[i].pi_pulse(site) * phi;
                phi = EigenPropagator(hs[i]).propagate(phi, s.segments[i].duration_ns);
            }
            trace.rows.push_back(detail::marginals(meas, phi));
        }
        return trace;
    }

    // decoherent path: superoperator exponentials per segment
    Operator rho = density_from_pure(psi);
    for (std::size_t i = 0; i < s.swept_segment; ++i) {
        for (Site site : s.segments[i].pi_pulses) {
            const Operator u = bases[i].pi_pulse(site);
            rho = u * rho * u.adjoint();
        }
        if (s.segments[i].duration_ns > 0.0)
            rho = LindbladPropagator(hs[i], channels, s.segments[i].duration_ns).apply(rho);
    }
    for (Site site : s.segments[s.swept_segment].pi_pulses) {
        const Operator u = bases[s.swept_segment].pi_pulse(site);
        rho = u * rho * u.adjoint();
    }

    // tail propagators applied to every sample
    std::vector<LindbladPropagator> tail;
    for (std::size_t i = s.swept_segment + 1; i < s.segments.size(); ++i)
        if (s.segments[i].duration_ns > 0.0)
            tail.emplace_back(hs[i], channels, s.segments[i].duration_ns);

    // uniform grid steps exactly; otherwise integrate between samples
    bool uniform = t_grid.size() >= 2;
    const double dt0 = uniform ? t_grid[1] - t_grid[0] : 0.0;
    for (std::size_t i = 0; i + 1 < t_grid.size(); ++i)
        if (std::abs((t_grid[i + 1] - t_grid[i]) - dt0) > 1e-9) uniform = false;

    auto emit = [&](const Operator& at_sample) {
        Operator final = at_sample;
        for (const auto& stepper : tail) final = stepper.apply(final);
        trace.rows.push_back(detail::marginals(meas, final));
    };

    const Operator& h_swept = hs[s.swept_segment];
    if (uniform && t_grid.size() >= 2) {
        LindbladPropagator step(h_swept, channels, dt0);
        Operator cur = rho;
        if (t_grid.front() > 1e-12)
            cur = LindbladPropagator(h_swept, channels, t_grid.front()).apply(cur);
        emit(cur);
        for (std::size_t i = 1; i < t_grid.size(); ++i) {
            cur = step.apply(cur);
            emit(cur);
        }
    } else {
        double t_prev = 0.0;
        Operator cur = rho;
        for (double t : t_grid) {
            if (t > t_prev + 1e-12) {
                cur = LindbladPropagator(h_swept, channels, t - t_prev).apply(cur);
                t_prev = t;
            }
            emit(cur);
        }
    }
    return trace;
}

// --- resonance and detuning calibration -------------------------------------

namespace detail {

// gap between the two eigenstates carrying the single qubit excitation with
// the coupler in state n (rad/ns)
inline double exchange_gap(const CircuitParams& p, double omega1, double omegac, int n) {
    const int L = p.levels;
    Eigen::SelfAdjointEigenSolver<Operator> es(
        full_hamiltonian(p.with_frequencies(omega1, omegac)));
    const int ia = basis_index(1, 0, n, L);
    const int ib = basis_index(0, 1, n, L);
    double e1 = 0.0, e2 = 0.0, w1 = -1.0, w2 = -1.0;
    for (int k = 0; k < es.eigenvalues().size(); ++k) {
        const double w =
            std::norm(es.eigenvectors()(ia, k)) + std::norm(es.eigenvectors()(ib, k));
        if (w > w1) {
            w2 = w1;
            e2 = e1;
            w1 = w;
            e1 = es.eigenvalues()(k);
        } else if (w > w2) {
            w2 = w;
            e2 = es.eigenvalues()(k);
        }
    }
    return std::abs(e1 - e2);
}

} // namespace detail

struct ResonanceCalibration {
    double omega1;    // dressed-resonant Q1 frequency (GHz)
    double gap_ghz;   // minimum exchange splitting, linear frequency
};

// Q1 frequency minimizing the exchange splitting for coupler state n at a
// given coupler frequency (ternary search; the gap is convex near resonance).
inline ResonanceCalibration calibrate_resonance(const CircuitParams& p, double omegac, int n,
                                                double window_ghz = 0.012) {
    double a = p.omega2 - window_ghz, b = p.omega2 + window_ghz;
    for (int it = 0; it < 70; ++it) {
        const double m1 = a + (b - a) / 3.0;
        const double m2 = b - (b - a) / 3.0;
        if (detail::exchange_gap(p, m1, omegac, n) < detail::exchange_gap(p, m2, omegac, n))
            b = m2;
        else
            a = m1;
    }
    const double w1 = 0.5 * (a + b);
    return {w1, detail::exchange_gap(p, w1, omegac, n) / two_pi};
}

// Idle-calibrated Q2 transition frequency: the dressed |010> transition at the
// standard (coupler-ground) idle point, where the lab calibrates its qubits.
inline double calibrated_qubit_frequency(const CircuitParams& p) {
    const auto [w1_idle, wc_idle] = idle_frequencies(p, 0);
    DressedBasis idle(full_hamiltonian(p.with_frequencies(w1_idle, wc_idle)), p.levels);
    return idle.transition_ghz(0, 1, 0);
}

struct DetuningCalibration {
    double omegac_bare;   // bare model coupler frequency realizing the target
    double omega1;        // dressed-resonant Q1 frequency at that point
    double gap_ghz;       // exchange splitting there
};

// Finds the bare coupler frequency at which the measured detuning
// (idle-calibrated qubit frequency minus dressed coupler transition at the
// interaction point) equals delta_target, recalibrating Q1 at every step.
inline DetuningCalibration calibrate_detuning(const CircuitParams& p, double delta_target,
                                              int n, double qubit_freq_cal) {
    double omegac = p.omega2 - delta_target;
    ResonanceCalibration res{p.omega2, 0.0};
    for (int it = 0; it < 60; ++it) {
        res = calibrate_resonance(p, omegac, n);
        DressedBasis basis(full_hamiltonian(p.with_frequencies(res.omega1, omegac)), p.levels);
        const double delta_meas = qubit_freq_cal - basis.transition_ghz(0, 0, 1);
        const double err = delta_meas - delta_target;
        if (std::abs(err) < 1e-8) break;
        omegac += err;  // d(delta_meas)/d(omegac) ~ -1
    }
    return {omegac, res.omega1, res.gap_ghz};
}

// --- chevron scan ------------------------------------------------------------

struct ChevronData {
    std::vector<double> omegac_grid;  // GHz
    std::vector<double> t_grid;       // ns
    Eigen::MatrixXd p01;              // rows: coupler frequency, cols: time
    std::vector<FitResult> fitted;    // per-row oscillation fit
};

inline ChevronData chevron_scan(const CircuitParams& p, int coupler_state,
                                const std::vector<double>& omegac_grid,
                                const std::vector<double>& t_grid, bool noisy) {
    if (omegac_grid.empty() || t_grid.empty())
        throw invalid_state_error("chevron_scan: empty grid");
    ChevronData data;
    data.omegac_grid = omegac_grid;
    data.t_grid = t_grid;
    data.p01.resize(static_cast<Eigen::Index>(omegac_grid.size()),
                    static_cast<Eigen::Index>(t_grid.size()));
    data.fitted.reserve(omegac_grid.size());
    for (std::size_t r = 0; r < omegac_grid.size(); ++r) {
        TransistorScheduleConfig cfg;
        cfg.coupler_state = coupler_state;
        cfg.interaction_omegac = omegac_grid[r];
        cfg.interaction_ns = t_grid.back();
        const PulseSchedule s = build_transistor_schedule(p, cfg);
        const PopulationTrace trace = run_schedule(s, p, t_grid, noisy);
        std::vector<double> row(t_grid.size());
        for (std::size_t c = 0; c < t_grid.size(); ++c) {
            row[c] = trace.p01(c);
            data.p01(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
        }
        try {
            data.fitted.push_back(fit_oscillation(t_grid, row));
        } catch (const fit_failure_error& e) {
            FitResult failed;
            failed.flat = true;
            failed.residual_rms = e.residual_rms;
            data.fitted.push_back(failed);
        }
    }
    return data;
}

// --- coupling vs detuning ------------------------------------------------------

struct CouplingPoint {
    double delta;             // GHz (measured convention, see header comment)
    double fitted_2g_mhz;     // |2 g~|/2pi from the full-model fit
    double formula3_2g_mhz;   // three-level closed form
    double formula2_2g_mhz;   // two-level closed form
    int coupler_state;
    bool flat;
};

// Resonant-exchange frequency extraction across a detuning grid: per point,
// calibrate, evolve the dressed |0 1 n> state under the interaction
// Hamiltonian, fit P(|01>), and evaluate both closed forms at the same
// detuning.
inline std::vector<CouplingPoint> coupling_vs_detuning(const CircuitParams& p,
                                                       int coupler_state,
                                                       const std::vector<double>& delta_grid) {
    if (coupler_state != 0 && coupler_state != 1)
        throw invalid_state_error("coupling_vs_detuning: coupler state must be 0 or 1");
    if (delta_grid.empty())
        throw invalid_state_error("coupling_vs_detuning: empty grid");

    const double qubit_cal = calibrated_qubit_frequency(p);
    const auto [w1_idle, wc_idle] = idle_frequencies(p, coupler_state);
    DressedBasis idle(full_hamiltonian(p.with_frequencies(w1_idle, wc_idle)), p.levels);
    const Eigen::VectorXcd psi0 = idle.state(0, 1, coupler_state);

    std::vector<CouplingPoint> out;
    out.reserve(delta_grid.size());
    for (double delta : delta_grid) {
        const DetuningCalibration cal =
            calibrate_detuning(p, delta, coupler_state, qubit_cal);
        EigenPropagator prop(
            full_hamiltonian(p.with_frequencies(cal.omega1, cal.omegac_bare)));

        // sample 1.25 periods of the expected oscillation
        const double f_exp = std::max(cal.gap_ghz, 2e-5);
        const double t_max = 1.25 / f_exp;
        const int n_t = 200;
        std::vector<double> ts(n_t), vals(n_t);
        for (int i = 0; i < n_t; ++i) {
            ts[i] = t_max * static_cast<double>(i) / (n_t - 1);
            vals[i] = idle.marginal_population(0, 1, prop.propagate(psi0, ts[i]));
        }

        CouplingPoint pt{};
        pt.delta = delta;
        pt.coupler_state = coupler_state;
        pt.formula3_2g_mhz = 2e3 * std::abs(g_eff_three_level(p, delta, coupler_state).value);
        pt.formula2_2g_mhz = 2e3 * std::abs(g_eff_two_level(p, delta, coupler_state).value);
        const FitResult fit = fit_oscillation(ts, vals);
        pt.fitted_2g_mhz = fit.frequency_mhz;
        pt.flat = fit.flat;
        out.push_back(pt);
    }
    return out;
}

} // namespace qswitch
