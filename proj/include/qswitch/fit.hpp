#pragma once

// Sinusoid fitting for vacuum-Rabi population traces:
// v(t) ~ offset + amplitude*cos(2 pi f t + phase), f initialized from the
// discrete-spectrum peak and refined by damped Gauss-Newton iterations.

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "qswitch/circuit.hpp"
#include "qswitch/errors.hpp"

namespace qswitch {

struct FitResult {
    double frequency_mhz = 0.0;  // oscillation frequency; |2 g~|/2pi for exchange traces
    double amplitude = 0.0;
    double phase = 0.0;          // radians, cos convention
    double offset = 0.0;
    double residual_rms = 0.0;
    bool flat = false;           // amplitude below resolution, frequency forced to 0
    int iterations = 0;
};

namespace detail {

struct DftPeak {
    double freq;       // 1/ns
    double amplitude;
    double phase;
};

// Single dominant peak of the discrete spectrum with parabolic sub-bin
// interpolation on the power.
inline DftPeak dft_peak(const std::vector<double>& t, const std::vector<double>& v,
                        double mean) {
    const std::size_t n = t.size();
    const double dt = (t.back() - t.front()) / static_cast<double>(n - 1);
    const double df = 1.0 / (static_cast<double>(n) * dt);
    const std::size_t kmax = n / 2;
    std::vector<std::complex<double>> bins(kmax + 1, {0.0, 0.0});
    for (std::size_t k = 1; k <= kmax; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t j = 0; j < n; ++j)
            acc += (v[j] - mean) * std::polar(1.0, -two_pi * df * k * (t[j] - t.front()));
        bins[k] = acc;
    }
    std::size_t kpk = 1;
    for (std::size_t k = 2; k <= kmax; ++k)
        if (std::norm(bins[k]) > std::norm(bins[kpk])) kpk = k;
    double shift = 0.0;
    if (kpk > 1 && kpk < kmax) {
        const double pm = std::norm(bins[kpk - 1]);
        const double p0 = std::norm(bins[kpk]);
        const double pp = std::norm(bins[kpk + 1]);
        const double denom = pm - 2.0 * p0 + pp;
        if (denom != 0.0) shift = std::clamp(0.5 * (pm - pp) / denom, -0.5, 0.5);
    }
    DftPeak pk;
    pk.freq = (static_cast<double>(kpk) + shift) * df;
    pk.amplitude = 2.0 * std::abs(bins[kpk]) / static_cast<double>(n);
    pk.phase = std::arg(bins[kpk]) - two_pi * pk.freq * t.front();
    return pk;
}

} // namespace detail

// Least-squares sinusoid fit. Flat traces (amplitude < 1e-4) return frequency
// zero with the flat flag set; non-convergence raises fit_failure_error.
inline FitResult fit_oscillation(const std::vector<double>& t, const std::vector<double>& v) {
    if (t.size() != v.size())
        throw invalid_state_error("fit_oscillation: grid/value size mismatch");
    const std::size_t n = t.size();
    if (n < 8)
        throw invalid_state_error("fit_oscillation: need at least 8 samples");
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (!(t[i] < t[i + 1]))
            throw invalid_state_error("fit_oscillation: time grid must be ascending");

    double mean = 0.0, vmin = v[0], vmax = v[0];
    for (double x : v) {
        mean += x;
        vmin = std::min(vmin, x);
        vmax = std::max(vmax, x);
    }
    mean /= static_cast<double>(n);

    FitResult res;
    res.offset = mean;
    res.amplitude = 0.5 * (vmax - vmin);
    if (res.amplitude < 1e-4) {
        res.flat = true;
        double sse = 0.0;
        for (double x : v) sse += (x - mean) * (x - mean);
        res.residual_rms = std::sqrt(sse / static_cast<double>(n));
        return res;
    }

    const detail::DftPeak pk = detail::dft_peak(t, v, mean);
    Eigen::Vector4d beta(mean, pk.amplitude, pk.freq, pk.phase);

    auto sse_of = [&](const Eigen::Vector4d& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double m = b(0) + b(1) * std::cos(two_pi * b(2) * t[i] + b(3));
            s += (v[i] - m) * (v[i] - m);
        }
        return s;
    };

    double lambda = 1e-3;
    double sse = sse_of(beta);
    bool converged = false;
    int it = 0;
    for (; it < 200 && !converged; ++it) {
        Eigen::Matrix4d jtj = Eigen::Matrix4d::Zero();
        Eigen::Vector4d jtr = Eigen::Vector4d::Zero();
        for (std::size_t i = 0; i < n; ++i) {
            const double theta = two_pi * beta(2) * t[i] + beta(3);
            const double c = std::cos(theta), s = std::sin(theta);
            Eigen::Vector4d j(1.0, c, -beta(1) * two_pi * t[i] * s, -beta(1) * s);
            const double r = v[i] - (beta(0) + beta(1) * c);
            jtj.noalias() += j * j.transpose();
            jtr.noalias() += j * r;
        }
        bool stepped = false;
        for (int inner = 0; inner < 25; ++inner) {
            Eigen::Matrix4d damped = jtj;
            for (int d = 0; d < 4; ++d) damped(d, d) += lambda * std::max(jtj(d, d), 1e-12);
            const Eigen::Vector4d step = damped.ldlt().solve(jtr);
            const Eigen::Vector4d trial = beta + step;
            const double trial_sse = sse_of(trial);
            if (trial_sse <= sse) {
                double rel = 0.0;
                for (int d = 0; d < 4; ++d)
                    rel = std::max(rel, std::abs(step(d)) / (std::abs(beta(d)) + 1e-12));
                const double improvement = sse - trial_sse;
                beta = trial;
                sse = trial_sse;
                lambda = std::max(lambda / 3.0, 1e-12);
                stepped = true;
                // done when parameters settle or the residual hits its floor
                if (rel < 1e-10 || improvement < 1e-15 * (1.0 + sse)) converged = true;
                break;
            }
            lambda *= 10.0;
            if (lambda > 1e12) break;
        }
        if (!stepped) {
            converged = true;  // stalled at a minimum the damping cannot leave
        }
    }
    res.residual_rms = std::sqrt(sse / static_cast<double>(n));
    if (!converged)
        throw fit_failure_error("fit_oscillation: no convergence after 200 iterations",
                                res.residual_rms);

    res.offset = beta(0);
    res.amplitude = beta(1);
    double f = beta(2);
    double phase = beta(3);
    if (res.amplitude < 0.0) {
        res.amplitude = -res.amplitude;
        phase += std::numbers::pi;
    }
    if (f < 0.0) {
        f = -f;
        phase = -phase;
    }
    phase = std::remainder(phase, two_pi);
    res.frequency_mhz = 1e3 * f;
    res.phase = phase;
    res.iterations = it;
    if (res.amplitude < 1e-4) {
        res.flat = true;
        res.frequency_mhz = 0.0;
    }
    return res;
}

} // namespace qswitch
