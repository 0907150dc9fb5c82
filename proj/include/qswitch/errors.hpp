#pragma once

#include <stdexcept>
#include <string>

namespace qswitch {

struct invalid_dimension_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct resonance_singularity_error : std::domain_error {
    using std::domain_error::domain_error;
};

struct no_root_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct invalid_interval_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct invalid_coherence_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct invalid_state_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Sinusoid fit did not converge; carries the last residual RMS in the message.
struct fit_failure_error : std::runtime_error {
    fit_failure_error(const std::string& msg, double residual_rms_)
        : std::runtime_error(msg), residual_rms(residual_rms_) {}
    double residual_rms;
};

struct incomplete_data_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct rank_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct convention_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct singular_matrix_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace qswitch
