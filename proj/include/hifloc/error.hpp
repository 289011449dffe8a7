#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hifloc {

enum class Errc {
    InvalidParameter,
    NoLoadFlow,
    DegenerateNetwork,
    BadSampling,
    BadWindow,
    ZeroCurrent,
    RecordTooShort,
    EmptyLocus,
    EmptyDataset,
    DimensionMismatch,
    BadTopology,
    EmptyBatch,
    NonFiniteLoss,
    LineSearchFailure,
    IoFailure,
    Usage,
};

std::string_view errc_name(Errc code);

// Coarse grouping used to pick a process exit status.
enum class ErrorCategory { Usage, Simulation, Training, Io };

ErrorCategory category_of(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace hifloc
