#include "hifloc/error.hpp"

namespace hifloc {

std::string_view errc_name(Errc code)
{
    switch (code) {
    case Errc::InvalidParameter: return "InvalidParameter";
    case Errc::NoLoadFlow: return "NoLoadFlow";
    case Errc::DegenerateNetwork: return "DegenerateNetwork";
    case Errc::BadSampling: return "BadSampling";
    case Errc::BadWindow: return "BadWindow";
    case Errc::ZeroCurrent: return "ZeroCurrent";
    case Errc::RecordTooShort: return "RecordTooShort";
    case Errc::EmptyLocus: return "EmptyLocus";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::BadTopology: return "BadTopology";
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::LineSearchFailure: return "LineSearchFailure";
    case Errc::IoFailure: return "IoFailure";
    case Errc::Usage: return "Usage";
    }
    return "Unknown";
}

ErrorCategory category_of(Errc code)
{
    switch (code) {
    case Errc::NoLoadFlow:
    case Errc::DegenerateNetwork:
    case Errc::BadSampling:
    case Errc::BadWindow:
    case Errc::ZeroCurrent:
    case Errc::RecordTooShort:
    case Errc::EmptyLocus:
        return ErrorCategory::Simulation;
    case Errc::NonFiniteLoss:
    case Errc::LineSearchFailure:
        return ErrorCategory::Training;
    case Errc::IoFailure:
        return ErrorCategory::Io;
    default:
        return ErrorCategory::Usage;
    }
}

} // namespace hifloc
