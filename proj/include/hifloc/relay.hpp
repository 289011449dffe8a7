#pragma once

#include "hifloc/netmodel.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hifloc::relay {

struct PhasorEstimate {
    Complex value;
    double t_s = 0.0;  // time of the last sample in the window
};

struct LocusPoint {
    double t_s;
    Complex z;
};

/// Time-ordered apparent impedance trajectory in the R-X plane.
struct ImpedanceLocus {
    std::vector<LocusPoint> points;

    bool empty() const { return points.empty(); }
    std::size_t size() const { return points.size(); }
};

/// Plain mho circle through the origin; `reach_ohm` is the diameter laid
/// along `angle_deg`.
struct MhoZone {
    double reach_ohm = 0.0;
    double angle_deg = 0.0;

    void validate() const;
    Complex center() const;
};

struct RelayDecision {
    bool tripped = false;
    std::optional<double> trip_time_s;
    std::optional<std::size_t> first_inzone_index;
};

/// Denominator magnitude below which a locus point is undefined.
inline constexpr double kMinLoopCurrent = 1e-9;

/// Full-cycle fundamental phasor (2/N) sum x[n] e^{-j 2 pi n / N}, referenced
/// to the first sample of the window.
PhasorEstimate dft_phasor(std::span<const double> window, int samples_per_cycle, double t_end_s = 0.0);

/// Ground-distance compensation k0 = (z0 - z1) / (3 z1).
Complex residual_compensation_factor(Complex z1, Complex z0);

/// Z = Va / (Ia + k0 Ires). With k0 = 0 this is the raw V/I ratio.
Complex apparent_impedance(const PhasorEstimate& va, const PhasorEstimate& ia,
                           const PhasorEstimate& iresidual, Complex k0);

/// One point per sliding window position (stride one sample); positions whose
/// loop current is below kMinLoopCurrent are skipped.
ImpedanceLocus track_locus(const netmodel::WaveformSet& waves, int samples_per_cycle, Complex k0);

/// Inclusive: points on the characteristic count as inside.
bool mho_contains(Complex z, const MhoZone& zone);

/// Trips at the first run of `dwell` consecutive in-zone points; the trip time
/// is the time of the run's last (dwell-th) point.
RelayDecision decide_trip(const ImpedanceLocus& locus, const MhoZone& zone, int dwell);

/// Zone 1 reach as a fraction of the whole line's positive-sequence
/// impedance, at the line angle.
MhoZone zone_from_line(const netmodel::LineParams& line, double reach_fraction);

std::string locus_to_csv(const ImpedanceLocus& locus);
ImpedanceLocus locus_from_csv(const std::string& content);

} // namespace hifloc::relay
