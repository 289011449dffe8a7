#include "hifloc/relay.hpp"

#include "hifloc/error.hpp"
#include "hifloc/text.hpp"

#include <cmath>
#include <numbers>

namespace hifloc::relay {

namespace {

constexpr double kDegree = std::numbers::pi / 180.0;

} // namespace

void MhoZone::validate() const
{
    if (!(reach_ohm > 0.0) || !(angle_deg > 0.0 && angle_deg < 180.0))
        throw Error(Errc::InvalidParameter, "mho reach must be positive with angle in (0, 180) deg");
}

Complex MhoZone::center() const
{
    return std::polar(0.5 * reach_ohm, angle_deg * kDegree);
}

PhasorEstimate dft_phasor(std::span<const double> window, int samples_per_cycle, double t_end_s)
{
    if (samples_per_cycle < 4 || window.size() != static_cast<std::size_t>(samples_per_cycle))
        throw Error(Errc::BadWindow, "DFT window must hold exactly one cycle of at least 4 samples");
    const double step = 2.0 * std::numbers::pi / samples_per_cycle;
    Complex sum{};
    for (int n = 0; n < samples_per_cycle; ++n)
        sum += window[static_cast<std::size_t>(n)] * std::polar(1.0, -step * n);
    return {sum * (2.0 / samples_per_cycle), t_end_s};
}

Complex residual_compensation_factor(Complex z1, Complex z0)
{
    if (!(std::abs(z1) > 0.0))
        throw Error(Errc::InvalidParameter, "positive-sequence impedance must be nonzero");
    return (z0 - z1) / (3.0 * z1);
}

Complex apparent_impedance(const PhasorEstimate& va, const PhasorEstimate& ia,
                           const PhasorEstimate& iresidual, Complex k0)
{
    const Complex loop_current = ia.value + k0 * iresidual.value;
    if (std::abs(loop_current) < kMinLoopCurrent)
        throw Error(Errc::ZeroCurrent, "loop current below threshold");
    return va.value / loop_current;
}

ImpedanceLocus track_locus(const netmodel::WaveformSet& waves, int samples_per_cycle, Complex k0)
{
    const auto n = static_cast<std::size_t>(samples_per_cycle);
    if (samples_per_cycle < 4)
        throw Error(Errc::BadWindow, "at least 4 samples per cycle required");
    if (waves.size() < n)
        throw Error(Errc::RecordTooShort, "record shorter than one cycle");

    const std::span<const double> va(waves.samples_va);
    const std::span<const double> ia(waves.samples_ia);
    const std::span<const double> ir(waves.samples_iresidual);

    ImpedanceLocus locus;
    locus.points.reserve(waves.size() - n + 1);
    for (std::size_t start = 0; start + n <= waves.size(); ++start) {
        const double t_end = waves.time_of(start + n - 1);
        const auto v = dft_phasor(va.subspan(start, n), samples_per_cycle, t_end);
        const auto i = dft_phasor(ia.subspan(start, n), samples_per_cycle, t_end);
        const auto r = dft_phasor(ir.subspan(start, n), samples_per_cycle, t_end);
        const Complex loop_current = i.value + k0 * r.value;
        if (std::abs(loop_current) < kMinLoopCurrent)
            continue;
        locus.points.push_back({t_end, v.value / loop_current});
    }
    return locus;
}

bool mho_contains(Complex z, const MhoZone& zone)
{
    const Complex c = zone.center();
    const double radius = std::abs(c);
    // Absorbs rounding for points computed exactly on the characteristic.
    return std::abs(z - c) <= radius * (1.0 + 1e-12);
}

RelayDecision decide_trip(const ImpedanceLocus& locus, const MhoZone& zone, int dwell)
{
    if (dwell < 1)
        throw Error(Errc::InvalidParameter, "dwell must be at least 1");
    zone.validate();

    RelayDecision decision;
    int run = 0;
    for (std::size_t i = 0; i < locus.points.size(); ++i) {
        if (!mho_contains(locus.points[i].z, zone)) {
            run = 0;
            continue;
        }
        if (!decision.first_inzone_index)
            decision.first_inzone_index = i;
        if (++run == dwell) {
            decision.tripped = true;
            decision.trip_time_s = locus.points[i].t_s;
            break;
        }
    }
    return decision;
}

MhoZone zone_from_line(const netmodel::LineParams& line, double reach_fraction)
{
    if (!(reach_fraction > 0.0))
        throw Error(Errc::InvalidParameter, "reach fraction must be positive");
    const Complex z_line = line.length_km * line.z1_per_km;
    MhoZone zone{reach_fraction * std::abs(z_line), std::arg(z_line) / kDegree};
    zone.validate();
    return zone;
}

std::string locus_to_csv(const ImpedanceLocus& locus)
{
    std::string out = "t,r_ohm,x_ohm\n";
    for (const auto& p : locus.points) {
        out += text::format_double(p.t_s);
        out += ',';
        out += text::format_double(p.z.real());
        out += ',';
        out += text::format_double(p.z.imag());
        out += '\n';
    }
    return out;
}

ImpedanceLocus locus_from_csv(const std::string& content)
{
    const auto table = text::parse_csv(content);
    const auto t = table.column("t");
    const auto r = table.column("r_ohm");
    const auto x = table.column("x_ohm");
    ImpedanceLocus locus;
    for (const auto& row : table.rows)
        locus.points.push_back({text::parse_double(row[t]),
                                Complex{text::parse_double(row[r]), text::parse_double(row[x])}});
    return locus;
}

} // namespace hifloc::relay
