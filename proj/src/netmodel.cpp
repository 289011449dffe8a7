#include "hifloc/netmodel.hpp"

#include "hifloc/error.hpp"
#include "hifloc/text.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace hifloc::netmodel {

namespace {

const Complex kA = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
const Complex kA2 = kA * kA;

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// Balanced set whose phase-a value is `phase_a`.
PhaseSet balanced(Complex phase_a) { return {phase_a, kA2 * phase_a, kA * phase_a}; }

struct LoadFlow {
    Complex current;  // phase a, bus A into the line
    Complex v_relay;  // phase a at bus A
};

LoadFlow load_flow(const Network& net)
{
    const auto& a = net.source_a;
    if (!net.source_b)
        return {Complex{}, a.emf};
    const auto& b = *net.source_b;
    const Complex loop = a.z1 + net.line.length_km * net.line.z1_per_km + b.z1;
    const Complex current = (a.emf - b.emf) / loop;
    return {current, a.emf - a.z1 * current};
}

// Source-side and remote-side branch impedances of one sequence network as
// seen from the fault point.
struct SequenceBranches {
    Complex near;
    std::optional<Complex> far;

    Complex thevenin() const { return far ? near * *far / (near + *far) : near; }
    // Fraction of the fault current supplied through the relay end.
    Complex near_share() const { return far ? *far / (near + *far) : Complex{1.0, 0.0}; }
};

SequenceBranches branches(const Network& net, double distance_km, int sequence)
{
    const auto& line = net.line;
    const Complex z_line = sequence == 0 ? line.z0_per_km : line.z1_per_km;
    const Complex z_src_a = sequence == 0 ? net.source_a.z0 : net.source_a.z1;
    SequenceBranches br{z_src_a + distance_km * z_line, std::nullopt};
    if (net.source_b) {
        const Complex z_src_b = sequence == 0 ? net.source_b->z0 : net.source_b->z1;
        br.far = z_src_b + (line.length_km - distance_km) * z_line;
    }
    return br;
}

void validate_network(const Network& net)
{
    net.line.validate();
    net.source_a.validate();
    if (net.source_b)
        net.source_b->validate();
}

} // namespace

void LineParams::validate() const
{
    if (!(length_km > 0.0) || !(f_hz > 0.0))
        throw Error(Errc::InvalidParameter, "line length and frequency must be positive");
    for (const auto z : {z1_per_km, z0_per_km})
        if (!finite(z) || z.real() < 0.0 || !(z.imag() > 0.0))
            throw Error(Errc::InvalidParameter, "line impedance must be inductive with R >= 0");
}

void SourceParams::validate() const
{
    if (!finite(emf) || !(std::abs(emf) > 0.0))
        throw Error(Errc::InvalidParameter, "source EMF must be nonzero");
    if (!finite(z1) || !finite(z0) || !(z1.imag() > 0.0))
        throw Error(Errc::InvalidParameter, "source positive-sequence reactance must be positive");
}

void FaultScenario::validate(const LineParams& line) const
{
    if (!(distance_km > 0.0 && distance_km < line.length_km))
        throw Error(Errc::InvalidParameter,
                    "fault distance " + text::format_double(distance_km) + " km outside line");
    if (!(rf_ohm >= 0.0) || !(inception_s >= 0.0))
        throw Error(Errc::InvalidParameter, "fault resistance and inception must be >= 0");
}

Network default_network()
{
    const double emf = 154e3 / std::sqrt(3.0);
    Network net;
    net.source_a = {std::polar(emf, 0.0), {0.0, 10.0}, {0.0, 15.0}};
    net.source_b = SourceParams{std::polar(emf, -10.0 * std::numbers::pi / 180.0), {0.0, 12.0},
                                {0.0, 18.0}};
    return net;
}

double WaveformSet::time_of(std::size_t index) const
{
    return t0_s + static_cast<double>(index) / sample_rate_hz;
}

PhaseSet sequence_to_phase(const PhaseSet& seq)
{
    const auto& [s0, s1, s2] = seq;
    return {s0 + s1 + s2, s0 + kA2 * s1 + kA * s2, s0 + kA * s1 + kA2 * s2};
}

PhaseSet phase_to_sequence(const PhaseSet& abc)
{
    const auto& [a, b, c] = abc;
    return {(a + b + c) / 3.0, (a + kA * b + kA2 * c) / 3.0, (a + kA2 * b + kA * c) / 3.0};
}

NetworkSolution prefault_state(const Network& net)
{
    validate_network(net);
    const auto flow = load_flow(net);
    if (std::abs(flow.current) < 1e-9)
        throw Error(Errc::NoLoadFlow, "no current circulates between the sources");
    NetworkSolution sol;
    sol.v_relay_abc = balanced(flow.v_relay);
    sol.i_relay_abc = balanced(flow.current);
    return sol;
}

NetworkSolution solve_slg_fault(const Network& net, const FaultScenario& scenario)
{
    validate_network(net);
    scenario.validate(net.line);

    const auto flow = load_flow(net);
    const Complex e_prefault = flow.v_relay - scenario.distance_km * net.line.z1_per_km * flow.current;

    const auto br0 = branches(net, scenario.distance_km, 0);
    const auto br1 = branches(net, scenario.distance_km, 1);
    // Negative-sequence network is identical to the positive one.
    const Complex series = br0.thevenin() + 2.0 * br1.thevenin() + 3.0 * scenario.rf_ohm;
    if (std::abs(series) < 1e-12)
        throw Error(Errc::DegenerateNetwork, "total sequence impedance vanishes");
    const Complex i_fault = e_prefault / series;

    const Complex d_i1 = br1.near_share() * i_fault;
    const Complex d_i0 = br0.near_share() * i_fault;
    const PhaseSet i_seq{d_i0, flow.current + d_i1, d_i1};

    const auto& src = net.source_a;
    const PhaseSet v_seq{-src.z0 * d_i0, flow.v_relay - src.z1 * d_i1, -src.z1 * d_i1};

    NetworkSolution sol;
    sol.i_seq_fault = {i_fault, i_fault, i_fault};
    sol.i_relay_abc = sequence_to_phase(i_seq);
    sol.v_relay_abc = sequence_to_phase(v_seq);
    sol.i_relay_residual = 3.0 * d_i0;
    return sol;
}

double faulted_loop_time_constant(const Network& net, const FaultScenario& scenario)
{
    const auto br0 = branches(net, scenario.distance_km, 0);
    const auto br1 = branches(net, scenario.distance_km, 1);
    const Complex loop = br0.thevenin() + 2.0 * br1.thevenin() + 3.0 * scenario.rf_ohm;
    const double omega = 2.0 * std::numbers::pi * net.line.f_hz;
    if (!(loop.real() > 0.0))
        return std::numeric_limits<double>::infinity();
    return loop.imag() / (omega * loop.real());
}

WaveformSet synthesize_waveforms(const NetworkSolution& pre, const NetworkSolution& post,
                                 const FaultScenario& scenario, double f_hz,
                                 const WaveformOptions& options)
{
    const double per_cycle = options.sample_rate_hz / f_hz;
    if (!(per_cycle >= 1.0) || std::abs(per_cycle - std::round(per_cycle)) > 1e-9 * per_cycle)
        throw Error(Errc::BadSampling, "sample rate " + text::format_double(options.sample_rate_hz) +
                                           " Hz is not an integer multiple of " +
                                           text::format_double(f_hz) + " Hz");
    if (!(options.duration_s > 0.0))
        throw Error(Errc::BadSampling, "record duration must be positive");

    const auto count = static_cast<std::size_t>(std::llround(options.duration_s * options.sample_rate_hz));
    const double omega = 2.0 * std::numbers::pi * f_hz;
    const double t_fault = scenario.inception_s;

    WaveformSet waves;
    waves.sample_rate_hz = options.sample_rate_hz;
    waves.t0_s = options.t0_s;
    waves.samples_va.resize(count);
    waves.samples_ia.resize(count);
    waves.samples_iresidual.resize(count);

    auto instantaneous = [omega](Complex phasor, double t) {
        return (phasor * std::polar(1.0, omega * t)).real();
    };
    // Offsets that keep the currents continuous across the inception instant.
    const double offset_ia = instantaneous(pre.i_relay_abc[0], t_fault) -
                             instantaneous(post.i_relay_abc[0], t_fault);
    const double offset_ir = instantaneous(pre.i_relay_residual, t_fault) -
                             instantaneous(post.i_relay_residual, t_fault);

    for (std::size_t n = 0; n < count; ++n) {
        const double t = waves.time_of(n);
        const auto& state = t < t_fault ? pre : post;
        waves.samples_va[n] = instantaneous(state.v_relay_abc[0], t);
        waves.samples_ia[n] = instantaneous(state.i_relay_abc[0], t);
        waves.samples_iresidual[n] = instantaneous(state.i_relay_residual, t);
        if (options.dc_offset && options.dc_time_constant_s > 0.0 && t >= t_fault) {
            const double decay = std::exp(-(t - t_fault) / options.dc_time_constant_s);
            waves.samples_ia[n] += offset_ia * decay;
            waves.samples_iresidual[n] += offset_ir * decay;
        }
    }
    return waves;
}

WaveformSet simulate_scenario(const Network& net, const FaultScenario& scenario,
                              const WaveformOptions& options)
{
    const auto post = solve_slg_fault(net, scenario);
    NetworkSolution pre;
    const auto flow = load_flow(net);
    pre.v_relay_abc = balanced(flow.v_relay);
    pre.i_relay_abc = balanced(flow.current);

    auto opts = options;
    if (opts.dc_offset)
        opts.dc_time_constant_s = faulted_loop_time_constant(net, scenario);
    return synthesize_waveforms(pre, post, scenario, net.line.f_hz, opts);
}

std::string waveforms_to_csv(const WaveformSet& waves)
{
    std::string out = "t,va,ia,iresid\n";
    for (std::size_t n = 0; n < waves.size(); ++n) {
        out += text::format_double(waves.time_of(n));
        out += ',';
        out += text::format_double(waves.samples_va[n]);
        out += ',';
        out += text::format_double(waves.samples_ia[n]);
        out += ',';
        out += text::format_double(waves.samples_iresidual[n]);
        out += '\n';
    }
    return out;
}

} // namespace hifloc::netmodel
