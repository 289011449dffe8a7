#pragma once

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace hifloc {

using Complex = std::complex<double>;

/// Phase a, b, c phasors (or sequence 0/1/2 when stated).
using PhaseSet = std::array<Complex, 3>;

namespace netmodel {

struct LineParams {
    Complex z1_per_km{0.05, 0.488};
    Complex z0_per_km{0.25, 1.45};
    double length_km = 60.0;
    double f_hz = 50.0;

    void validate() const;
};

struct SourceParams {
    Complex emf;  // line-to-neutral, V
    Complex z1;   // positive/negative-sequence, ohm
    Complex z0;   // zero-sequence, ohm

    void validate() const;
};

enum class FaultKind { PhaseAToGround };

struct FaultScenario {
    double distance_km = 0.0;
    double rf_ohm = 0.0;
    double inception_s = 0.0;
    FaultKind kind = FaultKind::PhaseAToGround;

    void validate(const LineParams& line) const;
};

/// Sending end (relay bus, source A) and an optional receiving-end source B.
/// Without source B the line is radial and open at the far end.
struct Network {
    LineParams line;
    SourceParams source_a;
    std::optional<SourceParams> source_b;
};

/// Default two-source 154 kV network.
Network default_network();

struct NetworkSolution {
    PhaseSet i_seq_fault{};       // I0, I1, I2 at the fault point
    PhaseSet v_relay_abc{};
    PhaseSet i_relay_abc{};       // flowing from bus A into the line
    Complex i_relay_residual{};   // Ia + Ib + Ic = 3 I0
};

/// Instantaneous relay-terminal records. Phasor magnitudes are used directly
/// as peak amplitudes: x(t) = Re(P e^{j 2 pi f t}).
struct WaveformSet {
    double sample_rate_hz = 0.0;
    double t0_s = 0.0;
    std::vector<double> samples_va;
    std::vector<double> samples_ia;
    std::vector<double> samples_iresidual;

    std::size_t size() const { return samples_va.size(); }
    double time_of(std::size_t index) const;
};

struct WaveformOptions {
    double sample_rate_hz = 1000.0;
    double duration_s = 0.1;
    double t0_s = 0.0;
    /// Adds an exponentially decaying offset to the currents after inception,
    /// with the L/R time constant of the faulted loop.
    bool dc_offset = false;
    double dc_time_constant_s = 0.0;
};

/// Symmetrical-component transforms, ordered (0, 1, 2) <-> (a, b, c).
PhaseSet sequence_to_phase(const PhaseSet& seq);
PhaseSet phase_to_sequence(const PhaseSet& abc);

/// Balanced load-flow state of the healthy line. Throws NoLoadFlow when no
/// current circulates, since the load point V/I is then undefined.
NetworkSolution prefault_state(const Network& net);

NetworkSolution solve_slg_fault(const Network& net, const FaultScenario& scenario);

/// Time constant (s) of the faulted sequence loop seen from the fault point.
double faulted_loop_time_constant(const Network& net, const FaultScenario& scenario);

WaveformSet synthesize_waveforms(const NetworkSolution& pre, const NetworkSolution& post,
                                 const FaultScenario& scenario, double f_hz,
                                 const WaveformOptions& options);

/// Convenience wrapper: pre-fault state (zero when no load flows), fault
/// solution, and sampled records for one scenario.
WaveformSet simulate_scenario(const Network& net, const FaultScenario& scenario,
                              const WaveformOptions& options);

/// CSV with header `t,va,ia,iresid`.
std::string waveforms_to_csv(const WaveformSet& waves);

} // namespace netmodel
} // namespace hifloc
