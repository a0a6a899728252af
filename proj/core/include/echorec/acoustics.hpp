#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "echorec/impulse_response.hpp"
#include "echorec/room.hpp"
#include "echorec/vec3.hpp"
#include "echorec/waveform.hpp"

namespace echorec {

enum class UnitSystem { Metric, Imperial };

/// Total room absorption a = sum of panel area x effective absorption for one
/// octave band. Metric sabins (m^2) or imperial sabins (ft^2).
double total_absorption(const ShoeboxRoom& room, int band,
                        UnitSystem units = UnitSystem::Metric);

/// Sabine reverberation time. Imperial: T = 0.05 V/a (V in ft^3, a in
/// sabins); metric: T = 0.161 V/a. Throws ZeroAbsorption for a == 0.
double sabine_rt60(const ShoeboxRoom& room, int band, UnitSystem units = UnitSystem::Metric);

/// Mirror-image expansion of a source in a shoebox room.
struct ImageSource {
    Vec3 position;
    int order = 0;
    /// Wall-crossing sequence per axis, ordered outward from the room. The
    /// interleaving across axes (and the panel actually hit on a subdivided
    /// wall) depends on the receiver and is resolved during synthesis.
    std::array<std::vector<int>, 3> wall_sequence;
};

/// All image sources of reflection order <= `order` (the order-0 entry is the
/// source itself).
std::vector<ImageSource> image_sources(const ShoeboxRoom& room, const Vec3& source, int order);

struct IrSynthesisResult {
    ImpulseResponse ir;
    MaterialWeightMatrix weights;
};

/// w[f][m] = sum_j I_jf d_jm / sum_j I_jf over the specular taps (the
/// synthetic diffuse tail carries no material attribution).
MaterialWeightMatrix material_weight_matrix(const ImpulseResponse& ir);

/// Specular taps from image sources plus an optional Sabine-shaped seeded
/// noise tail. Per-band tap intensity is (1/d^2) * prod(1 - alpha) over the
/// bounced panels; paths through open panels are dropped (alpha = 1).
IrSynthesisResult synthesize_ir(const ShoeboxRoom& room, const SourceReceiver& sr, int order,
                                bool rt60_tail, uint64_t seed, double duration = 1.0);

/// Boundary between "early" and "late" taps, measured from the direct tap.
constexpr double kEarlyLateBoundary = 0.050;  // seconds

/// Energy fraction of the synthetic diffuse tail relative to the specular
/// reflected energy, per band.
constexpr double kTailEnergyFraction = 0.3;

/// Renders an echo recording: band-splits the tap list over the nine octave
/// bands (FFT partition, exact reconstruction), convolves with the
/// excitation, and adds exterior noise. Noise enters at
/// exterior_noise_level_db when an exterior panel is open and 10 dB lower
/// when closed; rooms without exterior panels get none. Output is exactly
/// 1 second.
Waveform render_echo(const ImpulseResponse& ir, const Waveform& excitation,
                     const ShoeboxRoom& room, PanelState window_state, uint64_t seed);

constexpr double kClosedWindowNoiseReductionDb = 10.0;

struct DopplerParams {
    double f0 = 0.0;     // transmitted frequency, Hz
    double c_s = 0.0;    // source speed
    double c_o = 0.0;    // observer speed
    double theta = 0.0;  // radians
};

/// Frequency shift f0 * (c_s / c_o) * cos(theta). The observer speed appears
/// in the denominator by definition here; callers wanting the textbook
/// medium-speed form should pass the speed of sound as c_o.
double doppler_shift(const DopplerParams& p);

/// lambda = c / f, in the unit system of c.
double wavelength(double frequency_hz, double speed);

/// Octave band partition edges used by the renderer: geometric means of
/// adjacent band centers, closed at 0 and the Nyquist frequency.
std::array<double, kNumBands + 1> band_edges(double sample_rate);

}  // namespace echorec
