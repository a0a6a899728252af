#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "echorec/waveform.hpp"

namespace echorec {

enum class SourceKind {
    PureTone,
    Chirp,
    Clap,
    White,
    Pink,
    Brownian,
    Silence,
};

SourceKind parse_source_kind(const std::string& name);  // "tone63", "chirp", ...
std::string source_kind_label(SourceKind kind, double tone_hz);

/// Pulsed excitation: a pulse_ms active segment followed by silence up to
/// period_ms. Chirps sweep 440 -> 1320 Hz across the pulse.
struct PulseSpec {
    SourceKind kind = SourceKind::PureTone;
    double tone_hz = 1000.0;
    double pulse_ms = 100.0;
    double period_ms = 1000.0;
    double amplitude = 0.8;

    void validate() const;

    static PulseSpec from_label(const std::string& label);
};

constexpr double kChirpStartHz = 440.0;
constexpr double kChirpEndHz = 1320.0;

/// One period of the pulsed source. Noise kinds are seeded and peak-scaled
/// to the spec amplitude.
Waveform generate_source(const PulseSpec& spec, uint64_t seed);

/// Non-overlapping 1.0 s frames; a trailing partial frame is dropped.
std::vector<Waveform> frame_split(const Waveform& recording);

}  // namespace echorec
