#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace echorec {

constexpr double kSampleRate = 44100.0;

/// Mono audio buffer. Samples live in [-1, 1].
struct Waveform {
    std::vector<double> samples;
    double rate = kSampleRate;

    double duration() const { return static_cast<double>(samples.size()) / rate; }
    double rms() const;
    double peak() const;

    void validate() const;
};

/// Rounds samples through the 16-bit PCM grid, modeling the recording chain.
Waveform quantize16(const Waveform& w);

/// WAV I/O: mono, 44100 Hz, 16-bit PCM, little-endian.
void write_wav(const std::string& path, const Waveform& w);
Waveform read_wav(const std::string& path);

}  // namespace echorec
