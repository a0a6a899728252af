#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "echorec/waveform.hpp"

namespace echorec {

/// Hann-windowed short-time Fourier transform parameters. The hop follows
/// the printed coefficient equations: H = N/4 = 512 at N = 2048.
struct StftConfig {
    size_t window_len = 2048;  // N, power of two
    size_t hop = 512;          // H, divides N
    double sample_rate = kSampleRate;

    size_t bins() const { return window_len / 2 + 1; }
    void validate() const;
};

/// chi(m, k) for frame m, bin k: frames x bins, row-major.
struct StftGrid {
    size_t frames = 0;
    size_t bins = 0;
    std::vector<std::complex<double>> values;

    const std::complex<double>& at(size_t m, size_t k) const { return values[m * bins + k]; }
    std::complex<double>& at(size_t m, size_t k) { return values[m * bins + k]; }
};

/// chi(m,k) = sum_n x(n + mH) w(n) exp(-2 pi i k n / N), periodic Hann w.
/// Frame count is floor((len - N)/H) + 1; throws TooShort below one window.
StftGrid stft(const Waveform& w, const StftConfig& cfg);

/// Frequency of bin k: k * rate / N (21.533 Hz per bin at the defaults).
double freq_coef(size_t k, const StftConfig& cfg = {});
/// Time of frame m: m * H / rate (11.61 ms per frame at the defaults).
double time_coef(size_t m, const StftConfig& cfg = {});

}  // namespace echorec
