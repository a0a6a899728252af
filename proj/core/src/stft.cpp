#include "echorec/stft.hpp"

#include <cmath>

#include "echorec/errors.hpp"
#include "echorec/fft.hpp"

namespace echorec {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

void StftConfig::validate() const {
    if (window_len == 0 || (window_len & (window_len - 1)) != 0)
        raise(ErrorCode::InvalidConfig, "window length must be a power of two");
    if (hop == 0 || window_len % hop != 0)
        raise(ErrorCode::InvalidConfig, "hop must divide the window length");
}

StftGrid stft(const Waveform& w, const StftConfig& cfg) {
    cfg.validate();
    const size_t n = cfg.window_len;
    if (w.samples.size() < n)
        raise(ErrorCode::TooShort, "input shorter than one analysis window");

    // periodic Hann
    std::vector<double> window(n);
    for (size_t i = 0; i < n; ++i)
        window[i] = 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(i) / static_cast<double>(n)));

    StftGrid grid;
    grid.frames = (w.samples.size() - n) / cfg.hop + 1;
    grid.bins = cfg.bins();
    grid.values.assign(grid.frames * grid.bins, {0.0, 0.0});

    std::vector<cplx> buf(n);
    for (size_t m = 0; m < grid.frames; ++m) {
        const size_t off = m * cfg.hop;
        for (size_t i = 0; i < n; ++i)
            buf[i] = cplx(w.samples[off + i] * window[i], 0.0);
        fft_inplace(buf, false);
        for (size_t k = 0; k < grid.bins; ++k) grid.at(m, k) = buf[k];
    }
    return grid;
}

double freq_coef(size_t k, const StftConfig& cfg) {
    return static_cast<double>(k) * cfg.sample_rate / static_cast<double>(cfg.window_len);
}

double time_coef(size_t m, const StftConfig& cfg) {
    return static_cast<double>(m) * static_cast<double>(cfg.hop) / cfg.sample_rate;
}

}  // namespace echorec
