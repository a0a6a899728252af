#include "echorec/mel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "echorec/errors.hpp"

namespace echorec {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank MelFilterbank::make(size_t n_mels, const StftConfig& cfg) {
    MelFilterbank fb;
    fb.n_mels = n_mels;
    fb.n_bins = cfg.bins();
    fb.weights.assign(n_mels * fb.n_bins, 0.0);

    const double f_max = cfg.sample_rate / 2.0;
    const double mel_max = hz_to_mel(f_max);
    // n_mels triangles need n_mels + 2 support points
    std::vector<double> pts(n_mels + 2);
    for (size_t i = 0; i < pts.size(); ++i)
        pts[i] = mel_to_hz(mel_max * static_cast<double>(i) / static_cast<double>(n_mels + 1));

    for (size_t m = 0; m < n_mels; ++m) {
        const double lo = pts[m], mid = pts[m + 1], hi = pts[m + 2];
        for (size_t k = 0; k < fb.n_bins; ++k) {
            const double f = freq_coef(k, cfg);
            double wgt = 0.0;
            if (m == 0 && f <= mid) wgt = 1.0;                // plateau down to DC
            else if (m + 1 == n_mels && f >= mid) wgt = 1.0;  // plateau up to Nyquist
            else if (f >= lo && f <= mid && mid > lo) wgt = (f - lo) / (mid - lo);
            else if (f > mid && f < hi && hi > mid) wgt = (hi - f) / (hi - mid);
            fb.weights[m * fb.n_bins + k] = wgt;
        }
    }
    return fb;
}

namespace {

std::vector<double> mel_log_power(const Waveform& frame, const StftConfig& cfg,
                                  const MelFilterbank& fb, size_t& frames_out) {
    const StftGrid grid = stft(frame, cfg);
    frames_out = grid.frames;
    std::vector<double> out(fb.n_mels * grid.frames, 0.0);
    std::vector<double> power(grid.bins);
    for (size_t m = 0; m < grid.frames; ++m) {
        for (size_t k = 0; k < grid.bins; ++k) {
            const auto& c = grid.at(m, k);
            power[k] = c.real() * c.real() + c.imag() * c.imag();
        }
        for (size_t mel = 0; mel < fb.n_mels; ++mel) {
            double acc = 0.0;
            const double* w = &fb.weights[mel * fb.n_bins];
            for (size_t k = 0; k < grid.bins; ++k) acc += w[k] * power[k];
            out[mel * grid.frames + m] = std::log1p(acc);
        }
    }
    return out;
}

}  // namespace

Spectrogram mel_spectrogram(const Waveform& frame, const StftConfig& cfg,
                            const MelFilterbank& fb) {
    size_t frames = 0;
    const std::vector<double> lp = mel_log_power(frame, cfg, fb, frames);

    // average-pool the time axis to kMelCols, padding with the last frame
    const size_t group = (frames + kMelCols - 1) / kMelCols;

    Spectrogram s;
    s.rows = fb.n_mels;
    s.cols = kMelCols;
    s.grid.assign(s.rows * s.cols, 0.0);
    for (size_t mel = 0; mel < fb.n_mels; ++mel) {
        const double* row = &lp[mel * frames];
        for (size_t c = 0; c < kMelCols; ++c) {
            double acc = 0.0;
            for (size_t g = 0; g < group; ++g) {
                const size_t idx = c * group + g;
                acc += row[std::min(idx, frames - 1)];
            }
            s.grid[mel * kMelCols + c] = acc / static_cast<double>(group);
        }
    }

    double lo = s.grid[0], hi = s.grid[0];
    for (double v : s.grid) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi - lo > 0.0) {
        const double inv = 1.0 / (hi - lo);
        for (double& v : s.grid) v = (v - lo) * inv;
    } else {
        std::fill(s.grid.begin(), s.grid.end(), 0.0);
    }
    return s;
}

double mel_energy(const Waveform& frame, const StftConfig& cfg, const MelFilterbank& fb) {
    size_t frames = 0;
    const std::vector<double> lp = mel_log_power(frame, cfg, fb, frames);
    double acc = 0.0;
    for (double v : lp) acc += v;
    return acc;
}

void write_grid_file(const std::string& path, size_t rows, size_t cols,
                     const std::vector<double>& grid) {
    if (grid.size() != rows * cols)
        raise(ErrorCode::ShapeMismatch, "grid size does not match rows*cols");
    std::ofstream f(path, std::ios::binary);
    if (!f) raise(ErrorCode::IoError, "cannot open for write: " + path);
    f.write("ECHF", 4);
    const uint32_t header[3] = {1u, static_cast<uint32_t>(rows), static_cast<uint32_t>(cols)};
    f.write(reinterpret_cast<const char*>(header), sizeof(header));
    std::vector<float> payload(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) payload[i] = static_cast<float>(grid[i]);
    f.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!f) raise(ErrorCode::IoError, "short write: " + path);
}

GridFile read_grid_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(ErrorCode::IoError, "cannot open: " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "ECHF", 4) != 0)
        raise(ErrorCode::ParseError, path + ": bad grid file magic");
    uint32_t header[3];
    f.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!f) raise(ErrorCode::ParseError, path + ": truncated header");
    if (header[0] != 1u)
        raise(ErrorCode::UnsupportedVersion, path + ": unsupported grid file version");
    GridFile g;
    g.rows = header[1];
    g.cols = header[2];
    std::vector<float> payload(g.rows * g.cols);
    f.read(reinterpret_cast<char*>(payload.data()),
           static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!f) raise(ErrorCode::ParseError, path + ": truncated payload");
    g.grid.assign(payload.begin(), payload.end());
    return g;
}

}  // namespace echorec
