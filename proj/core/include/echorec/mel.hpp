#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "echorec/stft.hpp"
#include "echorec/waveform.hpp"

namespace echorec {

constexpr size_t kMelRows = 62;
constexpr size_t kMelCols = 25;

/// Triangular mel filterbank over [0, rate/2]. The edge filters extend to
/// the spectrum boundaries so every FFT bin contributes to at least one
/// filter.
struct MelFilterbank {
    size_t n_mels = kMelRows;
    size_t n_bins = 0;
    std::vector<double> weights;  // n_mels x n_bins, row-major

    double at(size_t mel, size_t bin) const { return weights[mel * n_bins + bin]; }

    static MelFilterbank make(size_t n_mels, const StftConfig& cfg);
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Normalized mel grid, rows = mel bands (low to high), cols = time.
struct Spectrogram {
    size_t rows = kMelRows;
    size_t cols = kMelCols;
    std::vector<double> grid;  // row-major, values in [0, 1]
    std::string frame_id;

    double at(size_t r, size_t c) const { return grid[r * cols + c]; }
};

/// |chi|^2 -> mel projection -> log(1 + p) -> average-pool the time axis
/// (edge-padded) to exactly 25 bins -> min-max normalization. An all-silence
/// frame maps to the all-zero grid.
Spectrogram mel_spectrogram(const Waveform& frame, const StftConfig& cfg,
                            const MelFilterbank& fb);

/// Pre-normalization total energy; monotone in input level, used by tests.
double mel_energy(const Waveform& frame, const StftConfig& cfg, const MelFilterbank& fb);

/// Binary grid file: magic "ECHF", u32 version, u32 rows, u32 cols, then
/// row-major float32 little-endian payload.
void write_grid_file(const std::string& path, size_t rows, size_t cols,
                     const std::vector<double>& grid);
struct GridFile {
    size_t rows = 0, cols = 0;
    std::vector<double> grid;
};
GridFile read_grid_file(const std::string& path);

}  // namespace echorec
