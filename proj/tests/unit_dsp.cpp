#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>

#include "echorec/errors.hpp"
#include "echorec/fft.hpp"
#include "echorec/material.hpp"
#include "echorec/mel.hpp"
#include "echorec/sources.hpp"
#include "echorec/stft.hpp"

using namespace echorec;

namespace {

constexpr double kPi = 3.14159265358979323846;

int zero_crossings(const std::vector<double>& x, size_t from, size_t to) {
    int n = 0;
    for (size_t i = from + 1; i < to; ++i)
        if (x[i - 1] * x[i] < 0.0) ++n;
    return n;
}

/// Naive DFT straight from the coefficient equation, for one frame.
std::vector<cplx> naive_frame_dft(const std::vector<double>& x, size_t offset, size_t n,
                                  size_t hop, size_t m) {
    std::vector<cplx> out(n / 2 + 1);
    for (size_t k = 0; k <= n / 2; ++k) {
        cplx acc(0.0, 0.0);
        for (size_t i = 0; i < n; ++i) {
            const double w = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) /
                                                   static_cast<double>(n)));
            const double angle = -2.0 * kPi * static_cast<double>(k) * static_cast<double>(i) /
                                 static_cast<double>(n);
            acc += x[offset + m * hop + i] * w * cplx(std::cos(angle), std::sin(angle));
        }
        out[k] = acc;
    }
    return out;
}

/// Instantaneous frequency via the analytic signal (FFT Hilbert transform).
double instantaneous_frequency(const std::vector<double>& x, size_t begin, size_t len,
                               size_t at) {
    const size_t nfft = next_pow2(len);
    std::vector<cplx> spec = fft_real(std::vector<double>(x.begin() + static_cast<long>(begin),
                                                          x.begin() + static_cast<long>(begin + len)),
                                      nfft);
    for (size_t k = 1; k < nfft / 2; ++k) spec[k] *= 2.0;
    for (size_t k = nfft / 2 + 1; k < nfft; ++k) spec[k] = 0.0;
    fft_inplace(spec, true);
    const cplx rot = spec[at + 1] * std::conj(spec[at - 1]);
    const double dphi = std::arg(rot);
    return dphi * kSampleRate / (4.0 * kPi);
}

Waveform tone(double hz, uint64_t seed = 1) {
    PulseSpec spec;
    spec.kind = SourceKind::PureTone;
    spec.tone_hz = hz;
    return generate_source(spec, seed);
}

}  // namespace

TEST_CASE("sources: silence is all-zero, one period long") {
    PulseSpec spec;
    spec.kind = SourceKind::Silence;
    const Waveform w = generate_source(spec, 3);
    CHECK(w.samples.size() == 44100);
    for (double v : w.samples) CHECK(v == 0.0);
}

TEST_CASE("sources: 1 kHz pulse has ~200 zero crossings in its 100 ms") {
    const Waveform w = tone(1000.0);
    const int n = zero_crossings(w.samples, 0, 4410);
    CHECK(n >= 195);
    CHECK(n <= 205);
    // and silence afterwards
    for (size_t i = 4410; i < w.samples.size(); ++i) CHECK(w.samples[i] == 0.0);
}

TEST_CASE("sources: chirp passes 880 Hz at its midpoint") {
    PulseSpec spec;
    spec.kind = SourceKind::Chirp;
    const Waveform w = generate_source(spec, 3);
    const double f = instantaneous_frequency(w.samples, 0, 4410, 2205);
    CHECK(std::fabs(f - 880.0) < 5.0);
    // endpoints bracket the sweep
    const double f_lo = instantaneous_frequency(w.samples, 0, 4410, 300);
    const double f_hi = instantaneous_frequency(w.samples, 0, 4410, 4100);
    CHECK(f_lo < f);
    CHECK(f < f_hi);
}

TEST_CASE("sources: amplitudes respect the spec bound") {
    for (SourceKind kind : {SourceKind::PureTone, SourceKind::Chirp, SourceKind::Clap,
                            SourceKind::White, SourceKind::Pink, SourceKind::Brownian}) {
        PulseSpec spec;
        spec.kind = kind;
        const Waveform w = generate_source(spec, 11);
        CHECK(w.peak() <= 0.8 + 1e-12);
        CHECK(w.peak() > 0.0);
        w.validate();
    }
}

TEST_CASE("sources: seeded noise is deterministic and seed-sensitive") {
    PulseSpec spec;
    spec.kind = SourceKind::Pink;
    const Waveform a = generate_source(spec, 5);
    const Waveform b = generate_source(spec, 5);
    const Waveform c = generate_source(spec, 6);
    CHECK(std::memcmp(a.samples.data(), b.samples.data(), a.samples.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(a.samples.data(), c.samples.data(), a.samples.size() * sizeof(double)) != 0);
}

TEST_CASE("sources: unknown source label raises") {
    CHECK_THROWS_AS(parse_source_kind("warble"), Error);
    try {
        parse_source_kind("warble");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownSourceKind);
    }
}

TEST_CASE("frame_split: whole frames only") {
    Waveform rec;
    rec.rate = kSampleRate;
    rec.samples.assign(3 * 44100, 0.0);
    for (size_t i = 0; i < rec.samples.size(); ++i)
        rec.samples[i] = std::sin(0.001 * static_cast<double>(i)) * 0.5;
    CHECK(frame_split(rec).size() == 3);

    rec.samples.resize(static_cast<size_t>(2.5 * 44100));
    CHECK(frame_split(rec).size() == 2);

    // concatenation reproduces the first two seconds bit-exactly
    const auto frames = frame_split(rec);
    for (size_t f = 0; f < frames.size(); ++f)
        for (size_t i = 0; i < 44100; ++i)
            CHECK(frames[f].samples[i] == rec.samples[f * 44100 + i]);
}

TEST_CASE("stft: all-zero input gives an all-zero grid") {
    Waveform w;
    w.rate = kSampleRate;
    w.samples.assign(8192, 0.0);
    const StftGrid g = stft(w, {});
    for (const auto& c : g.values) {
        CHECK(c.real() == 0.0);
        CHECK(c.imag() == 0.0);
    }
}

TEST_CASE("stft: constant input hits the periodic Hann sum at DC") {
    Waveform w;
    w.rate = kSampleRate;
    w.samples.assign(4096, 1.0);
    const StftGrid g = stft(w, {});
    // direct summation oracle: sum of the periodic Hann window is N/2
    double hann_sum = 0.0;
    for (size_t i = 0; i < 2048; ++i)
        hann_sum += 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) / 2048.0));
    CHECK(hann_sum == doctest::Approx(1024.0).epsilon(1e-12));
    for (size_t m = 0; m < g.frames; ++m)
        CHECK(g.at(m, 0).real() == doctest::Approx(1024.0).epsilon(1e-9));
}

TEST_CASE("stft: frame count follows floor((len - N)/H) + 1") {
    Waveform w;
    w.rate = kSampleRate;
    w.samples.assign(44100, 0.0);
    CHECK(stft(w, {}).frames == 83);
    w.samples.assign(2048, 0.0);
    CHECK(stft(w, {}).frames == 1);
    w.samples.assign(2047, 0.0);
    CHECK_THROWS_AS(stft(w, {}), Error);
}

TEST_CASE("stft: matches the naive DFT oracle on a 1 kHz tone") {
    const Waveform w = tone(1000.0);
    const StftGrid g = stft(w, {});
    for (size_t m : {size_t(0), size_t(1)}) {
        const auto want = naive_frame_dft(w.samples, 0, 2048, 512, m);
        for (size_t k = 0; k < want.size(); ++k) {
            CHECK(std::fabs(g.at(m, k).real() - want[k].real()) < 1e-6);
            CHECK(std::fabs(g.at(m, k).imag() - want[k].imag()) < 1e-6);
        }
    }
    // spectral peak lands on round(1000 / 21.533) = 46
    size_t best = 0;
    double best_mag = -1.0;
    for (size_t k = 0; k < g.bins; ++k) {
        const double mag = std::abs(g.at(0, k));
        if (mag > best_mag) {
            best_mag = mag;
            best = k;
        }
    }
    CHECK(best == 46);
}

TEST_CASE("stft: linear in the input") {
    const Waveform w = tone(500.0);
    Waveform scaled = w;
    for (double& v : scaled.samples) v *= 0.37;
    const StftGrid a = stft(w, {});
    const StftGrid b = stft(scaled, {});
    for (size_t i = 0; i < a.values.size(); ++i) {
        CHECK(std::abs(b.values[i] - 0.37 * a.values[i]) <=
              1e-9 * std::max(1.0, std::abs(a.values[i])));
    }
}

TEST_CASE("coefficient equations") {
    CHECK(freq_coef(1) == doctest::Approx(21.533203125).epsilon(1e-12));
    CHECK(freq_coef(1) == doctest::Approx(21.5).epsilon(0.01));
    CHECK(time_coef(1) == doctest::Approx(512.0 / 44100.0).epsilon(1e-12));
    CHECK(time_coef(1) == doctest::Approx(0.012).epsilon(0.05));
    CHECK(freq_coef(0) == 0.0);
    CHECK(time_coef(0) == 0.0);
}

TEST_CASE("mel: silence maps to the all-zero grid") {
    PulseSpec spec;
    spec.kind = SourceKind::Silence;
    const Waveform w = generate_source(spec, 1);
    const MelFilterbank fb = MelFilterbank::make(kMelRows, {});
    const Spectrogram s = mel_spectrogram(w, {}, fb);
    CHECK(s.rows == 62);
    CHECK(s.cols == 25);
    for (double v : s.grid) CHECK(v == 0.0);
}

TEST_CASE("mel: every FFT bin is covered by at least one filter") {
    const MelFilterbank fb = MelFilterbank::make(kMelRows, {});
    for (size_t k = 0; k < fb.n_bins; ++k) {
        double col = 0.0;
        for (size_t m = 0; m < fb.n_mels; ++m) col += fb.at(m, k);
        CHECK(col > 0.0);
    }
    for (double w : fb.weights) CHECK(w >= 0.0);
}

TEST_CASE("mel: shape contract and normalization bounds for every source kind") {
    const MelFilterbank fb = MelFilterbank::make(kMelRows, {});
    for (SourceKind kind : {SourceKind::PureTone, SourceKind::Chirp, SourceKind::Clap,
                            SourceKind::White, SourceKind::Pink, SourceKind::Brownian}) {
        PulseSpec spec;
        spec.kind = kind;
        const Waveform w = generate_source(spec, 21);
        const Spectrogram s = mel_spectrogram(w, {}, fb);
        CHECK(s.grid.size() == 62 * 25);
        const double lo = *std::min_element(s.grid.begin(), s.grid.end());
        const double hi = *std::max_element(s.grid.begin(), s.grid.end());
        CHECK(lo == 0.0);
        CHECK(hi == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("mel: band-tone argmax row is strictly monotone in frequency") {
    const MelFilterbank fb = MelFilterbank::make(kMelRows, {});
    int prev_row = -1;
    for (double hz : kBandCenters) {
        const Spectrogram s = mel_spectrogram(tone(hz), {}, fb);
        // strongest row summed over time
        int best_row = 0;
        double best = -1.0;
        for (size_t r = 0; r < s.rows; ++r) {
            double acc = 0.0;
            for (size_t c = 0; c < s.cols; ++c) acc += s.at(r, c);
            if (acc > best) {
                best = acc;
                best_row = static_cast<int>(r);
            }
        }
        CHECK(best_row > prev_row);
        prev_row = best_row;
    }
}

TEST_CASE("mel: pre-normalization energy is monotone in input level") {
    const MelFilterbank fb = MelFilterbank::make(kMelRows, {});
    const Waveform w = tone(1000.0);
    double prev = -1.0;
    for (double gain : {0.1, 0.3, 0.6, 1.0}) {
        Waveform scaled = w;
        for (double& v : scaled.samples) v *= gain;
        const double e = mel_energy(scaled, {}, fb);
        CHECK(e > prev);
        prev = e;
    }
}

TEST_CASE("mel: deterministic for seeded noise sources") {
    const MelFilterbank fb = MelFilterbank::make(kMelRows, {});
    PulseSpec spec;
    spec.kind = SourceKind::White;
    const Spectrogram a = mel_spectrogram(generate_source(spec, 9), {}, fb);
    const Spectrogram b = mel_spectrogram(generate_source(spec, 9), {}, fb);
    CHECK(std::memcmp(a.grid.data(), b.grid.data(), a.grid.size() * sizeof(double)) == 0);
}

TEST_CASE("grid file: round trip and error paths") {
    const std::string path = std::string(ECHOREC_TMP_DIR) + "/grid_roundtrip.grid";
    std::vector<double> grid(62 * 25);
    for (size_t i = 0; i < grid.size(); ++i) grid[i] = static_cast<double>(i % 97) / 97.0;
    write_grid_file(path, 62, 25, grid);
    const GridFile g = read_grid_file(path);
    CHECK(g.rows == 62);
    CHECK(g.cols == 25);
    for (size_t i = 0; i < grid.size(); ++i)
        CHECK(std::fabs(g.grid[i] - grid[i]) < 1e-7);  // float32 payload

    CHECK_THROWS_AS(read_grid_file(std::string(ECHOREC_TMP_DIR) + "/missing.grid"), Error);
}
