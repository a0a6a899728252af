#include "echorec/sources.hpp"

#include <cmath>

#include "echorec/errors.hpp"
#include "echorec/fft.hpp"
#include "echorec/rng.hpp"

namespace echorec {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

void peak_scale(std::vector<double>& v, double amplitude) {
    double pk = 0.0;
    for (double s : v) pk = std::max(pk, std::fabs(s));
    if (pk > 0.0) {
        const double g = amplitude / pk;
        for (double& s : v) s *= g;
    }
}
}  // namespace

SourceKind parse_source_kind(const std::string& name) {
    if (name.rfind("tone", 0) == 0 || name.rfind("puretone", 0) == 0) return SourceKind::PureTone;
    if (name == "chirp") return SourceKind::Chirp;
    if (name == "clap") return SourceKind::Clap;
    if (name == "white") return SourceKind::White;
    if (name == "pink") return SourceKind::Pink;
    if (name == "brownian" || name == "brown") return SourceKind::Brownian;
    if (name == "silence") return SourceKind::Silence;
    raise(ErrorCode::UnknownSourceKind, "unknown source kind: " + name);
}

std::string source_kind_label(SourceKind kind, double tone_hz) {
    switch (kind) {
        case SourceKind::PureTone: return "tone" + std::to_string(static_cast<int>(tone_hz));
        case SourceKind::Chirp: return "chirp";
        case SourceKind::Clap: return "clap";
        case SourceKind::White: return "white";
        case SourceKind::Pink: return "pink";
        case SourceKind::Brownian: return "brownian";
        case SourceKind::Silence: return "silence";
    }
    return "?";
}

PulseSpec PulseSpec::from_label(const std::string& label) {
    PulseSpec spec;
    spec.kind = parse_source_kind(label);
    if (spec.kind == SourceKind::PureTone) {
        const size_t digits = label.find_first_of("0123456789");
        if (digits == std::string::npos)
            raise(ErrorCode::UnknownSourceKind, "pure tone label needs a frequency: " + label);
        spec.tone_hz = std::stod(label.substr(digits));
    }
    return spec;
}

void PulseSpec::validate() const {
    if (pulse_ms <= 0.0 || period_ms <= 0.0 || pulse_ms >= period_ms)
        raise(ErrorCode::InvalidConfig, "require 0 < pulse_ms < period_ms");
    if (amplitude <= 0.0 || amplitude > 1.0)
        raise(ErrorCode::InvalidConfig, "amplitude must be in (0, 1]");
    if (kind == SourceKind::PureTone && (tone_hz <= 0.0 || tone_hz >= kSampleRate / 2.0))
        raise(ErrorCode::InvalidConfig, "tone frequency must be in (0, Nyquist)");
}

Waveform generate_source(const PulseSpec& spec, uint64_t seed) {
    spec.validate();
    const size_t n = static_cast<size_t>(std::llround(spec.period_ms / 1000.0 * kSampleRate));
    const size_t active = static_cast<size_t>(std::llround(spec.pulse_ms / 1000.0 * kSampleRate));

    Waveform w;
    w.rate = kSampleRate;
    w.samples.assign(n, 0.0);

    switch (spec.kind) {
        case SourceKind::Silence:
            break;
        case SourceKind::PureTone: {
            for (size_t i = 0; i < active; ++i) {
                const double t = static_cast<double>(i) / kSampleRate;
                w.samples[i] = spec.amplitude * std::sin(kTwoPi * spec.tone_hz * t);
            }
            break;
        }
        case SourceKind::Chirp: {
            const double T = spec.pulse_ms / 1000.0;
            const double slope = (kChirpEndHz - kChirpStartHz) / T;
            for (size_t i = 0; i < active; ++i) {
                const double t = static_cast<double>(i) / kSampleRate;
                const double phase = kTwoPi * (kChirpStartHz * t + 0.5 * slope * t * t);
                w.samples[i] = spec.amplitude * std::sin(phase);
            }
            break;
        }
        case SourceKind::Clap: {
            // band-limited impulse: Hann-windowed sinc, ~4 ms wide
            const double t0 = 0.005;
            const double half_width = 0.002;
            const double f_c = 15000.0;
            for (size_t i = 0; i < active; ++i) {
                const double t = static_cast<double>(i) / kSampleRate;
                const double dt = t - t0;
                if (std::fabs(dt) > half_width) continue;
                const double x = kTwoPi * f_c * dt;
                const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
                const double win = 0.5 * (1.0 + std::cos(kPi * dt / half_width));
                w.samples[i] = spec.amplitude * sinc * win;
            }
            break;
        }
        case SourceKind::White: {
            Rng rng(seed);
            std::vector<double> g(active);
            for (auto& v : g) v = rng.gaussian();
            peak_scale(g, spec.amplitude);
            std::copy(g.begin(), g.end(), w.samples.begin());
            break;
        }
        case SourceKind::Pink: {
            // white spectrum shaped by 1/sqrt(f), then truncated to the pulse
            const size_t nfft = next_pow2(active);
            Rng rng(seed);
            std::vector<double> white(nfft);
            for (auto& v : white) v = rng.gaussian();
            std::vector<cplx> spec_bins = fft_real(white, nfft);
            spec_bins[0] = 0.0;
            for (size_t k = 1; k <= nfft / 2; ++k) {
                const double gk = 1.0 / std::sqrt(static_cast<double>(k));
                spec_bins[k] *= gk;
                if (k != nfft / 2) spec_bins[nfft - k] *= gk;
            }
            fft_inplace(spec_bins, true);
            std::vector<double> g(active);
            for (size_t i = 0; i < active; ++i) g[i] = spec_bins[i].real();
            peak_scale(g, spec.amplitude);
            std::copy(g.begin(), g.end(), w.samples.begin());
            break;
        }
        case SourceKind::Brownian: {
            Rng rng(seed);
            std::vector<double> g(active);
            double acc = 0.0, mean = 0.0;
            for (auto& v : g) {
                acc += rng.gaussian();
                v = acc;
                mean += acc;
            }
            mean /= static_cast<double>(active);
            for (auto& v : g) v -= mean;
            peak_scale(g, spec.amplitude);
            std::copy(g.begin(), g.end(), w.samples.begin());
            break;
        }
    }

    return w;
}

std::vector<Waveform> frame_split(const Waveform& recording) {
    if (recording.rate != kSampleRate)
        raise(ErrorCode::SampleRateMismatch, "frame_split expects 44100 Hz input");
    const size_t frame_len = static_cast<size_t>(kSampleRate);
    const size_t n_frames = recording.samples.size() / frame_len;
    std::vector<Waveform> frames;
    frames.reserve(n_frames);
    for (size_t f = 0; f < n_frames; ++f) {
        Waveform frame;
        frame.rate = kSampleRate;
        frame.samples.assign(recording.samples.begin() + static_cast<long>(f * frame_len),
                             recording.samples.begin() + static_cast<long>((f + 1) * frame_len));
        frames.push_back(std::move(frame));
    }
    return frames;
}

}  // namespace echorec
