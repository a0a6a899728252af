#include "echorec/acoustics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "echorec/errors.hpp"
#include "echorec/fft.hpp"
#include "echorec/rng.hpp"

namespace echorec {

namespace {

constexpr double kSqFtPerSqM = kFeetPerMeter * kFeetPerMeter;
constexpr double kCuFtPerCuM = kSqFtPerSqM * kFeetPerMeter;

void check_band(int band) {
    if (band < 0 || band >= kNumBands)
        raise(ErrorCode::InvalidConfig, "band index out of range: " + std::to_string(band));
}

double axis_get(const Vec3& v, int axis) { return axis == 0 ? v.x : (axis == 1 ? v.y : v.z); }

// Folds an unfolded coordinate back into [0, d] (triangle wave, period 2d).
double fold_coord(double u, double d) {
    double m = std::fmod(u, 2.0 * d);
    if (m < 0.0) m += 2.0 * d;
    return m <= d ? m : 2.0 * d - m;
}

struct AxisImage {
    double pos;
    int reflections;
    std::vector<int> crossings;  // integers k with the wall plane at k*d, ordered outward
};

// All 1-D images of s in [0, d] with reflection count <= max_order.
// Positions are eps*s + 2*i*d; the crossing list is receiver-independent
// because both endpoints live in (0, d).
std::vector<AxisImage> axis_images(double s, double d, int max_order) {
    std::vector<AxisImage> out;
    for (int eps = 1; eps >= -1; eps -= 2) {
        const int imax = max_order + 1;
        for (int i = -imax; i <= imax; ++i) {
            const int n = eps > 0 ? 2 * std::abs(i) : std::abs(2 * i - 1);
            if (n > max_order) continue;
            AxisImage img;
            img.pos = eps * s + 2.0 * i * d;
            img.reflections = n;
            if (img.pos > d) {
                const int m = static_cast<int>(std::floor(img.pos / d));
                for (int k = 1; k <= m; ++k) img.crossings.push_back(k);
            } else if (img.pos < 0.0) {
                const int m = static_cast<int>(std::floor(img.pos / d));
                for (int k = 0; k >= m + 1; --k) img.crossings.push_back(k);
            }
            out.push_back(std::move(img));
        }
    }
    return out;
}

int crossing_wall(int axis, int k) {
    const bool low = (k % 2) == 0;
    return axis * 2 + (low ? 0 : 1);
}

}  // namespace

const char* tap_kind_name(TapKind k) {
    switch (k) {
        case TapKind::Direct: return "direct";
        case TapKind::Early: return "early";
        case TapKind::Late: return "late";
    }
    return "?";
}

void ImpulseResponse::validate() const {
    int directs = 0;
    double prev = -1.0;
    for (const auto& t : taps) {
        if (t.delay < prev) raise(ErrorCode::InvalidConfig, "IR taps not sorted by delay");
        prev = t.delay;
        for (double v : t.intensity)
            if (v < 0.0) raise(ErrorCode::InvalidConfig, "negative tap intensity");
        if (t.kind == TapKind::Direct) ++directs;
    }
    if (!taps.empty()) {
        if (directs != 1) raise(ErrorCode::InvalidConfig, "IR must have exactly one direct tap");
        if (taps.front().kind != TapKind::Direct)
            raise(ErrorCode::InvalidConfig, "direct tap must carry the minimum delay");
    }
}

std::array<double, 3> ImpulseResponse::energy_by_kind() const {
    std::array<double, 3> out{0.0, 0.0, 0.0};
    for (const auto& t : taps) out[static_cast<size_t>(t.kind)] += t.total_intensity();
    return out;
}

double total_absorption(const ShoeboxRoom& room, int band, UnitSystem units) {
    check_band(band);
    double a = 0.0;
    for (const auto& p : room.panels) {
        const MaterialSpec& m = room.materials[static_cast<size_t>(p.material)];
        a += p.area() * p.effective_absorption(m, band);
    }
    return units == UnitSystem::Imperial ? a * kSqFtPerSqM : a;
}

double sabine_rt60(const ShoeboxRoom& room, int band, UnitSystem units) {
    const double a = total_absorption(room, band, units);
    if (a <= 0.0)
        raise(ErrorCode::ZeroAbsorption,
              "room has zero absorption in band " + std::to_string(band));
    const double v_m3 = room.dims.x * room.dims.y * room.dims.z;
    if (units == UnitSystem::Imperial) return 0.05 * (v_m3 * kCuFtPerCuM) / a;
    return 0.161 * v_m3 / a;
}

std::vector<ImageSource> image_sources(const ShoeboxRoom& room, const Vec3& source, int order) {
    if (order < 0) raise(ErrorCode::InvalidConfig, "image source order must be >= 0");
    const double d[3] = {room.dims.x, room.dims.y, room.dims.z};
    std::array<std::vector<AxisImage>, 3> per_axis;
    for (int a = 0; a < 3; ++a)
        per_axis[static_cast<size_t>(a)] = axis_images(axis_get(source, a), d[a], order);

    std::vector<ImageSource> out;
    for (const auto& ix : per_axis[0]) {
        if (ix.reflections > order) continue;
        for (const auto& iy : per_axis[1]) {
            if (ix.reflections + iy.reflections > order) continue;
            for (const auto& iz : per_axis[2]) {
                const int total = ix.reflections + iy.reflections + iz.reflections;
                if (total > order) continue;
                ImageSource img;
                img.position = {ix.pos, iy.pos, iz.pos};
                img.order = total;
                const AxisImage* ax[3] = {&ix, &iy, &iz};
                for (int a = 0; a < 3; ++a)
                    for (int k : ax[a]->crossings)
                        img.wall_sequence[static_cast<size_t>(a)].push_back(crossing_wall(a, k));
                out.push_back(std::move(img));
            }
        }
    }
    std::sort(out.begin(), out.end(), [&](const ImageSource& a, const ImageSource& b) {
        if (a.order != b.order) return a.order < b.order;
        const double da = (a.position - source).norm(), db = (b.position - source).norm();
        if (da != db) return da < db;
        if (a.position.x != b.position.x) return a.position.x < b.position.x;
        if (a.position.y != b.position.y) return a.position.y < b.position.y;
        return a.position.z < b.position.z;
    });
    return out;
}

namespace {

// Resolves one image source against a receiver: ordered wall hits with exact
// hit points, mapped to panels. Returns false if the path dies (open panel).
bool trace_path(const ShoeboxRoom& room, const Vec3& receiver, const Vec3& source,
                const ImageSource& img, std::array<double, kNumBands>& band_gain,
                std::vector<std::pair<int, int>>& bounce_counts) {
    band_gain.fill(1.0);
    bounce_counts.clear();
    if (img.order == 0) return true;

    const double dims[3] = {room.dims.x, room.dims.y, room.dims.z};
    struct Hit {
        double s;
        int axis;
        double plane;  // unfolded crossing coordinate k*d
    };
    std::vector<Hit> hits;
    for (int a = 0; a < 3; ++a) {
        const double r = axis_get(receiver, a);
        const double p = axis_get(img.position, a);
        const double dir = p - r;
        // recover the k list from the unfolded endpoints
        if (p > dims[a]) {
            const int m = static_cast<int>(std::floor(p / dims[a]));
            for (int k = 1; k <= m; ++k)
                hits.push_back({(k * dims[a] - r) / dir, a, k * dims[a]});
        } else if (p < 0.0) {
            const int m = static_cast<int>(std::floor(p / dims[a]));
            for (int k = 0; k >= m + 1; --k)
                hits.push_back({(k * dims[a] - r) / dir, a, k * dims[a]});
        }
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.s < b.s; });

    std::map<int, int> counts;
    for (const auto& h : hits) {
        const Vec3 unfolded = receiver + (img.position - receiver) * h.s;
        Vec3 folded{fold_coord(unfolded.x, dims[0]), fold_coord(unfolded.y, dims[1]),
                    fold_coord(unfolded.z, dims[2])};
        const int k = static_cast<int>(std::llround(h.plane / dims[h.axis]));
        const int wall = crossing_wall(h.axis, k);
        const auto [u, v] = ShoeboxRoom::wall_uv(wall, folded);
        const SurfacePanel* panel = room.panel_at(wall, u, v);
        if (!panel)
            raise(ErrorCode::InvalidConfig, "reflection point not covered by any panel; "
                                            "room walls must be fully tiled");
        if (panel->state == PanelState::Open) return false;  // fully absorbed
        const MaterialSpec& m = room.materials[static_cast<size_t>(panel->material)];
        for (int b = 0; b < kNumBands; ++b)
            band_gain[static_cast<size_t>(b)] *= 1.0 - m.absorption[static_cast<size_t>(b)];
        counts[panel->material] += 1;
    }
    (void)source;
    bounce_counts.assign(counts.begin(), counts.end());
    return true;
}

}  // namespace

IrSynthesisResult synthesize_ir(const ShoeboxRoom& room, const SourceReceiver& sr, int order,
                                bool rt60_tail, uint64_t seed, double duration) {
    if (order < 1) raise(ErrorCode::InvalidConfig, "synthesis order must be >= 1");
    room.validate_for_simulation();
    sr.validate(room);

    IrSynthesisResult result;
    ImpulseResponse& ir = result.ir;
    ir.sample_rate = kSampleRate;
    ir.duration = duration;
    for (const auto& m : room.materials) ir.material_names.push_back(m.name);

    const double c = room.speed_of_sound;
    const std::vector<ImageSource> images = image_sources(room, sr.source_pos, order);

    double direct_delay = distance(sr.source_pos, sr.receiver_pos) / c;
    std::array<double, kNumBands> band_gain;
    std::vector<std::pair<int, int>> bounces;
    for (const auto& img : images) {
        const double dist = distance(img.position, sr.receiver_pos);
        if (dist <= 0.0)
            raise(ErrorCode::InvalidConfig, "source and receiver coincide");
        const double delay = dist / c;
        if (delay >= duration) continue;
        if (!trace_path(room, sr.receiver_pos, sr.source_pos, img, band_gain, bounces)) continue;
        IrTap tap;
        tap.delay = delay;
        const double spread = 1.0 / (dist * dist);
        for (int b = 0; b < kNumBands; ++b)
            tap.intensity[static_cast<size_t>(b)] = spread * band_gain[static_cast<size_t>(b)];
        tap.bounce_counts = bounces;
        if (img.order == 0) {
            tap.kind = TapKind::Direct;
            direct_delay = delay;
        } else {
            tap.kind = TapKind::Early;  // provisional; relabeled after sorting
        }
        ir.taps.push_back(std::move(tap));
    }

    std::sort(ir.taps.begin(), ir.taps.end(),
              [](const IrTap& a, const IrTap& b) { return a.delay < b.delay; });
    for (auto& t : ir.taps) {
        if (t.kind == TapKind::Direct) continue;
        t.kind = (t.delay - direct_delay) <= kEarlyLateBoundary ? TapKind::Early : TapKind::Late;
    }

    result.weights = material_weight_matrix(ir);

    if (rt60_tail) {
        // decay rate from the metric Sabine time, per band; throws when the
        // room is lossless
        std::array<double, kNumBands> t60;
        for (int b = 0; b < kNumBands; ++b) t60[static_cast<size_t>(b)] = sabine_rt60(room, b);

        std::array<double, kNumBands> reflected{};
        for (const auto& t : ir.taps)
            if (t.kind != TapKind::Direct)
                for (int b = 0; b < kNumBands; ++b)
                    reflected[static_cast<size_t>(b)] += t.intensity[static_cast<size_t>(b)];

        const double t_start = direct_delay + kEarlyLateBoundary;
        const size_t n_start = static_cast<size_t>(std::ceil(t_start * kSampleRate));
        const size_t n_end = static_cast<size_t>(duration * kSampleRate);
        if (n_start < n_end) {
            // normalize the envelope so each band's expected tail energy is
            // kTailEnergyFraction of its specular reflected energy
            std::array<double, kNumBands> env_sum{};
            for (size_t n = n_start; n < n_end; ++n) {
                const double t = static_cast<double>(n) / kSampleRate;
                for (int b = 0; b < kNumBands; ++b)
                    env_sum[static_cast<size_t>(b)] +=
                        std::pow(10.0, -6.0 * (t - direct_delay) / t60[static_cast<size_t>(b)]);
            }
            std::array<double, kNumBands> scale{};
            for (int b = 0; b < kNumBands; ++b)
                scale[static_cast<size_t>(b)] =
                    env_sum[static_cast<size_t>(b)] > 0.0
                        ? kTailEnergyFraction * reflected[static_cast<size_t>(b)] /
                              env_sum[static_cast<size_t>(b)]
                        : 0.0;

            Rng rng(Rng::mix(seed, 0x7a11));
            for (size_t n = n_start; n < n_end; ++n) {
                const double t = static_cast<double>(n) / kSampleRate;
                IrTap tap;
                tap.delay = t;
                tap.kind = TapKind::Late;
                tap.diffuse = true;
                for (int b = 0; b < kNumBands; ++b) {
                    const double g = rng.gaussian();
                    const double env =
                        scale[static_cast<size_t>(b)] *
                        std::pow(10.0, -6.0 * (t - direct_delay) / t60[static_cast<size_t>(b)]);
                    tap.intensity[static_cast<size_t>(b)] = env * g * g;
                }
                ir.taps.push_back(std::move(tap));
            }
            std::sort(ir.taps.begin(), ir.taps.end(),
                      [](const IrTap& a, const IrTap& b) { return a.delay < b.delay; });
        }
    }

    ir.validate();
    return result;
}

MaterialWeightMatrix material_weight_matrix(const ImpulseResponse& ir) {
    MaterialWeightMatrix w;
    w.material_names = ir.material_names;
    w.weights.assign(ir.material_names.size(), std::array<double, kNumBands>{});
    std::array<double, kNumBands> denom{};
    for (const auto& t : ir.taps) {
        if (t.diffuse) continue;
        for (int b = 0; b < kNumBands; ++b)
            denom[static_cast<size_t>(b)] += t.intensity[static_cast<size_t>(b)];
        for (const auto& [mat, cnt] : t.bounce_counts)
            for (int b = 0; b < kNumBands; ++b)
                w.weights[static_cast<size_t>(mat)][static_cast<size_t>(b)] +=
                    t.intensity[static_cast<size_t>(b)] * cnt;
    }
    for (auto& row : w.weights)
        for (int b = 0; b < kNumBands; ++b)
            if (denom[static_cast<size_t>(b)] > 0.0)
                row[static_cast<size_t>(b)] /= denom[static_cast<size_t>(b)];
    return w;
}

std::array<double, kNumBands + 1> band_edges(double sample_rate) {
    std::array<double, kNumBands + 1> edges{};
    edges[0] = 0.0;
    for (int b = 0; b + 1 < kNumBands; ++b)
        edges[static_cast<size_t>(b) + 1] = std::sqrt(kBandCenters[static_cast<size_t>(b)] *
                                                      kBandCenters[static_cast<size_t>(b) + 1]);
    edges[kNumBands] = sample_rate / 2.0;
    return edges;
}

namespace {

std::vector<double> make_pink_noise(size_t n, uint64_t seed) {
    // white spectrum shaped by 1/sqrt(f); deterministic
    const size_t nfft = next_pow2(std::max<size_t>(n, 2));
    Rng rng(seed);
    std::vector<double> white(nfft);
    for (auto& v : white) v = rng.gaussian();
    std::vector<cplx> spec = fft_real(white, nfft);
    spec[0] = 0.0;
    for (size_t k = 1; k <= nfft / 2; ++k) {
        const double f = static_cast<double>(k);
        const double g = 1.0 / std::sqrt(f);
        spec[k] *= g;
        if (k != nfft / 2) spec[nfft - k] *= g;
    }
    fft_inplace(spec, true);
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = spec[i].real();
    return out;
}

}  // namespace

Waveform render_echo(const ImpulseResponse& ir, const Waveform& excitation,
                     const ShoeboxRoom& room, PanelState window_state, uint64_t seed) {
    if (excitation.rate != ir.sample_rate)
        raise(ErrorCode::SampleRateMismatch, "excitation sample rate != IR sample rate");

    const size_t out_len = static_cast<size_t>(std::llround(ir.sample_rate));  // 1.0 s
    const size_t ir_len = static_cast<size_t>(std::llround(ir.duration * ir.sample_rate));

    // trim trailing silence of the excitation so the FFT stays small
    size_t ex_len = excitation.samples.size();
    while (ex_len > 0 && excitation.samples[ex_len - 1] == 0.0) --ex_len;

    Waveform out;
    out.rate = ir.sample_rate;
    out.samples.assign(out_len, 0.0);

    Rng tap_rng(Rng::mix(seed, 0x51617));

    if (ex_len > 0 && !ir.taps.empty()) {
        const size_t nfft = next_pow2(ir_len + ex_len);

        // per-band impulse trains; amplitude = sqrt(intensity), diffuse taps
        // get a seeded sign so the tail reads as noise rather than DC
        std::vector<std::vector<double>> trains(kNumBands);
        std::vector<bool> band_used(kNumBands, false);
        for (auto& t : trains) t.assign(nfft, 0.0);
        for (const auto& tap : ir.taps) {
            const auto n0 = static_cast<size_t>(std::llround(tap.delay * ir.sample_rate));
            if (n0 >= ir_len) continue;
            const double sign = tap.diffuse ? static_cast<double>(tap_rng.sign()) : 1.0;
            for (int b = 0; b < kNumBands; ++b) {
                const double a = tap.intensity[static_cast<size_t>(b)];
                if (a == 0.0) continue;
                trains[static_cast<size_t>(b)][n0] += sign * std::sqrt(a);
                band_used[static_cast<size_t>(b)] = true;
            }
        }

        // assemble the IR spectrum through the brickwall octave partition;
        // the masks sum to one on every bin, so a flat tap reconstructs
        // exactly
        const auto edges = band_edges(ir.sample_rate);
        std::vector<cplx> acc(nfft, cplx(0.0, 0.0));
        const double bin_hz = ir.sample_rate / static_cast<double>(nfft);
        for (int b = 0; b < kNumBands; ++b) {
            if (!band_used[static_cast<size_t>(b)]) continue;
            std::vector<cplx> spec = fft_real(trains[static_cast<size_t>(b)], nfft);
            const double lo = edges[static_cast<size_t>(b)];
            const double hi = edges[static_cast<size_t>(b) + 1];
            for (size_t k = 0; k < nfft; ++k) {
                const size_t kf = k <= nfft / 2 ? k : nfft - k;
                const double f = static_cast<double>(kf) * bin_hz;
                const bool in_band = (f >= lo && f < hi) || (b == kNumBands - 1 && f >= hi);
                if (in_band) acc[k] += spec[k];
            }
        }

        std::vector<cplx> ex_spec = fft_real(
            std::vector<double>(excitation.samples.begin(),
                                excitation.samples.begin() + static_cast<long>(ex_len)),
            nfft);
        for (size_t k = 0; k < nfft; ++k) acc[k] *= ex_spec[k];
        fft_inplace(acc, true);
        for (size_t i = 0; i < out_len; ++i) out.samples[i] = acc[i].real();
    }

    if (room.has_exterior_panel()) {
        double level_db = room.exterior_noise_level_db;
        if (window_state == PanelState::Closed) level_db -= kClosedWindowNoiseReductionDb;
        const double target_rms = std::pow(10.0, level_db / 20.0) * excitation.rms();
        if (target_rms > 0.0) {
            std::vector<double> pink = make_pink_noise(out_len, Rng::mix(seed, 0xeb01));
            double r = 0.0;
            for (double v : pink) r += v * v;
            r = std::sqrt(r / static_cast<double>(out_len));
            if (r > 0.0) {
                const double g = target_rms / r;
                for (size_t i = 0; i < out_len; ++i) out.samples[i] += g * pink[i];
            }
        }
    }

    const double pk = out.peak();
    if (pk > 1.0)
        for (auto& v : out.samples) v /= pk * 1.000001;

    return out;
}

double doppler_shift(const DopplerParams& p) {
    if (p.f0 <= 0.0) raise(ErrorCode::NonPositiveFrequency, "f0 must be positive");
    if (p.c_o == 0.0) raise(ErrorCode::DivisionByZero, "observer speed c_o is zero");
    return p.f0 * (p.c_s / p.c_o) * std::cos(p.theta);
}

double wavelength(double frequency_hz, double speed) {
    if (frequency_hz <= 0.0)
        raise(ErrorCode::NonPositiveFrequency, "frequency must be positive");
    return speed / frequency_hz;
}

}  // namespace echorec
