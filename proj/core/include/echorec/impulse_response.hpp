#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "echorec/material.hpp"

namespace echorec {

enum class TapKind { Direct, Early, Late };

const char* tap_kind_name(TapKind k);

/// One arrival: propagation delay, per-band energy, and how many times the
/// path bounced off each material (by material index).
struct IrTap {
    double delay = 0.0;  // seconds
    std::array<double, kNumBands> intensity{};
    std::vector<std::pair<int, int>> bounce_counts;  // (material index, count)
    TapKind kind = TapKind::Direct;
    bool diffuse = false;  // true for the synthesized late tail

    double total_intensity() const {
        double s = 0.0;
        for (double v : intensity) s += v;
        return s;
    }
};

/// Tap-list impulse response. Taps are kept sorted by delay; exactly one tap
/// has kind Direct and it carries the minimum delay.
struct ImpulseResponse {
    std::vector<IrTap> taps;
    std::vector<std::string> material_names;  // index space for bounce_counts
    double sample_rate = 44100.0;
    double duration = 1.0;  // seconds

    void validate() const;

    /// Band-energy sums grouped by tap kind: [direct, early, late].
    std::array<double, 3> energy_by_kind() const;
};

/// w[band][material]: intensity-weighted average bounce count per material
/// over all specular paths that reached the receiver.
struct MaterialWeightMatrix {
    std::vector<std::string> material_names;
    std::vector<std::array<double, kNumBands>> weights;  // per material

    double at(int band, int material) const {
        return weights[static_cast<size_t>(material)][static_cast<size_t>(band)];
    }
};

}  // namespace echorec
