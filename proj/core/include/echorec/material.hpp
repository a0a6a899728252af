#pragma once

#include <array>
#include <string>

namespace echorec {

/// The nine octave bands materials are characterized over.
constexpr int kNumBands = 9;
constexpr std::array<double, kNumBands> kBandCenters = {63.0,    125.0,  250.0,  500.0, 1000.0,
                                                        2000.0,  4000.0, 8000.0, 16000.0};

/// Per-band acoustic material. Absorption and transmission are energy
/// fractions; their sum may not exceed 1 in any band.
struct MaterialSpec {
    std::string name;
    std::array<double, kNumBands> absorption{};
    double transmission = 0.0;
    bool is_reflector = false;  // glass / mirror class

    void validate() const;
};

}  // namespace echorec
