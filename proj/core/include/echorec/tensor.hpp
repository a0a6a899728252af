#pragma once

#include <cstddef>
#include <vector>

namespace echorec {

/// Dense row-major tensor of doubles.
struct Tensor {
    std::vector<size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<size_t> s) : shape(std::move(s)) {
        data.assign(numel_of(shape), 0.0);
    }

    static size_t numel_of(const std::vector<size_t>& s) {
        size_t n = 1;
        for (size_t d : s) n *= d;
        return n;
    }

    size_t numel() const { return data.size(); }

    // (h, w, c) accessor for rank-3 tensors
    double& at3(size_t h, size_t w, size_t c) {
        return data[(h * shape[1] + w) * shape[2] + c];
    }
    double at3(size_t h, size_t w, size_t c) const {
        return data[(h * shape[1] + w) * shape[2] + c];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
    void check_finite(const char* what) const;
};

/// Wraps a 2-D grid (e.g. a spectrogram) as an HxWx1 tensor.
Tensor grid_to_tensor(const std::vector<double>& grid, size_t rows, size_t cols);

}  // namespace echorec
