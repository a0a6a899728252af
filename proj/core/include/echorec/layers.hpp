#pragma once

#include <memory>
#include <string>
#include <vector>

#include "echorec/rng.hpp"
#include "echorec/tensor.hpp"

namespace echorec {

enum class LayerKind { Conv2D, MaxPool, Dense, FeatureNorm, ReLU, Softmax };

struct LayerSpec {
    LayerKind kind = LayerKind::ReLU;
    int filters = 0;
    int kernel = 0;
    int stride = 1;
    int window = 0;
    int units = 0;

    static LayerSpec conv2d(int filters, int kernel, int stride = 1);
    static LayerSpec max_pool(int window);
    static LayerSpec dense(int units);
    static LayerSpec feature_norm();
    static LayerSpec relu();
    static LayerSpec softmax();

    std::string to_string() const;           // e.g. "conv:16:3:1"
    static LayerSpec parse(const std::string& token);
};

/// Single-example layer. forward() caches whatever backward() needs, so the
/// two must be called in matched pairs. Parameter gradients accumulate until
/// zero_grads().
class Layer {
  public:
    virtual ~Layer() = default;

    virtual Tensor forward(const Tensor& x) = 0;
    virtual Tensor backward(const Tensor& dy) = 0;

    virtual std::vector<double>* params() { return nullptr; }
    virtual std::vector<double>* grads() { return nullptr; }
    virtual void init(Rng&) {}
    void zero_grads() {
        if (auto* g = grads()) std::fill(g->begin(), g->end(), 0.0);
    }

    virtual const char* name() const = 0;
    virtual std::vector<size_t> output_shape(const std::vector<size_t>& in) const = 0;
};

/// Builds a layer for a concrete input shape (needed to size weights).
std::unique_ptr<Layer> make_layer(const LayerSpec& spec, const std::vector<size_t>& input_shape);

double relu_scalar(double x);

}  // namespace echorec
