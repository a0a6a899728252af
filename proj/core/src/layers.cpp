#include "echorec/layers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "echorec/errors.hpp"

namespace echorec {

double relu_scalar(double x) { return x > 0.0 ? x : 0.0; }

LayerSpec LayerSpec::conv2d(int filters, int kernel, int stride) {
    LayerSpec s;
    s.kind = LayerKind::Conv2D;
    s.filters = filters;
    s.kernel = kernel;
    s.stride = stride;
    return s;
}
LayerSpec LayerSpec::max_pool(int window) {
    LayerSpec s;
    s.kind = LayerKind::MaxPool;
    s.window = window;
    return s;
}
LayerSpec LayerSpec::dense(int units) {
    LayerSpec s;
    s.kind = LayerKind::Dense;
    s.units = units;
    return s;
}
LayerSpec LayerSpec::feature_norm() {
    LayerSpec s;
    s.kind = LayerKind::FeatureNorm;
    return s;
}
LayerSpec LayerSpec::relu() {
    LayerSpec s;
    s.kind = LayerKind::ReLU;
    return s;
}
LayerSpec LayerSpec::softmax() {
    LayerSpec s;
    s.kind = LayerKind::Softmax;
    return s;
}

std::string LayerSpec::to_string() const {
    std::ostringstream os;
    switch (kind) {
        case LayerKind::Conv2D: os << "conv:" << filters << ":" << kernel << ":" << stride; break;
        case LayerKind::MaxPool: os << "pool:" << window; break;
        case LayerKind::Dense: os << "dense:" << units; break;
        case LayerKind::FeatureNorm: os << "featurenorm"; break;
        case LayerKind::ReLU: os << "relu"; break;
        case LayerKind::Softmax: os << "softmax"; break;
    }
    return os.str();
}

LayerSpec LayerSpec::parse(const std::string& token) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : token) {
        if (c == ':') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    auto num = [&](size_t i, int fallback) -> int {
        if (i >= parts.size()) return fallback;
        return std::stoi(parts[i]);
    };
    const std::string& head = parts[0];
    if (head == "conv") {
        if (parts.size() < 3) raise(ErrorCode::ParseError, "conv needs filters:kernel[:stride]");
        return conv2d(num(1, 0), num(2, 0), num(3, 1));
    }
    if (head == "pool") return max_pool(num(1, 2));
    if (head == "dense") {
        if (parts.size() < 2) raise(ErrorCode::ParseError, "dense needs a unit count");
        return dense(num(1, 0));
    }
    if (head == "featurenorm" || head == "norm") return feature_norm();
    if (head == "relu") return relu();
    if (head == "softmax") return softmax();
    raise(ErrorCode::ParseError, "unknown layer spec: " + token);
}

namespace {

void require_rank3(const std::vector<size_t>& s, const char* who) {
    if (s.size() != 3)
        raise(ErrorCode::ShapeMismatch, std::string(who) + " expects an HxWxC input");
}

class Conv2DLayer final : public Layer {
  public:
    Conv2DLayer(const LayerSpec& spec, const std::vector<size_t>& in_shape) : spec_(spec) {
        require_rank3(in_shape, "conv");
        if (spec.filters <= 0 || spec.kernel <= 0 || spec.stride <= 0)
            raise(ErrorCode::InvalidConfig, "conv dimensions must be positive");
        in_shape_ = in_shape;
        const size_t k = static_cast<size_t>(spec.kernel);
        if (in_shape[0] < k || in_shape[1] < k)
            raise(ErrorCode::ShapeMismatch, "conv kernel larger than input");
        c_in_ = in_shape[2];
        const size_t nw = static_cast<size_t>(spec.filters) * k * k * c_in_;
        packed_.assign(nw + static_cast<size_t>(spec.filters), 0.0);
        grads_.assign(packed_.size(), 0.0);
    }

    std::vector<size_t> output_shape(const std::vector<size_t>& in) const override {
        require_rank3(in, "conv");
        const size_t k = static_cast<size_t>(spec_.kernel);
        const size_t s = static_cast<size_t>(spec_.stride);
        return {(in[0] - k) / s + 1, (in[1] - k) / s + 1, static_cast<size_t>(spec_.filters)};
    }

    void init(Rng& rng) override {
        const double scale =
            std::sqrt(1.0 / static_cast<double>(spec_.kernel * spec_.kernel * static_cast<int>(c_in_)));
        auto* p = params();
        for (size_t i = 0; i < weights_size(); ++i)
            (*p)[i] = scale * (2.0 * rng.uniform() - 1.0);
        for (size_t i = weights_size(); i < p->size(); ++i) (*p)[i] = 0.0;
    }

    Tensor forward(const Tensor& x) override {
        if (x.shape != in_shape_) raise(ErrorCode::ShapeMismatch, "conv input shape mismatch");
        x_ = x;
        const auto out_shape = output_shape(x.shape);
        Tensor y(out_shape);
        const size_t oh = out_shape[0], ow = out_shape[1], f_n = out_shape[2];
        const size_t k = static_cast<size_t>(spec_.kernel), s = static_cast<size_t>(spec_.stride);
        const double* w = packed_.data();
        const double* b = packed_.data() + weights_size();
        for (size_t i = 0; i < oh; ++i) {
            for (size_t j = 0; j < ow; ++j) {
                double* out = &y.data[(i * ow + j) * f_n];
                for (size_t f = 0; f < f_n; ++f) out[f] = b[f];
                for (size_t kh = 0; kh < k; ++kh) {
                    const double* xrow = &x.data[((i * s + kh) * x.shape[1] + j * s) * c_in_];
                    for (size_t kw = 0; kw < k; ++kw) {
                        const double* xp = xrow + kw * c_in_;
                        const size_t base = (kh * k + kw) * c_in_;
                        for (size_t c = 0; c < c_in_; ++c) {
                            const double xv = xp[c];
                            if (xv == 0.0) continue;
                            const double* wf = w + base + c;
                            const size_t wstride = k * k * c_in_;
                            for (size_t f = 0; f < f_n; ++f) out[f] += wf[f * wstride] * xv;
                        }
                    }
                }
            }
        }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        const auto out_shape = output_shape(x_.shape);
        Tensor dx(x_.shape);
        const size_t oh = out_shape[0], ow = out_shape[1], f_n = out_shape[2];
        const size_t k = static_cast<size_t>(spec_.kernel), s = static_cast<size_t>(spec_.stride);
        const double* w = packed_.data();
        double* gw = grads_.data();
        double* gb = grads_.data() + weights_size();
        const size_t wstride = k * k * c_in_;
        for (size_t i = 0; i < oh; ++i) {
            for (size_t j = 0; j < ow; ++j) {
                const double* d = &dy.data[(i * ow + j) * f_n];
                for (size_t f = 0; f < f_n; ++f) gb[f] += d[f];
                for (size_t kh = 0; kh < k; ++kh) {
                    const size_t xrow = ((i * s + kh) * x_.shape[1] + j * s) * c_in_;
                    for (size_t kw = 0; kw < k; ++kw) {
                        const size_t xoff = xrow + kw * c_in_;
                        const size_t base = (kh * k + kw) * c_in_;
                        for (size_t c = 0; c < c_in_; ++c) {
                            const double xv = x_.data[xoff + c];
                            double acc = 0.0;
                            for (size_t f = 0; f < f_n; ++f) {
                                gw[f * wstride + base + c] += d[f] * xv;
                                acc += w[f * wstride + base + c] * d[f];
                            }
                            dx.data[xoff + c] += acc;
                        }
                    }
                }
            }
        }
        return dx;
    }

    std::vector<double>* params() override { return &packed_; }
    std::vector<double>* grads() override { return &grads_; }
    const char* name() const override { return "conv"; }

  private:
    size_t weights_size() const {
        return static_cast<size_t>(spec_.filters * spec_.kernel * spec_.kernel) * c_in_;
    }

    LayerSpec spec_;
    std::vector<size_t> in_shape_;
    size_t c_in_ = 1;
    std::vector<double> packed_;  // [w (f x kh x kw x c), b (f)]
    std::vector<double> grads_;
    Tensor x_;
};

class MaxPoolLayer final : public Layer {
  public:
    MaxPoolLayer(const LayerSpec& spec, const std::vector<size_t>& in_shape) : spec_(spec) {
        require_rank3(in_shape, "maxpool");
        if (spec.window <= 0) raise(ErrorCode::InvalidConfig, "pool window must be positive");
        in_shape_ = in_shape;
    }

    std::vector<size_t> output_shape(const std::vector<size_t>& in) const override {
        require_rank3(in, "maxpool");
        const size_t p = static_cast<size_t>(spec_.window);
        if (in[0] < p || in[1] < p)
            raise(ErrorCode::ShapeMismatch, "pool window larger than input");
        return {in[0] / p, in[1] / p, in[2]};
    }

    Tensor forward(const Tensor& x) override {
        if (x.shape != in_shape_) raise(ErrorCode::ShapeMismatch, "pool input shape mismatch");
        const auto os = output_shape(x.shape);
        Tensor y(os);
        argmax_.assign(y.numel(), 0);
        const size_t p = static_cast<size_t>(spec_.window);
        const size_t c_n = x.shape[2];
        for (size_t i = 0; i < os[0]; ++i)
            for (size_t j = 0; j < os[1]; ++j)
                for (size_t c = 0; c < c_n; ++c) {
                    double best = -1e300;
                    size_t best_idx = 0;
                    for (size_t a = 0; a < p; ++a)
                        for (size_t b = 0; b < p; ++b) {
                            const size_t idx = ((i * p + a) * x.shape[1] + (j * p + b)) * c_n + c;
                            if (x.data[idx] > best) {
                                best = x.data[idx];
                                best_idx = idx;
                            }
                        }
                    const size_t oidx = (i * os[1] + j) * c_n + c;
                    y.data[oidx] = best;
                    argmax_[oidx] = best_idx;
                }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        Tensor dx(in_shape_);
        for (size_t i = 0; i < dy.numel(); ++i) dx.data[argmax_[i]] += dy.data[i];
        return dx;
    }

    const char* name() const override { return "pool"; }

  private:
    LayerSpec spec_;
    std::vector<size_t> in_shape_;
    std::vector<size_t> argmax_;
};

class DenseLayer final : public Layer {
  public:
    DenseLayer(const LayerSpec& spec, const std::vector<size_t>& in_shape) : spec_(spec) {
        if (spec.units <= 0) raise(ErrorCode::InvalidConfig, "dense units must be positive");
        in_shape_ = in_shape;
        n_in_ = Tensor::numel_of(in_shape);
        packed_.assign(static_cast<size_t>(spec.units) * n_in_ + static_cast<size_t>(spec.units),
                       0.0);
        grads_.assign(packed_.size(), 0.0);
    }

    std::vector<size_t> output_shape(const std::vector<size_t>&) const override {
        return {static_cast<size_t>(spec_.units)};
    }

    void init(Rng& rng) override {
        const double scale = std::sqrt(1.0 / static_cast<double>(n_in_));
        const size_t nw = static_cast<size_t>(spec_.units) * n_in_;
        for (size_t i = 0; i < nw; ++i) packed_[i] = scale * (2.0 * rng.uniform() - 1.0);
        for (size_t i = nw; i < packed_.size(); ++i) packed_[i] = 0.0;
    }

    Tensor forward(const Tensor& x) override {
        if (x.numel() != n_in_) raise(ErrorCode::ShapeMismatch, "dense input size mismatch");
        x_ = x;
        const size_t u = static_cast<size_t>(spec_.units);
        Tensor y({u});
        const double* w = packed_.data();
        const double* b = packed_.data() + u * n_in_;
        for (size_t i = 0; i < u; ++i) {
            double acc = b[i];
            const double* row = w + i * n_in_;
            for (size_t j = 0; j < n_in_; ++j) acc += row[j] * x.data[j];
            y.data[i] = acc;
        }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        const size_t u = static_cast<size_t>(spec_.units);
        Tensor dx(in_shape_);
        const double* w = packed_.data();
        double* gw = grads_.data();
        double* gb = grads_.data() + u * n_in_;
        for (size_t i = 0; i < u; ++i) {
            const double d = dy.data[i];
            gb[i] += d;
            const double* row = w + i * n_in_;
            double* grow = gw + i * n_in_;
            for (size_t j = 0; j < n_in_; ++j) {
                grow[j] += d * x_.data[j];
                dx.data[j] += row[j] * d;
            }
        }
        return dx;
    }

    std::vector<double>* params() override { return &packed_; }
    std::vector<double>* grads() override { return &grads_; }
    const char* name() const override { return "dense"; }

  private:
    LayerSpec spec_;
    std::vector<size_t> in_shape_;
    size_t n_in_ = 0;
    std::vector<double> packed_;  // [w (units x n_in), b (units)]
    std::vector<double> grads_;
    Tensor x_;
};

/// Per-example standardization over the feature vector with learned
/// per-feature scale and shift.
class FeatureNormLayer final : public Layer {
  public:
    static constexpr double kEps = 1e-5;

    FeatureNormLayer(const LayerSpec&, const std::vector<size_t>& in_shape) {
        in_shape_ = in_shape;
        n_ = Tensor::numel_of(in_shape);
        packed_.assign(2 * n_, 0.0);
        grads_.assign(packed_.size(), 0.0);
        for (size_t i = 0; i < n_; ++i) packed_[i] = 1.0;  // gamma
    }

    std::vector<size_t> output_shape(const std::vector<size_t>& in) const override { return in; }

    void init(Rng&) override {
        for (size_t i = 0; i < n_; ++i) packed_[i] = 1.0;
        for (size_t i = n_; i < packed_.size(); ++i) packed_[i] = 0.0;
    }

    Tensor forward(const Tensor& x) override {
        if (x.numel() != n_) raise(ErrorCode::ShapeMismatch, "featurenorm input size mismatch");
        double mu = 0.0;
        for (double v : x.data) mu += v;
        mu /= static_cast<double>(n_);
        double var = 0.0;
        for (double v : x.data) var += (v - mu) * (v - mu);
        var /= static_cast<double>(n_);
        inv_std_ = 1.0 / std::sqrt(var + kEps);
        xhat_.resize(n_);
        Tensor y(x.shape);
        const double* gamma = packed_.data();
        const double* beta = packed_.data() + n_;
        for (size_t i = 0; i < n_; ++i) {
            xhat_[i] = (x.data[i] - mu) * inv_std_;
            y.data[i] = gamma[i] * xhat_[i] + beta[i];
        }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        const double* gamma = packed_.data();
        double* ggamma = grads_.data();
        double* gbeta = grads_.data() + n_;
        double mean_g = 0.0, mean_gx = 0.0;
        std::vector<double> g(n_);
        for (size_t i = 0; i < n_; ++i) {
            g[i] = dy.data[i] * gamma[i];
            mean_g += g[i];
            mean_gx += g[i] * xhat_[i];
            ggamma[i] += dy.data[i] * xhat_[i];
            gbeta[i] += dy.data[i];
        }
        mean_g /= static_cast<double>(n_);
        mean_gx /= static_cast<double>(n_);
        Tensor dx(in_shape_);
        for (size_t i = 0; i < n_; ++i)
            dx.data[i] = inv_std_ * (g[i] - mean_g - xhat_[i] * mean_gx);
        return dx;
    }

    std::vector<double>* params() override { return &packed_; }
    std::vector<double>* grads() override { return &grads_; }
    const char* name() const override { return "featurenorm"; }

  private:
    std::vector<size_t> in_shape_;
    size_t n_ = 0;
    std::vector<double> packed_;  // [gamma, beta]
    std::vector<double> grads_;
    std::vector<double> xhat_;
    double inv_std_ = 1.0;
};

class ReluLayer final : public Layer {
  public:
    ReluLayer(const LayerSpec&, const std::vector<size_t>& in_shape) : in_shape_(in_shape) {}

    std::vector<size_t> output_shape(const std::vector<size_t>& in) const override { return in; }

    Tensor forward(const Tensor& x) override {
        mask_.assign(x.numel(), 0);
        Tensor y(x.shape);
        for (size_t i = 0; i < x.numel(); ++i) {
            if (x.data[i] > 0.0) {
                y.data[i] = x.data[i];
                mask_[i] = 1;
            }
        }
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        Tensor dx(in_shape_);
        for (size_t i = 0; i < dy.numel(); ++i)
            if (mask_[i]) dx.data[i] = dy.data[i];
        return dx;
    }

    const char* name() const override { return "relu"; }

  private:
    std::vector<size_t> in_shape_;
    std::vector<char> mask_;
};

class SoftmaxLayer final : public Layer {
  public:
    SoftmaxLayer(const LayerSpec&, const std::vector<size_t>& in_shape) : in_shape_(in_shape) {}

    std::vector<size_t> output_shape(const std::vector<size_t>& in) const override { return in; }

    Tensor forward(const Tensor& x) override {
        Tensor y(x.shape);
        double mx = x.data[0];
        for (double v : x.data) mx = std::max(mx, v);
        double sum = 0.0;
        for (size_t i = 0; i < x.numel(); ++i) {
            y.data[i] = std::exp(x.data[i] - mx);
            sum += y.data[i];
        }
        for (double& v : y.data) v /= sum;
        probs_ = y.data;
        return y;
    }

    Tensor backward(const Tensor& dy) override {
        // full Jacobian product; the fused softmax+CE path bypasses this
        double dot = 0.0;
        for (size_t i = 0; i < probs_.size(); ++i) dot += probs_[i] * dy.data[i];
        Tensor dx(in_shape_);
        for (size_t i = 0; i < probs_.size(); ++i)
            dx.data[i] = probs_[i] * (dy.data[i] - dot);
        return dx;
    }

    const char* name() const override { return "softmax"; }

  private:
    std::vector<size_t> in_shape_;
    std::vector<double> probs_;
};

}  // namespace

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, const std::vector<size_t>& input_shape) {
    switch (spec.kind) {
        case LayerKind::Conv2D: return std::make_unique<Conv2DLayer>(spec, input_shape);
        case LayerKind::MaxPool: return std::make_unique<MaxPoolLayer>(spec, input_shape);
        case LayerKind::Dense: return std::make_unique<DenseLayer>(spec, input_shape);
        case LayerKind::FeatureNorm: return std::make_unique<FeatureNormLayer>(spec, input_shape);
        case LayerKind::ReLU: return std::make_unique<ReluLayer>(spec, input_shape);
        case LayerKind::Softmax: return std::make_unique<SoftmaxLayer>(spec, input_shape);
    }
    raise(ErrorCode::InvalidConfig, "unknown layer kind");
}

}  // namespace echorec
