#include "echorec/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "echorec/errors.hpp"

namespace echorec {

std::vector<double> concat_fuse(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> z;
    z.reserve(x.size() + y.size());
    z.insert(z.end(), x.begin(), x.end());
    z.insert(z.end(), y.begin(), y.end());
    return z;
}

std::vector<double> mfb_fuse(const std::vector<double>& x, const std::vector<double>& y,
                             const MfbParams& params) {
    if (x.size() != params.in_x || y.size() != params.in_y)
        raise(ErrorCode::ShapeMismatch, "mfb input dimensions do not match parameters");
    if (params.k < 1) raise(ErrorCode::InvalidConfig, "mfb factor k must be >= 1");
    std::vector<double> z(params.out, 0.0);
    for (size_t i = 0; i < params.out; ++i) {
        double acc = 0.0;
        for (size_t t = 0; t < params.k; ++t) {
            double p = 0.0, q = 0.0;
            for (size_t a = 0; a < params.in_x; ++a) p += params.u_at(i, a, t) * x[a];
            for (size_t b = 0; b < params.in_y; ++b) q += params.v_at(i, b, t) * y[b];
            acc += p * q;
        }
        z[i] = acc;
    }
    return z;
}

double cross_entropy(const std::vector<double>& probs, int label) {
    if (label < 0 || label >= static_cast<int>(probs.size()))
        raise(ErrorCode::LabelOutOfRange, "label out of range");
    double sum = 0.0;
    for (double p : probs) {
        if (p < -1e-9 || !std::isfinite(p))
            raise(ErrorCode::InvalidDistribution, "probabilities must be finite and nonnegative");
        sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-6)
        raise(ErrorCode::InvalidDistribution, "probabilities must sum to 1");
    const double p = std::max(probs[static_cast<size_t>(label)], 1e-12);
    return -std::log(p);
}

void ModelConfig::validate() const {
    if (num_classes < 2) raise(ErrorCode::InvalidConfig, "need at least two classes");
    if (merge.kind == MergeKind::None && !visual_net.empty())
        raise(ErrorCode::InvalidConfig, "merge=none implies a single (audio) subnet");
    if (merge.kind != MergeKind::None && visual_net.empty())
        raise(ErrorCode::InvalidConfig, "fused models need a visual subnet");
    for (const auto& stacks : {&audio_net, &visual_net})
        for (const auto& spec : *stacks)
            if (spec.kind == LayerKind::Softmax)
                raise(ErrorCode::InvalidConfig, "softmax is only valid as the terminal layer");
    if (merge.kind == MergeKind::Mfb && (merge.factor_k < 1 || merge.output_dim < 1))
        raise(ErrorCode::InvalidConfig, "mfb needs positive factor and output dim");
}

namespace {

std::string stack_to_string(const std::vector<LayerSpec>& stack) {
    std::string out;
    for (size_t i = 0; i < stack.size(); ++i) {
        if (i) out += ",";
        out += stack[i].to_string();
    }
    return out;
}

std::vector<LayerSpec> parse_stack(const std::string& s) {
    std::vector<LayerSpec> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(LayerSpec::parse(cur));
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(LayerSpec::parse(cur));
    return out;
}

}  // namespace

std::string ModelConfig::to_string() const {
    std::ostringstream os;
    os << "classes=" << num_classes;
    os << ";audio_input=" << audio_input[0] << "x" << audio_input[1];
    os << ";audio=" << stack_to_string(audio_net);
    switch (merge.kind) {
        case MergeKind::None: os << ";merge=none"; break;
        case MergeKind::Concat: os << ";merge=concat"; break;
        case MergeKind::Mfb:
            os << ";merge=mfb:" << merge.factor_k << ":" << merge.output_dim;
            break;
    }
    if (merge.kind != MergeKind::None) {
        os << ";visual_input=" << visual_input[0] << "x" << visual_input[1];
        os << ";visual=" << stack_to_string(visual_net);
    }
    return os.str();
}

ModelConfig ModelConfig::parse(const std::string& text) {
    ModelConfig cfg;
    cfg.audio_net.clear();
    std::istringstream is(text);
    std::string field;
    auto parse_dims = [](const std::string& v) -> std::array<size_t, 2> {
        const size_t x = v.find('x');
        if (x == std::string::npos)
            raise(ErrorCode::ParseError, "expected ROWSxCOLS, got: " + v);
        return {static_cast<size_t>(std::stoul(v.substr(0, x))),
                static_cast<size_t>(std::stoul(v.substr(x + 1)))};
    };
    while (std::getline(is, field, ';')) {
        if (field.empty()) continue;
        const size_t eq = field.find('=');
        if (eq == std::string::npos)
            raise(ErrorCode::ParseError, "model config field needs '=': " + field);
        const std::string key = field.substr(0, eq);
        const std::string value = field.substr(eq + 1);
        if (key == "classes") cfg.num_classes = std::stoi(value);
        else if (key == "audio") cfg.audio_net = parse_stack(value);
        else if (key == "visual") cfg.visual_net = parse_stack(value);
        else if (key == "audio_input") cfg.audio_input = parse_dims(value);
        else if (key == "visual_input") cfg.visual_input = parse_dims(value);
        else if (key == "merge") {
            if (value == "none") cfg.merge.kind = MergeKind::None;
            else if (value == "concat") cfg.merge.kind = MergeKind::Concat;
            else if (value.rfind("mfb", 0) == 0) {
                cfg.merge.kind = MergeKind::Mfb;
                size_t p1 = value.find(':');
                if (p1 != std::string::npos) {
                    size_t p2 = value.find(':', p1 + 1);
                    cfg.merge.factor_k = std::stoi(value.substr(p1 + 1, p2 - p1 - 1));
                    if (p2 != std::string::npos)
                        cfg.merge.output_dim = std::stoi(value.substr(p2 + 1));
                }
            } else {
                raise(ErrorCode::ParseError, "unknown merge kind: " + value);
            }
        } else {
            raise(ErrorCode::ParseError, "unknown model config key: " + key);
        }
    }
    cfg.validate();
    return cfg;
}

namespace {

std::vector<LayerSpec> conv_backbone(int f1, int f2, int dense_units) {
    return {LayerSpec::conv2d(f1, 3), LayerSpec::relu(),         LayerSpec::max_pool(2),
            LayerSpec::conv2d(f2, 3), LayerSpec::relu(),         LayerSpec::max_pool(2),
            LayerSpec::dense(dense_units), LayerSpec::feature_norm()};
}

}  // namespace

ModelConfig ModelConfig::default_audio(int classes) {
    ModelConfig cfg;
    cfg.num_classes = classes;
    cfg.audio_net = conv_backbone(16, 32, 64);
    return cfg;
}

ModelConfig ModelConfig::compact_audio(int classes) {
    ModelConfig cfg;
    cfg.num_classes = classes;
    cfg.audio_net = conv_backbone(8, 16, 64);
    return cfg;
}

ModelConfig ModelConfig::audio_visual(int classes, MergeKind merge, bool compact) {
    ModelConfig cfg = compact ? compact_audio(classes) : default_audio(classes);
    cfg.visual_net = compact ? conv_backbone(8, 16, 64) : conv_backbone(16, 32, 64);
    cfg.merge.kind = merge;
    return cfg;
}

EchoModel::EchoModel(const ModelConfig& cfg, uint64_t init_seed) : config_(cfg) {
    config_.validate();
    Rng rng(Rng::mix(init_seed, 0x3c0de1));

    std::vector<size_t> shape = audio_input_shape();
    for (const auto& spec : config_.audio_net) {
        audio_stack_.push_back(make_layer(spec, shape));
        shape = audio_stack_.back()->output_shape(shape);
    }
    size_t audio_out = Tensor::numel_of(shape);

    size_t head_in = audio_out;
    if (config_.merge.kind != MergeKind::None) {
        shape = visual_input_shape();
        for (const auto& spec : config_.visual_net) {
            visual_stack_.push_back(make_layer(spec, shape));
            shape = visual_stack_.back()->output_shape(shape);
        }
        const size_t visual_out = Tensor::numel_of(shape);
        if (config_.merge.kind == MergeKind::Concat) {
            head_in = audio_out + visual_out;
        } else {
            mfb_.in_x = audio_out;
            mfb_.in_y = visual_out;
            mfb_.out = static_cast<size_t>(config_.merge.output_dim);
            mfb_.k = static_cast<size_t>(config_.merge.factor_k);
            mfb_.u.assign(mfb_.out * mfb_.in_x * mfb_.k, 0.0);
            mfb_.v.assign(mfb_.out * mfb_.in_y * mfb_.k, 0.0);
            mfb_grads_u_.assign(mfb_.u.size(), 0.0);
            mfb_grads_v_.assign(mfb_.v.size(), 0.0);
            head_in = mfb_.out;
        }
    }

    head_.push_back(make_layer(LayerSpec::dense(config_.num_classes), {head_in}));
    head_.push_back(make_layer(LayerSpec::softmax(), {static_cast<size_t>(config_.num_classes)}));

    // parameter registry in declaration order: audio, visual, merge, head
    int idx = 0;
    for (auto& l : audio_stack_) {
        if (l->params())
            blocks_.push_back({"audio." + std::to_string(idx) + "." + l->name(), l->params(),
                               l->grads()});
        ++idx;
    }
    idx = 0;
    for (auto& l : visual_stack_) {
        if (l->params())
            blocks_.push_back({"visual." + std::to_string(idx) + "." + l->name(), l->params(),
                               l->grads()});
        ++idx;
    }
    if (config_.merge.kind == MergeKind::Mfb) {
        blocks_.push_back({"merge.mfb.u", &mfb_.u, &mfb_grads_u_});
        blocks_.push_back({"merge.mfb.v", &mfb_.v, &mfb_grads_v_});
    }
    idx = 0;
    for (auto& l : head_) {
        if (l->params())
            blocks_.push_back({"head." + std::to_string(idx) + "." + l->name(), l->params(),
                               l->grads()});
        ++idx;
    }

    // seeded init in registry order
    for (auto& l : audio_stack_) l->init(rng);
    for (auto& l : visual_stack_) l->init(rng);
    if (config_.merge.kind == MergeKind::Mfb) {
        const double su = std::sqrt(1.0 / static_cast<double>(mfb_.in_x));
        const double sv = std::sqrt(1.0 / static_cast<double>(mfb_.in_y));
        for (auto& w : mfb_.u) w = su * (2.0 * rng.uniform() - 1.0);
        for (auto& w : mfb_.v) w = sv * (2.0 * rng.uniform() - 1.0);
    }
    for (auto& l : head_) l->init(rng);
}

std::vector<size_t> EchoModel::audio_input_shape() const {
    return {config_.audio_input[0], config_.audio_input[1], 1};
}

std::vector<size_t> EchoModel::visual_input_shape() const {
    return {config_.visual_input[0], config_.visual_input[1], 1};
}

Tensor EchoModel::run_stack(std::vector<std::unique_ptr<Layer>>& stack, const Tensor& in) {
    Tensor t = in;
    for (auto& l : stack) t = l->forward(t);
    return t;
}

Tensor EchoModel::backprop_stack(std::vector<std::unique_ptr<Layer>>& stack, const Tensor& dy) {
    Tensor t = dy;
    for (auto it = stack.rbegin(); it != stack.rend(); ++it) t = (*it)->backward(t);
    return t;
}

std::vector<double> EchoModel::forward(const Tensor& audio, const Tensor* image) {
    if (audio.shape != audio_input_shape())
        raise(ErrorCode::ShapeMismatch, "audio input must be " +
                                            std::to_string(config_.audio_input[0]) + "x" +
                                            std::to_string(config_.audio_input[1]) + "x1");
    if (config_.merge.kind == MergeKind::None) {
        if (image) raise(ErrorCode::MissingModality, "this model takes no image input");
    } else {
        if (!image) raise(ErrorCode::MissingModality, "fused model requires an image input");
        if (image->shape != visual_input_shape())
            raise(ErrorCode::ShapeMismatch, "image input must be " +
                                                std::to_string(config_.visual_input[0]) + "x" +
                                                std::to_string(config_.visual_input[1]) + "x1");
    }

    const Tensor a = run_stack(audio_stack_, audio);
    audio_feat_ = a.data;

    std::vector<double> fused;
    if (config_.merge.kind == MergeKind::None) {
        fused = audio_feat_;
    } else {
        const Tensor v = run_stack(visual_stack_, *image);
        visual_feat_ = v.data;
        if (config_.merge.kind == MergeKind::Concat) {
            fused = concat_fuse(audio_feat_, visual_feat_);
        } else {
            // cache the per-unit inner products for backward
            mfb_p_.assign(mfb_.out * mfb_.k, 0.0);
            mfb_q_.assign(mfb_.out * mfb_.k, 0.0);
            fused.assign(mfb_.out, 0.0);
            for (size_t i = 0; i < mfb_.out; ++i) {
                double acc = 0.0;
                for (size_t t = 0; t < mfb_.k; ++t) {
                    double p = 0.0, q = 0.0;
                    for (size_t aix = 0; aix < mfb_.in_x; ++aix)
                        p += mfb_.u_at(i, aix, t) * audio_feat_[aix];
                    for (size_t b = 0; b < mfb_.in_y; ++b)
                        q += mfb_.v_at(i, b, t) * visual_feat_[b];
                    mfb_p_[i * mfb_.k + t] = p;
                    mfb_q_[i * mfb_.k + t] = q;
                    acc += p * q;
                }
                fused[i] = acc;
            }
        }
    }
    fused_ = fused;

    Tensor f({fused.size()});
    f.data = fused;
    const Tensor out = run_stack(head_, f);
    probs_ = out.data;
    have_forward_ = true;
    return probs_;
}

double EchoModel::loss_backward(int label, double grad_scale) {
    if (!have_forward_) raise(ErrorCode::InvalidConfig, "loss_backward without forward");
    const double loss = cross_entropy(probs_, label);

    // fused softmax + cross-entropy gradient: p - y, scaled
    Tensor dlogits({probs_.size()});
    for (size_t i = 0; i < probs_.size(); ++i)
        dlogits.data[i] = grad_scale * (probs_[i] - (static_cast<int>(i) == label ? 1.0 : 0.0));

    // head minus the softmax layer (its gradient is fused above)
    Tensor d = dlogits;
    for (size_t i = head_.size() - 1; i-- > 0;) d = head_[i]->backward(d);

    if (config_.merge.kind == MergeKind::None) {
        Tensor da({audio_feat_.size()});
        da.data = d.data;
        backprop_stack(audio_stack_, da);
    } else if (config_.merge.kind == MergeKind::Concat) {
        Tensor da({audio_feat_.size()});
        Tensor dv({visual_feat_.size()});
        std::copy(d.data.begin(), d.data.begin() + static_cast<long>(audio_feat_.size()),
                  da.data.begin());
        std::copy(d.data.begin() + static_cast<long>(audio_feat_.size()), d.data.end(),
                  dv.data.begin());
        backprop_stack(audio_stack_, da);
        backprop_stack(visual_stack_, dv);
    } else {
        Tensor da({audio_feat_.size()});
        Tensor dv({visual_feat_.size()});
        double* gu = mfb_grads_u_.data();
        double* gv = mfb_grads_v_.data();
        for (size_t i = 0; i < mfb_.out; ++i) {
            const double dz = d.data[i];
            if (dz == 0.0) continue;
            for (size_t t = 0; t < mfb_.k; ++t) {
                const double p = mfb_p_[i * mfb_.k + t];
                const double q = mfb_q_[i * mfb_.k + t];
                for (size_t aix = 0; aix < mfb_.in_x; ++aix) {
                    gu[(i * mfb_.in_x + aix) * mfb_.k + t] += dz * audio_feat_[aix] * q;
                    da.data[aix] += dz * mfb_.u_at(i, aix, t) * q;
                }
                for (size_t b = 0; b < mfb_.in_y; ++b) {
                    gv[(i * mfb_.in_y + b) * mfb_.k + t] += dz * visual_feat_[b] * p;
                    dv.data[b] += dz * mfb_.v_at(i, b, t) * p;
                }
            }
        }
        backprop_stack(audio_stack_, da);
        backprop_stack(visual_stack_, dv);
    }

    have_forward_ = false;
    return loss;
}

double EchoModel::input_gradient(const Tensor& audio, int cls, Tensor& dinput) {
    if (config_.merge.kind != MergeKind::None)
        raise(ErrorCode::InvalidConfig,
              "input gradients are defined for audio-only models");
    if (cls < 0 || cls >= config_.num_classes)
        raise(ErrorCode::LabelOutOfRange, "class index out of range");

    const Tensor a = run_stack(audio_stack_, audio);
    Tensor logits = head_[0]->forward(a);  // dense layer
    const double logit = logits.data[static_cast<size_t>(cls)];

    Tensor dlogits({logits.numel()});
    dlogits.data[static_cast<size_t>(cls)] = 1.0;
    Tensor d = head_[0]->backward(dlogits);
    dinput = backprop_stack(audio_stack_, d);
    return logit;
}

size_t EchoModel::num_params() const {
    size_t n = 0;
    for (const auto& b : blocks_) n += b.w->size();
    return n;
}

void EchoModel::zero_grads() {
    for (auto& b : blocks_) std::fill(b.g->begin(), b.g->end(), 0.0);
}

std::vector<float> EchoModel::flatten_params() const {
    std::vector<float> out;
    out.reserve(num_params());
    for (const auto& b : blocks_)
        for (double w : *b.w) out.push_back(static_cast<float>(w));
    return out;
}

void EchoModel::load_params(const std::vector<float>& flat) {
    if (flat.size() != num_params())
        raise(ErrorCode::ShapeMismatch, "parameter count does not match model config");
    size_t off = 0;
    for (auto& b : blocks_) {
        for (double& w : *b.w) w = static_cast<double>(flat[off++]);
    }
}

}  // namespace echorec
