#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "echorec/layers.hpp"
#include "echorec/tensor.hpp"

namespace echorec {

enum class MergeKind { None, Concat, Mfb };

struct MergeSpec {
    MergeKind kind = MergeKind::None;
    int factor_k = 5;     // MFB latent dimensionality
    int output_dim = 64;  // MFB fused vector length
};

/// Low-rank bilinear fusion parameters: per output unit i, U_i (n x k) and
/// V_i (n' x k), so z_i = 1^T (U_i^T x o V_i^T y) = x^T U_i V_i^T y.
struct MfbParams {
    size_t in_x = 0, in_y = 0, out = 0, k = 0;
    std::vector<double> u;  // out x in_x x k
    std::vector<double> v;  // out x in_y x k

    double u_at(size_t i, size_t a, size_t t) const { return u[(i * in_x + a) * k + t]; }
    double v_at(size_t i, size_t b, size_t t) const { return v[(i * in_y + b) * k + t]; }
};

std::vector<double> mfb_fuse(const std::vector<double>& x, const std::vector<double>& y,
                             const MfbParams& params);
std::vector<double> concat_fuse(const std::vector<double>& x, const std::vector<double>& y);

struct ModelConfig {
    std::vector<LayerSpec> audio_net;
    std::vector<LayerSpec> visual_net;
    MergeSpec merge;
    int num_classes = 2;
    std::array<size_t, 2> audio_input{62, 25};
    std::array<size_t, 2> visual_input{64, 25};

    void validate() const;
    std::string to_string() const;
    static ModelConfig parse(const std::string& text);

    /// Two conv blocks, a dense bottleneck with feature normalization, then
    /// the classifier head.
    static ModelConfig default_audio(int classes);
    /// Same shape with halved filter counts, for CPU-bound sweeps.
    static ModelConfig compact_audio(int classes);
    static ModelConfig audio_visual(int classes, MergeKind merge, bool compact);
};

double cross_entropy(const std::vector<double>& probs, int label);

/// Trainable audio / audio-visual classifier. Single-threaded per instance;
/// forward and loss_backward must be called in matched pairs.
class EchoModel {
  public:
    EchoModel(const ModelConfig& cfg, uint64_t init_seed);

    const ModelConfig& config() const { return config_; }

    /// Class probabilities. `image` is required iff the config fuses two
    /// subnets and rejected otherwise.
    std::vector<double> forward(const Tensor& audio, const Tensor* image);

    /// Cross-entropy loss for the most recent forward; accumulates parameter
    /// gradients (scaled by `grad_scale`, typically 1/batch).
    double loss_backward(int label, double grad_scale = 1.0);

    /// Pre-softmax logit for `cls` and its gradient w.r.t. the audio input.
    double input_gradient(const Tensor& audio, int cls, Tensor& dinput);

    struct ParamBlock {
        std::string name;
        std::vector<double>* w;
        std::vector<double>* g;
    };
    const std::vector<ParamBlock>& param_blocks() const { return blocks_; }
    size_t num_params() const;
    void zero_grads();

    std::vector<float> flatten_params() const;
    void load_params(const std::vector<float>& flat);

    std::vector<size_t> audio_input_shape() const;
    std::vector<size_t> visual_input_shape() const;

  private:
    Tensor run_stack(std::vector<std::unique_ptr<Layer>>& stack, const Tensor& in);
    Tensor backprop_stack(std::vector<std::unique_ptr<Layer>>& stack, const Tensor& dy);

    ModelConfig config_;
    std::vector<std::unique_ptr<Layer>> audio_stack_;
    std::vector<std::unique_ptr<Layer>> visual_stack_;
    std::vector<std::unique_ptr<Layer>> head_;  // dense(M), softmax
    MfbParams mfb_;
    std::vector<double> mfb_grads_u_, mfb_grads_v_;
    std::vector<ParamBlock> blocks_;

    // forward caches
    std::vector<double> audio_feat_, visual_feat_, fused_, probs_;
    std::vector<double> mfb_p_, mfb_q_;  // out x k inner products
    bool have_forward_ = false;
};

}  // namespace echorec
