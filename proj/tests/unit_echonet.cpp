#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "echorec/actmax.hpp"
#include "echorec/checkpoint.hpp"
#include "echorec/errors.hpp"
#include "echorec/layers.hpp"
#include "echorec/model.hpp"
#include "echorec/rng.hpp"
#include "echorec/train.hpp"

using namespace echorec;

namespace {

Tensor random_tensor(const std::vector<size_t>& shape, Rng& rng, double lo = 0.0,
                     double hi = 1.0) {
    Tensor t(shape);
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

void zero_params(EchoModel& model) {
    for (auto& b : model.param_blocks())
        std::fill(b.w->begin(), b.w->end(), 0.0);
}

double loss_of(EchoModel& model, const Tensor& audio, const Tensor* image, int label) {
    return cross_entropy(model.forward(audio, image), label);
}

/// Central finite differences over every parameter of the model.
void gradient_check(EchoModel& model, const Tensor& audio, const Tensor* image, int label,
                    double h = 1e-5, double tol = 1e-4) {
    model.zero_grads();
    model.forward(audio, image);
    model.loss_backward(label, 1.0);

    size_t checked = 0;
    for (auto& block : model.param_blocks()) {
        for (size_t i = 0; i < block.w->size(); ++i) {
            const double w0 = (*block.w)[i];
            (*block.w)[i] = w0 + h;
            const double lp = loss_of(model, audio, image, label);
            (*block.w)[i] = w0 - h;
            const double lm = loss_of(model, audio, image, label);
            (*block.w)[i] = w0;
            const double fd = (lp - lm) / (2.0 * h);
            const double an = (*block.g)[i];
            const double rel = std::fabs(fd - an) / std::max(1e-6, std::fabs(fd) + std::fabs(an));
            if (rel >= tol) {
                CAPTURE(block.name);
                CAPTURE(i);
                CAPTURE(fd);
                CAPTURE(an);
            }
            REQUIRE(rel < tol);
            ++checked;
        }
    }
    CHECK(checked == model.num_params());
}

ModelConfig tiny_audio_config() {
    ModelConfig cfg;
    cfg.num_classes = 3;
    cfg.audio_input = {6, 5};
    cfg.audio_net = {LayerSpec::conv2d(2, 3), LayerSpec::relu(), LayerSpec::max_pool(2),
                     LayerSpec::dense(5), LayerSpec::feature_norm()};
    return cfg;
}

ModelConfig tiny_concat_config() {
    ModelConfig cfg;
    cfg.num_classes = 2;
    cfg.audio_input = {6, 5};
    cfg.visual_input = {7, 5};
    cfg.audio_net = {LayerSpec::conv2d(2, 3), LayerSpec::relu(), LayerSpec::max_pool(2),
                     LayerSpec::dense(4), LayerSpec::feature_norm()};
    cfg.visual_net = {LayerSpec::dense(3), LayerSpec::relu()};
    cfg.merge.kind = MergeKind::Concat;
    return cfg;
}

ModelConfig tiny_mfb_config() {
    ModelConfig cfg;
    cfg.num_classes = 2;
    cfg.audio_input = {4, 3};
    cfg.visual_input = {5, 3};
    cfg.audio_net = {LayerSpec::dense(4)};
    cfg.visual_net = {LayerSpec::dense(3)};
    cfg.merge.kind = MergeKind::Mfb;
    cfg.merge.factor_k = 2;
    cfg.merge.output_dim = 3;
    return cfg;
}

}  // namespace

TEST_CASE("forward: zero-weight model outputs the uniform distribution") {
    ModelConfig cfg = tiny_audio_config();
    EchoModel model(cfg, 1);
    zero_params(model);
    Rng rng(7);
    const Tensor audio = random_tensor(model.audio_input_shape(), rng);
    const auto p = model.forward(audio, nullptr);
    REQUIRE(p.size() == 3);
    for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("forward: probabilities form a simplex point for random models") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        EchoModel model(tiny_audio_config(), seed);
        Rng rng(seed + 100);
        const Tensor audio = random_tensor(model.audio_input_shape(), rng);
        const auto p = model.forward(audio, nullptr);
        double sum = 0.0;
        for (double v : p) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("forward: modality and shape guards") {
    EchoModel audio_only(tiny_audio_config(), 1);
    Rng rng(3);
    const Tensor audio = random_tensor(audio_only.audio_input_shape(), rng);
    const Tensor wrong = random_tensor({5, 5, 1}, rng);
    CHECK_THROWS_AS(audio_only.forward(wrong, nullptr), Error);
    CHECK_THROWS_AS(audio_only.forward(audio, &wrong), Error);  // unexpected image

    EchoModel fused(tiny_concat_config(), 1);
    const Tensor a2 = random_tensor(fused.audio_input_shape(), rng);
    CHECK_THROWS_AS(fused.forward(a2, nullptr), Error);  // missing image
}

TEST_CASE("forward: hand-computed one-filter convolution plus softmax") {
    ModelConfig cfg;
    cfg.num_classes = 2;
    cfg.audio_input = {2, 2};
    cfg.audio_net = {LayerSpec::conv2d(1, 2)};
    EchoModel model(cfg, 1);
    zero_params(model);

    auto& blocks = model.param_blocks();
    REQUIRE(blocks.size() == 2);  // conv, head dense
    // conv weights [[1,-1],[0.5,2]], bias 0.25
    (*blocks[0].w)[0] = 1.0;
    (*blocks[0].w)[1] = -1.0;
    (*blocks[0].w)[2] = 0.5;
    (*blocks[0].w)[3] = 2.0;
    (*blocks[0].w)[4] = 0.25;
    // head: w = [[2],[-1]], b = [0.1, -0.1]
    (*blocks[1].w)[0] = 2.0;
    (*blocks[1].w)[1] = -1.0;
    (*blocks[1].w)[2] = 0.1;
    (*blocks[1].w)[3] = -0.1;

    Tensor audio({2, 2, 1});
    audio.data = {0.1, 0.2, 0.3, 0.4};
    const double feat = 0.1 * 1.0 + 0.2 * -1.0 + 0.3 * 0.5 + 0.4 * 2.0 + 0.25;
    const double l0 = 2.0 * feat + 0.1, l1 = -1.0 * feat - 0.1;
    const double z = std::exp(l0) + std::exp(l1);
    const auto p = model.forward(audio, nullptr);
    CHECK(p[0] == doctest::Approx(std::exp(l0) / z).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(std::exp(l1) / z).epsilon(1e-12));
}

TEST_CASE("cross entropy: analytic anchor values") {
    CHECK(cross_entropy({1.0, 0.0, 0.0}, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(cross_entropy({1.0 / 3, 1.0 / 3, 1.0 / 3}, 1) ==
          doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(cross_entropy({1.0 / 3, 1.0 / 3, 1.0 / 3}, 1) == doctest::Approx(1.0986).epsilon(1e-4));
    // strictly increasing as the true-class probability falls
    double prev = -1.0;
    for (double p : {0.9, 0.7, 0.5, 0.3, 0.1}) {
        const double l = cross_entropy({p, 1.0 - p}, 0);
        CHECK(l > prev);
        prev = l;
    }
    CHECK_THROWS_AS(cross_entropy({0.7, 0.7}, 0), Error);
    CHECK_THROWS_AS(cross_entropy({0.5, 0.5}, 2), Error);
}

TEST_CASE("mfb_fuse: unit bases, bilinearity, dense-product oracle") {
    MfbParams params;
    params.in_x = 3;
    params.in_y = 3;
    params.out = 1;
    params.k = 1;
    params.u.assign(3, 0.0);
    params.v.assign(3, 0.0);
    params.u[0] = 1.0;  // U column = e1
    params.v[0] = 1.0;  // V column = e1
    const auto z = mfb_fuse({2.0, 5.0, 7.0}, {3.0, 11.0, 13.0}, params);
    REQUIRE(z.size() == 1);
    CHECK(z[0] == doctest::Approx(6.0).epsilon(1e-12));  // x1 * y1

    CHECK(mfb_fuse({2.0, 5.0, 7.0}, {0.0, 0.0, 0.0}, params)[0] == 0.0);

    // random case against the explicit x^T (U V^T) y product
    Rng rng(5);
    MfbParams rnd;
    rnd.in_x = 4;
    rnd.in_y = 3;
    rnd.out = 2;
    rnd.k = 3;
    rnd.u.resize(rnd.out * rnd.in_x * rnd.k);
    rnd.v.resize(rnd.out * rnd.in_y * rnd.k);
    for (auto& w : rnd.u) w = rng.uniform(-1, 1);
    for (auto& w : rnd.v) w = rng.uniform(-1, 1);
    std::vector<double> x(4), y(3);
    for (auto& v : x) v = rng.uniform(-1, 1);
    for (auto& v : y) v = rng.uniform(-1, 1);
    const auto got = mfb_fuse(x, y, rnd);
    for (size_t i = 0; i < rnd.out; ++i) {
        double want = 0.0;  // sum_{a,b} x_a (U_i V_i^T)_{ab} y_b
        for (size_t a = 0; a < rnd.in_x; ++a)
            for (size_t b = 0; b < rnd.in_y; ++b) {
                double w_ab = 0.0;
                for (size_t t = 0; t < rnd.k; ++t) w_ab += rnd.u_at(i, a, t) * rnd.v_at(i, b, t);
                want += x[a] * w_ab * y[b];
            }
        CHECK(got[i] == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("concat_fuse") {
    CHECK(concat_fuse({1.0}, {2.0}) == std::vector<double>{1.0, 2.0});
    CHECK(concat_fuse({1.0, 3.0}, {}) == std::vector<double>{1.0, 3.0});
    CHECK(concat_fuse({1.0, 2.0}, {3.0}).size() == 3);
}

TEST_CASE("gradients: audio stack (conv, relu, pool, dense, featurenorm) over 5 seeds") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        EchoModel model(tiny_audio_config(), seed);
        Rng rng(seed + 31);
        const Tensor audio = random_tensor(model.audio_input_shape(), rng);
        gradient_check(model, audio, nullptr, static_cast<int>(seed % 3));
    }
}

TEST_CASE("gradients: concat fusion over 5 seeds") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        EchoModel model(tiny_concat_config(), seed);
        Rng rng(seed + 57);
        const Tensor audio = random_tensor(model.audio_input_shape(), rng);
        const Tensor image = random_tensor(model.visual_input_shape(), rng);
        gradient_check(model, audio, &image, static_cast<int>(seed % 2));
    }
}

TEST_CASE("gradients: MFB fusion over 5 seeds") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        EchoModel model(tiny_mfb_config(), seed);
        Rng rng(seed + 91);
        const Tensor audio = random_tensor(model.audio_input_shape(), rng);
        const Tensor image = random_tensor(model.visual_input_shape(), rng);
        gradient_check(model, audio, &image, static_cast<int>(seed % 2));
    }
}

TEST_CASE("gradients: dead ReLU blocks upstream flow") {
    ModelConfig cfg;
    cfg.num_classes = 2;
    cfg.audio_input = {2, 2};
    cfg.audio_net = {LayerSpec::dense(3), LayerSpec::relu()};
    EchoModel model(cfg, 1);
    // dense output forced negative: weights 0, bias -5
    auto& blocks = model.param_blocks();
    std::fill(blocks[0].w->begin(), blocks[0].w->end(), 0.0);
    (*blocks[0].w)[3 * 4 + 0] = -5.0;
    (*blocks[0].w)[3 * 4 + 1] = -5.0;
    (*blocks[0].w)[3 * 4 + 2] = -5.0;

    Tensor audio({2, 2, 1});
    audio.data = {0.4, 0.3, 0.2, 0.1};
    model.zero_grads();
    model.forward(audio, nullptr);
    model.loss_backward(0, 1.0);
    for (double g : *blocks[0].g) CHECK(g == 0.0);
    // the head still learns its bias
    double head_g = 0.0;
    for (double g : *blocks[1].g) head_g += std::fabs(g);
    CHECK(head_g > 0.0);
}

TEST_CASE("gradients: softmax with cross entropy reduces to p - y at the logits") {
    ModelConfig cfg;
    cfg.num_classes = 3;
    cfg.audio_input = {2, 2};
    cfg.audio_net = {};  // head sees the flattened input directly
    EchoModel model(cfg, 4);
    Rng rng(17);
    const Tensor audio = random_tensor(model.audio_input_shape(), rng);
    model.zero_grads();
    const auto p = model.forward(audio, nullptr);
    model.loss_backward(1, 1.0);
    // head dense bias gradient equals dL/dlogits
    const auto& head = model.param_blocks().back();
    const size_t nw = 3 * 4;
    for (int c = 0; c < 3; ++c) {
        const double want = p[static_cast<size_t>(c)] - (c == 1 ? 1.0 : 0.0);
        CHECK((*head.g)[nw + static_cast<size_t>(c)] == doctest::Approx(want).epsilon(1e-12));
    }
}

namespace {

std::vector<TrainExample> separable_toy(size_t n_per_class, uint64_t seed) {
    // class 0 lights the top half, class 1 the bottom half
    std::vector<TrainExample> out;
    Rng rng(seed);
    for (size_t i = 0; i < 2 * n_per_class; ++i) {
        const int label = i % 2;
        Tensor t({62, 25, 1});
        for (size_t r = 0; r < 62; ++r)
            for (size_t c = 0; c < 25; ++c) {
                const bool lit = label == 0 ? r < 31 : r >= 31;
                t.at3(r, c, 0) = (lit ? 0.8 : 0.1) + 0.05 * rng.uniform();
            }
        out.push_back({std::move(t), std::nullopt, label});
    }
    return out;
}

}  // namespace

TEST_CASE("train: zero learning rate leaves parameters unchanged") {
    ModelConfig cfg;
    cfg.num_classes = 2;
    cfg.audio_input = {62, 25};
    cfg.audio_net = {LayerSpec::dense(4)};
    TrainConfig tcfg;
    tcfg.lr = 0.0;
    tcfg.epochs = 3;
    tcfg.seed = 5;
    tcfg.val_fraction = 0.0;
    const auto data = separable_toy(4, 9);
    const TrainResult result = train(cfg, data, tcfg);
    const EchoModel untrained(cfg, tcfg.seed);
    CHECK(result.checkpoint.params == untrained.flatten_params());
}

TEST_CASE("train: separable toy converges below 0.05 within 500 epochs (3 seeds)") {
    ModelConfig cfg;
    cfg.num_classes = 2;
    cfg.audio_input = {62, 25};
    cfg.audio_net = {};
    TrainConfig tcfg;
    tcfg.epochs = 500;
    tcfg.val_fraction = 0.0;
    double mean_final = 0.0;
    for (uint64_t seed = 0; seed < 3; ++seed) {
        tcfg.seed = seed;
        const auto data = separable_toy(8, 100 + seed);
        const TrainResult result = train(cfg, data, tcfg);
        mean_final += result.train_loss.back() / 3.0;
    }
    CHECK(mean_final < 0.05);
}

TEST_CASE("train: identical seeds give bit-identical checkpoints") {
    ModelConfig cfg;
    cfg.num_classes = 2;
    cfg.audio_input = {62, 25};
    cfg.audio_net = {LayerSpec::dense(6), LayerSpec::relu()};
    TrainConfig tcfg;
    tcfg.epochs = 4;
    tcfg.seed = 77;
    const auto data = separable_toy(6, 3);
    const TrainResult a = train(cfg, data, tcfg);
    const TrainResult b = train(cfg, data, tcfg);
    REQUIRE(a.checkpoint.params.size() == b.checkpoint.params.size());
    CHECK(std::memcmp(a.checkpoint.params.data(), b.checkpoint.params.data(),
                      a.checkpoint.params.size() * sizeof(float)) == 0);
    CHECK(a.train_loss == b.train_loss);
}

TEST_CASE("train: outcome metrics invariant to dataset permutation with a fixed sampler seed") {
    ModelConfig cfg;
    cfg.num_classes = 2;
    cfg.audio_input = {62, 25};
    cfg.audio_net = {};
    TrainConfig tcfg;
    tcfg.epochs = 120;
    tcfg.seed = 11;
    tcfg.val_fraction = 0.0;
    auto data = separable_toy(8, 42);
    const TrainResult a = train(cfg, data, tcfg);
    std::rotate(data.begin(), data.begin() + 5, data.end());
    const TrainResult b = train(cfg, data, tcfg);

    auto accuracy = [&](const TrainResult& r, const std::vector<TrainExample>& d) {
        EchoModel m = model_from_checkpoint(r.checkpoint);
        int correct = 0;
        for (const auto& ex : d) {
            const auto p = m.forward(ex.audio, nullptr);
            if ((p[1] > p[0] ? 1 : 0) == ex.label) ++correct;
        }
        return static_cast<double>(correct) / static_cast<double>(d.size());
    };
    CHECK(accuracy(a, data) == accuracy(b, data));
    CHECK(accuracy(a, data) == 1.0);
}

TEST_CASE("train: empty dataset and bad labels are rejected") {
    ModelConfig cfg;
    cfg.num_classes = 2;
    cfg.audio_input = {4, 3};
    cfg.audio_net = {};
    CHECK_THROWS_AS(train(cfg, {}, {}), Error);
    std::vector<TrainExample> bad;
    Tensor t({4, 3, 1});
    bad.push_back({t, std::nullopt, 7});
    CHECK_THROWS_AS(train(cfg, bad, {}), Error);
}

TEST_CASE("actmax: one-pixel model saturates its pixel and the trace never decreases") {
    ModelConfig cfg;
    cfg.num_classes = 2;
    cfg.audio_input = {3, 4};
    cfg.audio_net = {};
    EchoModel model(cfg, 1);
    zero_params(model);
    // head dense: logit_0 keyed to pixel 5 only
    auto& head = model.param_blocks().back();
    (*head.w)[5] = 1.0;

    const ActMaxResult result = activation_maximization(model, 0, 100, 0.25);
    CHECK(result.input.data[5] == doctest::Approx(1.0).epsilon(1e-9));
    for (size_t i = 1; i < result.logit_trace.size(); ++i)
        CHECK(result.logit_trace[i] >= result.logit_trace[i - 1]);

    // scores higher on class 0 than the zero input does
    Tensor zero_in({3, 4, 1});
    Tensor grad;
    const double zero_logit = model.input_gradient(zero_in, 0, grad);
    CHECK(result.logit_trace.back() > zero_logit);
    model.zero_grads();
}

TEST_CASE("actmax: trained random model improves its class logit") {
    EchoModel model(tiny_audio_config(), 3);
    const ActMaxResult result = activation_maximization(model, 1, 60, 0.1);
    CHECK(result.logit_trace.back() >= result.logit_trace.front());
    for (double v : result.input.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("checkpoint: save/load round trip preserves parameters bit-exactly") {
    const std::string path = std::string(ECHOREC_TMP_DIR) + "/ckpt_roundtrip.echc";
    EchoModel model(tiny_mfb_config(), 9);
    Checkpoint ckpt = make_checkpoint(model, {{"note", "fixture"}});
    save_checkpoint(path, ckpt);
    const Checkpoint loaded = load_checkpoint(path);
    CHECK(loaded.params == ckpt.params);
    CHECK(loaded.metadata.at("note") == "fixture");

    // forward agreement between original and reloaded models
    EchoModel reloaded = model_from_checkpoint(loaded);
    Rng rng(2);
    const Tensor audio = random_tensor(model.audio_input_shape(), rng);
    const Tensor image = random_tensor(model.visual_input_shape(), rng);
    const auto pa = model.forward(audio, &image);
    const auto pb = reloaded.forward(audio, &image);
    for (size_t i = 0; i < pa.size(); ++i)
        CHECK(pb[i] == doctest::Approx(pa[i]).epsilon(1e-5));

    // second-generation round trip is byte-identical
    const std::string path2 = std::string(ECHOREC_TMP_DIR) + "/ckpt_roundtrip2.echc";
    save_checkpoint(path2, make_checkpoint(reloaded, {{"note", "fixture"}}));
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
}

TEST_CASE("checkpoint: corrupted magic, truncation, and version mismatch are rejected") {
    const std::string good = std::string(ECHOREC_TMP_DIR) + "/ckpt_good.echc";
    EchoModel model(tiny_audio_config(), 2);
    save_checkpoint(good, make_checkpoint(model));

    std::ifstream in(good, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();

    const std::string bad_magic = std::string(ECHOREC_TMP_DIR) + "/ckpt_badmagic.echc";
    {
        std::string corrupted = bytes;
        corrupted[0] = 'X';
        std::ofstream(bad_magic, std::ios::binary) << corrupted;
    }
    CHECK_THROWS_AS(load_checkpoint(bad_magic), Error);

    const std::string truncated = std::string(ECHOREC_TMP_DIR) + "/ckpt_trunc.echc";
    std::ofstream(truncated, std::ios::binary) << bytes.substr(0, bytes.size() / 2);
    CHECK_THROWS_AS(load_checkpoint(truncated), Error);

    const std::string bad_version = std::string(ECHOREC_TMP_DIR) + "/ckpt_badver.echc";
    {
        std::string corrupted = bytes;
        corrupted[4] = 99;  // version field
        std::ofstream(bad_version, std::ios::binary) << corrupted;
    }
    try {
        load_checkpoint(bad_version);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnsupportedVersion);
    }
}

TEST_CASE("model config: textual round trip") {
    for (const ModelConfig& cfg :
         {tiny_audio_config(), tiny_concat_config(), tiny_mfb_config(),
          ModelConfig::default_audio(6), ModelConfig::audio_visual(2, MergeKind::Mfb, true)}) {
        const ModelConfig parsed = ModelConfig::parse(cfg.to_string());
        CHECK(parsed.to_string() == cfg.to_string());
        // same parameter space
        EchoModel a(cfg, 3);
        EchoModel b(parsed, 3);
        CHECK(a.flatten_params() == b.flatten_params());
    }
}

TEST_CASE("model config: invalid stacks are rejected") {
    ModelConfig cfg;
    cfg.num_classes = 1;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.num_classes = 2;
    cfg.audio_net = {LayerSpec::softmax()};
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.audio_net = {};
    cfg.visual_net = {LayerSpec::dense(3)};
    cfg.merge.kind = MergeKind::None;
    CHECK_THROWS_AS(cfg.validate(), Error);
}
