#include "echorec/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "echorec/errors.hpp"
#include "echorec/rng.hpp"

namespace echorec {

void TrainConfig::validate() const {
    if (batch_size < 1) raise(ErrorCode::InvalidConfig, "batch size must be >= 1");
    if (val_fraction < 0.0 || val_fraction >= 1.0)
        raise(ErrorCode::InvalidConfig, "validation fraction must be in [0, 1)");
    if (epochs < 0) raise(ErrorCode::InvalidConfig, "epochs must be >= 0");
    if (lr < 0.0) raise(ErrorCode::InvalidConfig, "learning rate must be >= 0");
}

Adam::Adam(EchoModel& model, const TrainConfig& cfg) : model_(model), cfg_(cfg) {
    m_.assign(model.num_params(), 0.0);
    v_.assign(model.num_params(), 0.0);
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    size_t off = 0;
    for (auto& block : model_.param_blocks()) {
        std::vector<double>& w = *block.w;
        const std::vector<double>& g = *block.g;
        for (size_t i = 0; i < w.size(); ++i, ++off) {
            m_[off] = cfg_.beta1 * m_[off] + (1.0 - cfg_.beta1) * g[i];
            v_[off] = cfg_.beta2 * v_[off] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double mhat = m_[off] / bc1;
            const double vhat = v_[off] / bc2;
            w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

namespace {

void shuffle_indices(std::vector<size_t>& idx, Rng& rng) {
    for (size_t i = idx.size(); i > 1; --i) {
        const size_t j = rng.next_u64() % i;
        std::swap(idx[i - 1], idx[j]);
    }
}

double mean_loss(EchoModel& model, const std::vector<TrainExample>& data,
                 const std::vector<size_t>& idx) {
    if (idx.empty()) return 0.0;
    double acc = 0.0;
    for (size_t i : idx) {
        const TrainExample& ex = data[i];
        const std::vector<double> p =
            model.forward(ex.audio, ex.image ? &*ex.image : nullptr);
        acc += cross_entropy(p, ex.label);
    }
    return acc / static_cast<double>(idx.size());
}

std::string join_doubles(const std::vector<double>& v) {
    std::ostringstream os;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) os << ",";
        os << v[i];
    }
    return os.str();
}

}  // namespace

TrainResult train(const ModelConfig& model_cfg, const std::vector<TrainExample>& dataset,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (dataset.empty()) raise(ErrorCode::EmptyDataset, "training dataset is empty");
    for (const auto& ex : dataset)
        if (ex.label < 0 || ex.label >= model_cfg.num_classes)
            raise(ErrorCode::LabelOutOfRange,
                  "label " + std::to_string(ex.label) + " outside " +
                      std::to_string(model_cfg.num_classes) + " classes");

    EchoModel model(model_cfg, cfg.seed);
    Adam opt(model, cfg);

    // the sampler owns all randomness: carve the validation split and order
    // batches from one seeded stream
    Rng sampler(Rng::mix(cfg.seed, 0x5a4d13));
    std::vector<size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle_indices(order, sampler);

    const size_t n_val = static_cast<size_t>(std::floor(cfg.val_fraction *
                                                        static_cast<double>(order.size())));
    std::vector<size_t> val_idx(order.begin(), order.begin() + static_cast<long>(n_val));
    std::vector<size_t> train_idx(order.begin() + static_cast<long>(n_val), order.end());
    if (train_idx.empty()) raise(ErrorCode::EmptyDataset, "no examples left after val split");

    TrainResult result;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_indices(train_idx, sampler);
        double epoch_loss = 0.0;
        size_t seen = 0;
        for (size_t start = 0; start < train_idx.size();
             start += static_cast<size_t>(cfg.batch_size)) {
            const size_t end =
                std::min(train_idx.size(), start + static_cast<size_t>(cfg.batch_size));
            const double scale = 1.0 / static_cast<double>(end - start);
            model.zero_grads();
            for (size_t i = start; i < end; ++i) {
                const TrainExample& ex = dataset[train_idx[i]];
                model.forward(ex.audio, ex.image ? &*ex.image : nullptr);
                epoch_loss += model.loss_backward(ex.label, scale);
                ++seen;
            }
            opt.step();
        }
        result.train_loss.push_back(epoch_loss / static_cast<double>(seen));
        if (!val_idx.empty()) result.val_loss.push_back(mean_loss(model, dataset, val_idx));
    }

    std::map<std::string, std::string> meta;
    meta["seed"] = std::to_string(cfg.seed);
    meta["epochs"] = std::to_string(cfg.epochs);
    meta["batch_size"] = std::to_string(cfg.batch_size);
    meta["lr"] = std::to_string(cfg.lr);
    meta["train_loss"] = join_doubles(result.train_loss);
    meta["val_loss"] = join_doubles(result.val_loss);
    result.checkpoint = make_checkpoint(model, std::move(meta));
    return result;
}

}  // namespace echorec
