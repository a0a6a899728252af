#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "echorec/checkpoint.hpp"
#include "echorec/model.hpp"

namespace echorec {

struct TrainConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int batch_size = 32;
    int epochs = 20;
    uint64_t seed = 0;
    double val_fraction = 0.1;

    void validate() const;
};

struct TrainExample {
    Tensor audio;
    std::optional<Tensor> image;
    int label = 0;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<double> train_loss;  // per epoch
    std::vector<double> val_loss;    // per epoch; empty if no validation split
};

/// Seeded mini-batch training with ADAM. All randomness (shuffling, weight
/// init) derives from cfg.seed; identical seeds give bit-identical results.
TrainResult train(const ModelConfig& model_cfg, const std::vector<TrainExample>& dataset,
                  const TrainConfig& cfg);

/// ADAM optimizer state over a model's parameter registry.
class Adam {
  public:
    Adam(EchoModel& model, const TrainConfig& cfg);
    void step();

  private:
    EchoModel& model_;
    TrainConfig cfg_;
    std::vector<double> m_, v_;
    long t_ = 0;
};

}  // namespace echorec
