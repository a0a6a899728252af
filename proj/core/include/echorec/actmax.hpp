#pragma once

#include <vector>

#include "echorec/model.hpp"

namespace echorec {

struct ActMaxResult {
    Tensor input;                    // synthesized grid, clamped to [0, 1]
    std::vector<double> logit_trace; // logit after each accepted step
};

/// Gradient ascent on the audio input maximizing the pre-softmax logit of
/// `cls`. Steps are backtracked until they improve, so the trace is
/// non-decreasing.
ActMaxResult activation_maximization(EchoModel& model, int cls, int iters, double step);

}  // namespace echorec
