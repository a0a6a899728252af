#include "echorec/actmax.hpp"

#include <algorithm>
#include <cmath>

#include "echorec/errors.hpp"

namespace echorec {

ActMaxResult activation_maximization(EchoModel& model, int cls, int iters, double step) {
    if (iters < 0 || step <= 0.0)
        raise(ErrorCode::InvalidConfig, "activation maximization needs iters >= 0, step > 0");

    ActMaxResult result;
    result.input = Tensor(model.audio_input_shape());
    result.input.fill(0.5);  // mid-gray start; zeros stall behind dead ReLUs

    Tensor grad;
    double logit = model.input_gradient(result.input, cls, grad);
    result.logit_trace.push_back(logit);

    double s = step;
    constexpr double kMinStep = 1e-8;
    for (int it = 0; it < iters && s >= kMinStep; ++it) {
        Tensor candidate = result.input;
        for (size_t i = 0; i < candidate.numel(); ++i)
            candidate.data[i] = std::clamp(candidate.data[i] + s * grad.data[i], 0.0, 1.0);

        Tensor cand_grad;
        const double cand_logit = model.input_gradient(candidate, cls, cand_grad);
        if (cand_logit >= logit) {
            result.input = std::move(candidate);
            grad = std::move(cand_grad);
            logit = cand_logit;
            result.logit_trace.push_back(logit);
            s *= 1.2;
        } else {
            s *= 0.5;  // backtrack; the trace only records accepted steps
        }
    }

    model.zero_grads();  // input_gradient accumulates into parameter grads
    return result;
}

}  // namespace echorec
