#include "echorec/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "echorec/errors.hpp"

namespace echorec {

int knn_classify(const std::vector<FlatExample>& train, const std::vector<double>& query,
                 int k) {
    if (train.empty()) raise(ErrorCode::EmptyTrainSet, "kNN needs a non-empty training set");
    if (k < 1) raise(ErrorCode::InvalidConfig, "k must be >= 1");
    k = std::min<int>(k, static_cast<int>(train.size()));

    struct Neighbor {
        double dist2;
        size_t idx;
    };
    std::vector<Neighbor> neighbors;
    neighbors.reserve(train.size());
    for (size_t i = 0; i < train.size(); ++i) {
        const auto& x = train[i].features;
        if (x.size() != query.size())
            raise(ErrorCode::ShapeMismatch, "kNN feature dimension mismatch");
        double d = 0.0;
        for (size_t j = 0; j < x.size(); ++j) {
            const double diff = x[j] - query[j];
            d += diff * diff;
        }
        neighbors.push_back({d, i});
    }
    std::partial_sort(neighbors.begin(), neighbors.begin() + k, neighbors.end(),
                      [](const Neighbor& a, const Neighbor& b) {
                          if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
                          return a.idx < b.idx;
                      });

    std::map<int, int> votes;
    for (int i = 0; i < k; ++i) votes[train[neighbors[static_cast<size_t>(i)].idx].label]++;
    int best_count = 0;
    for (const auto& [label, count] : votes) best_count = std::max(best_count, count);
    // tie: the nearest neighbor belonging to a tied class decides
    for (int i = 0; i < k; ++i) {
        const int label = train[neighbors[static_cast<size_t>(i)].idx].label;
        if (votes[label] == best_count) return label;
    }
    return train[neighbors[0].idx].label;
}

double SvmModel::margin(const std::vector<double>& x, int cls) const {
    const double* w = &weights[static_cast<size_t>(cls) * (dim + 1)];
    double m = w[dim];  // bias
    for (size_t j = 0; j < dim; ++j) m += w[j] * x[j];
    return m;
}

int SvmModel::predict(const std::vector<double>& x) const {
    if (x.size() != dim) raise(ErrorCode::ShapeMismatch, "SVM feature dimension mismatch");
    int best = 0;
    double best_m = margin(x, 0);
    for (int c = 1; c < classes; ++c) {
        const double m = margin(x, c);
        if (m > best_m) {
            best_m = m;
            best = c;
        }
    }
    return best;
}

SvmModel svm_train(const std::vector<FlatExample>& train, int classes, const SvmConfig& cfg) {
    if (train.empty()) raise(ErrorCode::EmptyTrainSet, "SVM needs a non-empty training set");
    if (classes < 2) raise(ErrorCode::InvalidConfig, "SVM needs at least two classes");

    SvmModel model;
    model.dim = train[0].features.size();
    model.classes = classes;
    model.weights.assign(static_cast<size_t>(classes) * (model.dim + 1), 0.0);

    const double inv_n = 1.0 / static_cast<double>(train.size());
    double prev_obj = 1e300;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.lr / (1.0 + 0.01 * static_cast<double>(epoch));
        double objective = 0.0;
        for (int c = 0; c < classes; ++c) {
            double* w = &model.weights[static_cast<size_t>(c) * (model.dim + 1)];
            std::vector<double> grad(model.dim + 1, 0.0);
            for (const auto& ex : train) {
                const double y = ex.label == c ? 1.0 : -1.0;
                double m = w[model.dim];
                for (size_t j = 0; j < model.dim; ++j) m += w[j] * ex.features[j];
                const double hinge = 1.0 - y * m;
                if (hinge > 0.0) {
                    objective += hinge * inv_n;
                    for (size_t j = 0; j < model.dim; ++j) grad[j] -= y * ex.features[j];
                    grad[model.dim] -= y;
                }
            }
            for (size_t j = 0; j < model.dim; ++j) {
                objective += 0.5 * cfg.lambda * w[j] * w[j];
                w[j] -= lr * (grad[j] * inv_n + cfg.lambda * w[j]);
            }
            w[model.dim] -= lr * grad[model.dim] * inv_n;
        }
        if (std::fabs(prev_obj - objective) < cfg.tol) {
            model.converged = true;
            break;
        }
        prev_obj = objective;
    }
    return model;
}

}  // namespace echorec
