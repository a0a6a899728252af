#pragma once

#include <cstdint>
#include <vector>

namespace echorec {

struct FlatExample {
    std::vector<double> features;
    int label = 0;
};

/// Majority vote over the k Euclidean nearest neighbors in feature space.
/// Vote ties break to the class of the nearest tied neighbor.
int knn_classify(const std::vector<FlatExample>& train, const std::vector<double>& query, int k);

struct SvmConfig {
    double lr = 0.05;
    double lambda = 1e-4;
    int epochs = 200;
    uint64_t seed = 0;
    double tol = 1e-5;  // objective improvement threshold for convergence
};

/// Linear one-vs-rest SVM, hinge loss + L2, full-batch subgradient descent.
struct SvmModel {
    size_t dim = 0;
    int classes = 0;
    std::vector<double> weights;  // classes x (dim + 1), bias last
    bool converged = false;

    double margin(const std::vector<double>& x, int cls) const;
    /// argmax margin; ties break to the lower class index.
    int predict(const std::vector<double>& x) const;
};

SvmModel svm_train(const std::vector<FlatExample>& train, int classes,
                   const SvmConfig& cfg = {});

}  // namespace echorec
