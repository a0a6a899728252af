#pragma once

#include <string>
#include <vector>

namespace echorec {

struct Metrics {
    double accuracy = 0.0;
    std::vector<double> per_class_accuracy;
    std::vector<std::vector<int>> confusion;  // [true][pred]
    std::vector<int> class_counts;
    int total = 0;
};

/// Accuracy, per-class accuracy, and the confusion matrix. Throws
/// EmptyTestSet for empty inputs.
Metrics evaluate_predictions(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                             int num_classes);

/// Aligned plain-text table.
std::string metrics_table(const Metrics& m, const std::vector<std::string>& class_names,
                          const std::string& title);
/// Line-delimited machine-readable records.
std::string metrics_records(const Metrics& m, const std::string& task,
                            const std::vector<std::string>& class_names);
std::string confusion_csv(const Metrics& m, const std::vector<std::string>& class_names);

}  // namespace echorec
