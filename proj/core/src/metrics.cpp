#include "echorec/metrics.hpp"

#include <iomanip>
#include <sstream>

#include "echorec/errors.hpp"

namespace echorec {

Metrics evaluate_predictions(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                             int num_classes) {
    if (y_true.empty()) raise(ErrorCode::EmptyTestSet, "no examples to evaluate");
    if (y_true.size() != y_pred.size())
        raise(ErrorCode::ShapeMismatch, "prediction/label count mismatch");

    Metrics m;
    m.total = static_cast<int>(y_true.size());
    m.confusion.assign(static_cast<size_t>(num_classes),
                       std::vector<int>(static_cast<size_t>(num_classes), 0));
    m.class_counts.assign(static_cast<size_t>(num_classes), 0);

    int correct = 0;
    for (size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i], p = y_pred[i];
        if (t < 0 || t >= num_classes || p < 0 || p >= num_classes)
            raise(ErrorCode::LabelOutOfRange, "label outside class range");
        m.confusion[static_cast<size_t>(t)][static_cast<size_t>(p)]++;
        m.class_counts[static_cast<size_t>(t)]++;
        if (t == p) ++correct;
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(m.total);
    m.per_class_accuracy.assign(static_cast<size_t>(num_classes), 0.0);
    for (int c = 0; c < num_classes; ++c) {
        const int n = m.class_counts[static_cast<size_t>(c)];
        if (n > 0)
            m.per_class_accuracy[static_cast<size_t>(c)] =
                static_cast<double>(m.confusion[static_cast<size_t>(c)][static_cast<size_t>(c)]) /
                static_cast<double>(n);
    }
    return m;
}

std::string metrics_table(const Metrics& m, const std::vector<std::string>& class_names,
                          const std::string& title) {
    std::ostringstream os;
    os << title << "\n";
    os << "overall accuracy: " << std::fixed << std::setprecision(4) << m.accuracy << " ("
       << m.total << " examples)\n";
    size_t width = 8;
    for (const auto& n : class_names) width = std::max(width, n.size() + 2);
    os << std::setw(static_cast<int>(width)) << "class"
       << std::setw(10) << "count" << std::setw(10) << "acc";
    for (const auto& n : class_names) os << std::setw(static_cast<int>(width)) << n;
    os << "\n";
    for (size_t c = 0; c < class_names.size(); ++c) {
        os << std::setw(static_cast<int>(width)) << class_names[c]
           << std::setw(10) << m.class_counts[c]
           << std::setw(10) << std::setprecision(4) << m.per_class_accuracy[c];
        for (size_t p = 0; p < class_names.size(); ++p)
            os << std::setw(static_cast<int>(width)) << m.confusion[c][p];
        os << "\n";
    }
    return os.str();
}

std::string metrics_records(const Metrics& m, const std::string& task,
                            const std::vector<std::string>& class_names) {
    std::ostringstream os;
    os << "metric task=" << task << " name=accuracy value=" << m.accuracy
       << " total=" << m.total << "\n";
    for (size_t c = 0; c < class_names.size(); ++c)
        os << "metric task=" << task << " name=class_accuracy class=" << class_names[c]
           << " value=" << m.per_class_accuracy[c] << " count=" << m.class_counts[c] << "\n";
    return os.str();
}

std::string confusion_csv(const Metrics& m, const std::vector<std::string>& class_names) {
    std::ostringstream os;
    os << "true\\pred";
    for (const auto& n : class_names) os << "," << n;
    os << "\n";
    for (size_t c = 0; c < class_names.size(); ++c) {
        os << class_names[c];
        for (size_t p = 0; p < class_names.size(); ++p) os << "," << m.confusion[c][p];
        os << "\n";
    }
    return os.str();
}

}  // namespace echorec
