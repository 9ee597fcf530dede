#include "moodreader/metrics.hpp"

#include <cstdio>
#include <sstream>

namespace mr {

Metrics count_metrics(const std::vector<std::size_t>& labels,
                      const std::vector<std::size_t>& predictions, std::size_t classes) {
    if (labels.size() != predictions.size())
        throw DataError("metrics: label/prediction count mismatch");
    Metrics m;
    m.total = labels.size();
    m.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= classes || predictions[i] >= classes)
            throw DataError("metrics: class index out of range");
        m.confusion[labels[i]][predictions[i]]++;
        if (labels[i] == predictions[i]) ++m.correct;
    }
    m.accuracy = m.total ? static_cast<double>(m.correct) / static_cast<double>(m.total) : 0.0;
    return m;
}

std::string Metrics::to_json() const {
    std::ostringstream os;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", accuracy);
    os << "{\n  \"accuracy\": " << buf;
    std::snprintf(buf, sizeof buf, "%.6f", accuracy_std);
    os << ",\n  \"accuracy_std\": " << buf;
    os << ",\n  \"correct\": " << correct << ",\n  \"total\": " << total;
    os << ",\n  \"confusion\": [";
    for (std::size_t i = 0; i < confusion.size(); ++i) {
        if (i) os << ", ";
        os << "[";
        for (std::size_t j = 0; j < confusion[i].size(); ++j) {
            if (j) os << ", ";
            os << confusion[i][j];
        }
        os << "]";
    }
    os << "]\n}\n";
    return os.str();
}

std::string Metrics::to_table(const std::string& title) const {
    std::ostringstream os;
    char buf[128];
    os << title << "\n";
    std::snprintf(buf, sizeof buf, "  accuracy: %.4f (%zu/%zu)  std: %.4f\n", accuracy,
                  correct, total, accuracy_std);
    os << buf;
    os << "  confusion (rows = true class):\n";
    for (const auto& row : confusion) {
        os << "   ";
        for (std::size_t v : row) {
            std::snprintf(buf, sizeof buf, " %5zu", v);
            os << buf;
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace mr
