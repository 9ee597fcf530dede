#pragma once

#include <string>
#include <vector>

#include "moodreader/tensor.hpp"

namespace mr {

struct Metrics {
    double accuracy = 0.0;
    double accuracy_std = 0.0;  // across seeded repetitions when requested
    std::size_t correct = 0;
    std::size_t total = 0;
    std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]

    std::string to_json() const;
    std::string to_table(const std::string& title) const;
};

/// Accuracy by an independent counting pass over (label, prediction) pairs.
Metrics count_metrics(const std::vector<std::size_t>& labels,
                      const std::vector<std::size_t>& predictions, std::size_t classes);

}  // namespace mr
