#pragma once

#include <string>
#include <vector>

#include "moodreader/tensor.hpp"

namespace mr {

struct Electrode {
    std::string name;
    double x;  // left-right, [-1, 1]
    double y;  // back-front, [-1, 1]
};

/// Extended 10-20 62-channel layout (SEED ordering).
const std::vector<Electrode>& seed62_layout();

/// Layout from a CSV file with lines "name,x,y".
std::vector<Electrode> load_layout(const std::string& path);
void write_layout_csv(const std::string& path, const std::vector<Electrode>& layout);

/// Normalizes weights to sum 1 and writes one record per channel:
/// name,x,y,weight.
void write_attention_csv(const std::string& path, const Tensor& weights,
                         const std::vector<Electrode>& layout);

/// Renders an interpolated head plot (PPM image) of the per-channel weights.
void write_topomap_ppm(const std::string& path, const Tensor& weights,
                       const std::vector<Electrode>& layout, std::size_t pixels = 256);

}  // namespace mr
