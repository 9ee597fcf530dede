#include "moodreader/topomap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mr {

namespace {

void add_row(std::vector<Electrode>& v, const std::vector<std::string>& names, double y,
             double x_span) {
    const std::size_t n = names.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double x =
            n == 1 ? 0.0 : -x_span + 2.0 * x_span * static_cast<double>(i) / (n - 1);
        v.push_back({names[i], x, y});
    }
}

std::vector<Electrode> build_seed62() {
    std::vector<Electrode> v;
    add_row(v, {"FP1", "FPZ", "FP2"}, 0.95, 0.30);
    add_row(v, {"AF3", "AF4"}, 0.82, 0.25);
    add_row(v, {"F7", "F5", "F3", "F1", "FZ", "F2", "F4", "F6", "F8"}, 0.65, 0.80);
    add_row(v, {"FT7", "FC5", "FC3", "FC1", "FCZ", "FC2", "FC4", "FC6", "FT8"}, 0.40, 0.85);
    add_row(v, {"T7", "C5", "C3", "C1", "CZ", "C2", "C4", "C6", "T8"}, 0.00, 0.95);
    add_row(v, {"TP7", "CP5", "CP3", "CP1", "CPZ", "CP2", "CP4", "CP6", "TP8"}, -0.40, 0.85);
    add_row(v, {"P7", "P5", "P3", "P1", "PZ", "P2", "P4", "P6", "P8"}, -0.65, 0.80);
    add_row(v, {"PO7", "PO5", "PO3", "POZ", "PO4", "PO6", "PO8"}, -0.82, 0.60);
    add_row(v, {"CB1", "O1", "OZ", "O2", "CB2"}, -0.95, 0.40);
    return v;
}

}  // namespace

const std::vector<Electrode>& seed62_layout() {
    static const std::vector<Electrode> layout = build_seed62();
    return layout;
}

std::vector<Electrode> load_layout(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open layout file: " + path);
    std::vector<Electrode> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        Electrode e;
        std::string x_str, y_str;
        if (!std::getline(ss, e.name, ',') || !std::getline(ss, x_str, ',') ||
            !std::getline(ss, y_str, ','))
            throw DataError("layout: malformed line '" + line + "'");
        e.x = std::stod(x_str);
        e.y = std::stod(y_str);
        out.push_back(std::move(e));
    }
    if (out.empty()) throw DataError("layout: empty file " + path);
    return out;
}

void write_layout_csv(const std::string& path, const std::vector<Electrode>& layout) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot write layout: " + path);
    os << "# name,x,y\n";
    char buf[128];
    for (const auto& e : layout) {
        std::snprintf(buf, sizeof buf, "%s,%.4f,%.4f\n", e.name.c_str(), e.x, e.y);
        os << buf;
    }
}

void write_attention_csv(const std::string& path, const Tensor& weights,
                         const std::vector<Electrode>& layout) {
    if (weights.numel() != layout.size())
        throw DataError("attention export: " + std::to_string(weights.numel()) +
                        " weights for a " + std::to_string(layout.size()) +
                        "-electrode layout");
    double total = 0.0;
    for (std::size_t i = 0; i < weights.numel(); ++i) {
        if (weights[i] < 0.0) throw DataError("attention export: negative weight");
        total += weights[i];
    }
    if (total <= 0.0) throw DataError("attention export: all-zero weights");
    std::ofstream os(path);
    if (!os) throw IoError("cannot write attention data: " + path);
    os << "name,x,y,weight\n";
    char buf[160];
    for (std::size_t i = 0; i < layout.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s,%.4f,%.4f,%.9f\n", layout[i].name.c_str(),
                      layout[i].x, layout[i].y, weights[i] / total);
        os << buf;
    }
}

void write_topomap_ppm(const std::string& path, const Tensor& weights,
                       const std::vector<Electrode>& layout, std::size_t pixels) {
    if (weights.numel() != layout.size())
        throw DataError("topomap: weight count does not match layout");
    double lo = weights[0], hi = weights[0];
    for (std::size_t i = 0; i < weights.numel(); ++i) {
        lo = std::min(lo, weights[i]);
        hi = std::max(hi, weights[i]);
    }
    const double range = hi - lo > 1e-12 ? hi - lo : 1.0;

    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write topomap: " + path);
    os << "P6\n" << pixels << " " << pixels << "\n255\n";
    for (std::size_t py = 0; py < pixels; ++py) {
        for (std::size_t px = 0; px < pixels; ++px) {
            const double x = 2.0 * (static_cast<double>(px) / (pixels - 1)) - 1.0;
            const double y = 1.0 - 2.0 * (static_cast<double>(py) / (pixels - 1));
            unsigned char rgb[3] = {255, 255, 255};
            if (x * x + y * y <= 1.1025) {  // head disc, radius 1.05
                // inverse-distance-weighted interpolation
                double num = 0.0, den = 0.0;
                for (std::size_t i = 0; i < layout.size(); ++i) {
                    const double dx = x - layout[i].x, dy = y - layout[i].y;
                    const double d2 = dx * dx + dy * dy;
                    if (d2 < 1e-9) {
                        num = weights[i];
                        den = 1.0;
                        break;
                    }
                    const double w = 1.0 / (d2 * d2);
                    num += w * weights[i];
                    den += w;
                }
                const double t = std::clamp((num / den - lo) / range, 0.0, 1.0);
                // blue -> white -> red
                if (t < 0.5) {
                    const double u = t * 2.0;
                    rgb[0] = static_cast<unsigned char>(255 * u);
                    rgb[1] = static_cast<unsigned char>(255 * u);
                    rgb[2] = 255;
                } else {
                    const double u = (t - 0.5) * 2.0;
                    rgb[0] = 255;
                    rgb[1] = static_cast<unsigned char>(255 * (1.0 - u));
                    rgb[2] = static_cast<unsigned char>(255 * (1.0 - u));
                }
            }
            os.write(reinterpret_cast<const char*>(rgb), 3);
        }
    }
}

}  // namespace mr
