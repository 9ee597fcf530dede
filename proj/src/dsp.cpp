#include "moodreader/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "moodreader/tensor.hpp"

namespace mr {

namespace {
constexpr double kPi = 3.14159265358979323846;

std::complex<double> biquad_response(const Biquad& s, double w) {
    const std::complex<double> z1 = std::polar(1.0, -w);
    const std::complex<double> z2 = z1 * z1;
    return (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
}

Biquad rbj_section(double w0, double q, bool highpass) {
    const double c = std::cos(w0);
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad s;
    if (highpass) {
        s.b0 = (1.0 + c) / 2.0 / a0;
        s.b1 = -(1.0 + c) / a0;
        s.b2 = s.b0;
    } else {
        s.b0 = (1.0 - c) / 2.0 / a0;
        s.b1 = (1.0 - c) / a0;
        s.b2 = s.b0;
    }
    s.a1 = -2.0 * c / a0;
    s.a2 = (1.0 - alpha) / a0;
    return s;
}

std::vector<Biquad> butter(std::size_t order, double cutoff_hz, double fs, bool highpass) {
    if (order == 0 || order % 2 != 0)
        throw ConfigError("butterworth: even positive order required");
    if (cutoff_hz <= 0.0 || cutoff_hz >= fs / 2.0)
        throw ConfigError("butterworth: cutoff " + std::to_string(cutoff_hz) +
                          " Hz outside (0, Nyquist) at fs " + std::to_string(fs));
    const double w0 = 2.0 * kPi * cutoff_hz / fs;
    std::vector<Biquad> sections;
    for (std::size_t k = 0; k < order / 2; ++k) {
        const double q = 1.0 / (2.0 * std::sin((2.0 * k + 1.0) * kPi / (2.0 * order)));
        sections.push_back(rbj_section(w0, q, highpass));
    }
    return sections;
}
}  // namespace

double Biquad::magnitude_at(double freq_hz, double fs) const {
    return std::abs(biquad_response(*this, 2.0 * kPi * freq_hz / fs));
}

std::vector<Biquad> butter_lowpass(std::size_t order, double cutoff_hz, double fs) {
    return butter(order, cutoff_hz, fs, false);
}

std::vector<Biquad> butter_highpass(std::size_t order, double cutoff_hz, double fs) {
    return butter(order, cutoff_hz, fs, true);
}

Biquad notch_biquad(double center_hz, double fs, double q) {
    if (center_hz <= 0.0 || center_hz >= fs / 2.0)
        throw ConfigError("notch: center frequency outside (0, Nyquist)");
    const double w0 = 2.0 * kPi * center_hz / fs;
    const double c = std::cos(w0);
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad s;
    s.b0 = 1.0 / a0;
    s.b1 = -2.0 * c / a0;
    s.b2 = 1.0 / a0;
    s.a1 = -2.0 * c / a0;
    s.a2 = (1.0 - alpha) / a0;
    return s;
}

std::vector<double> apply_cascade(const std::vector<Biquad>& sections,
                                  const std::vector<double>& x) {
    std::vector<double> y = x;
    for (const auto& s : sections) {
        double z1 = 0.0, z2 = 0.0;
        for (double& v : y) {
            const double in = v;
            const double out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
    return y;
}

std::vector<double> filtfilt(const std::vector<Biquad>& sections, const std::vector<double>& x) {
    if (x.empty()) return x;
    const std::size_t pad = std::min(x.size() - 1, std::size_t(600));
    std::vector<double> ext;
    ext.reserve(x.size() + 2 * pad);
    for (std::size_t i = 0; i < pad; ++i) ext.push_back(2.0 * x.front() - x[pad - i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 0; i < pad; ++i)
        ext.push_back(2.0 * x.back() - x[x.size() - 2 - i]);

    std::vector<double> fwd = apply_cascade(sections, ext);
    std::reverse(fwd.begin(), fwd.end());
    std::vector<double> bwd = apply_cascade(sections, fwd);
    std::reverse(bwd.begin(), bwd.end());
    return std::vector<double>(bwd.begin() + pad, bwd.begin() + pad + x.size());
}

double cascade_magnitude(const std::vector<Biquad>& sections, double freq_hz, double fs) {
    double m = 1.0;
    for (const auto& s : sections) m *= s.magnitude_at(freq_hz, fs);
    return m;
}

std::vector<std::complex<double>> rfft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n / 2 + 1);
    std::vector<double> in = x;
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                          reinterpret_cast<fftw_complex*>(out.data()),
                                          FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    return out;
}

double tone_amplitude(const std::vector<double>& x, double freq_hz, double fs) {
    // direct correlation against the probe tone; exact for whole cycles
    const std::size_t n = x.size();
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i)
        acc += x[i] * std::polar(1.0, -2.0 * kPi * freq_hz * static_cast<double>(i) / fs);
    return 2.0 * std::abs(acc) / static_cast<double>(n);
}

std::vector<double> hanning_window(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) / (n - 1)));
    return w;
}

}  // namespace mr
