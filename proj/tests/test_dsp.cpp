#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "moodreader/preprocess.hpp"

using namespace mr;

namespace {

constexpr double kPi = 3.14159265358979323846;

RawRecording sine_recording(double freq_hz, double fs, double seconds, double amp = 1.0) {
    const std::size_t n = static_cast<std::size_t>(seconds * fs);
    RawRecording rec;
    rec.fs = fs;
    rec.data = Tensor::matrix(1, n);
    for (std::size_t i = 0; i < n; ++i)
        rec.data[i] = amp * std::sin(2.0 * kPi * freq_hz * i / fs);
    return rec;
}

double db(double ratio) { return 20.0 * std::log10(ratio); }

std::vector<double> channel0(const RawRecording& rec) {
    return std::vector<double>(rec.data.data().begin(),
                               rec.data.data().begin() + rec.samples());
}

}  // namespace

TEST_CASE("tone_amplitude probe recovers known amplitudes") {
    auto rec = sine_recording(10.0, 200.0, 4.0, 0.7);
    CHECK(tone_amplitude(channel0(rec), 10.0, 200.0) == doctest::Approx(0.7).epsilon(1e-3));
}

TEST_CASE("bandpass passes 10 Hz within 1 dB") {
    auto rec = sine_recording(10.0, 200.0, 8.0);
    FilterSpec spec;
    auto out = bandpass(rec, spec);
    const double amp = tone_amplitude(channel0(out), 10.0, 200.0);
    CHECK(std::fabs(db(amp)) < 1.0);
}

TEST_CASE("bandpass attenuates DC toward zero") {
    RawRecording rec;
    rec.fs = 200.0;
    rec.data = Tensor::full({1, 1600}, 1.0);
    auto out = bandpass(rec, FilterSpec{});
    double peak = 0.0;
    // ignore filter edge transients
    for (std::size_t i = 400; i < 1200; ++i)
        peak = std::max(peak, std::fabs(out.data[i]));
    CHECK(peak < 0.2);
}

TEST_CASE("bandpass attenuates 90 Hz by at least 20 dB") {
    auto rec = sine_recording(90.0, 200.0, 8.0);
    auto out = bandpass(rec, FilterSpec{});
    const double amp = tone_amplitude(channel0(out), 90.0, 200.0);
    CHECK(db(amp) <= -20.0);
}

TEST_CASE("bandpass rejects cutoff at or above Nyquist") {
    auto rec = sine_recording(10.0, 120.0, 2.0);
    CHECK_THROWS_AS(bandpass(rec, FilterSpec{}), ConfigError);  // 70 >= 60
}

TEST_CASE("notch kills 50 Hz, spares neighbours") {
    auto rec = sine_recording(50.0, 200.0, 8.0);
    auto out = notch(rec, 50.0);
    CHECK(tone_amplitude(channel0(out), 50.0, 200.0) <= 0.1);

    auto rec10 = sine_recording(10.0, 200.0, 8.0);
    auto out10 = notch(rec10, 50.0);
    CHECK(std::fabs(db(tone_amplitude(channel0(out10), 10.0, 200.0))) < 1.0);

    for (double f : {45.0, 55.0}) {
        auto recn = sine_recording(f, 200.0, 8.0);
        auto outn = notch(recn, 50.0);
        CHECK(std::fabs(db(tone_amplitude(channel0(outn), f, 200.0))) < 2.0);
    }
}

TEST_CASE("notch of zero signal is zero") {
    RawRecording rec;
    rec.fs = 200.0;
    rec.data = Tensor::matrix(1, 800);
    auto out = notch(rec, 50.0);
    for (std::size_t i = 0; i < out.data.numel(); ++i) CHECK(out.data[i] == 0.0);
}

TEST_CASE("resample arithmetic and identity") {
    auto rec = sine_recording(10.0, 1000.0, 10.0);
    auto out = resample(rec, 200.0);
    CHECK(out.fs == 200.0);
    CHECK(out.samples() == 2000);

    auto same = resample(out, 200.0);
    CHECK(same.data.data() == out.data.data());

    CHECK_THROWS_AS(resample(out, 400.0), ConfigError);
}

TEST_CASE("resample preserves 10 Hz content within 1 dB") {
    auto rec = sine_recording(10.0, 1000.0, 8.0);
    auto out = resample(rec, 200.0);
    CHECK(std::fabs(db(tone_amplitude(channel0(out), 10.0, 200.0))) < 1.0);
}

TEST_CASE("full chain magnitude bounds at probe frequencies") {
    // bandpass + notch cascade magnitude sampled at 21 probes
    FilterSpec spec;
    auto rec_chain = [&](double f) {
        auto rec = sine_recording(f, 200.0, 16.0);
        auto out = notch(bandpass(rec, spec), 50.0);
        return tone_amplitude(channel0(out), f, 200.0);
    };
    for (int i = 0; i < 21; ++i) {
        const double f = 2.0 + i * 4.0;  // 2..82 Hz
        const double amp = rec_chain(f);
        if (f >= 2.0 && f <= 40.0) {
            CHECK(db(amp) > -3.0);  // pass band
        } else if (f >= 80.0) {
            CHECK(db(amp) < -12.0);  // deep in the stop band
        }
    }
}

TEST_CASE("filtfilt is zero-phase for an in-band tone") {
    auto rec = sine_recording(10.0, 200.0, 8.0);
    auto sections = butter_lowpass(6, 70.0, 200.0);
    auto y = filtfilt(sections, channel0(rec));
    // zero phase: peak of cross-correlation at lag 0
    const auto& x = rec.data.data();
    double best = -1e300;
    int best_lag = -99;
    for (int lag = -5; lag <= 5; ++lag) {
        double acc = 0;
        for (std::size_t i = 100; i + 100 < y.size(); ++i)
            acc += y[i] * x[i + lag];
        if (acc > best) {
            best = acc;
            best_lag = lag;
        }
    }
    CHECK(best_lag == 0);
}

TEST_CASE("rfft matches the analytic spectrum of a cosine") {
    const std::size_t n = 256;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::cos(2.0 * kPi * 16.0 * i / n);
    auto spec = rfft(x);
    REQUIRE(spec.size() == n / 2 + 1);
    CHECK(std::abs(spec[16]) == doctest::Approx(n / 2.0).epsilon(1e-9));
    CHECK(std::abs(spec[15]) < 1e-6);
    CHECK(std::abs(spec[17]) < 1e-6);
}

TEST_CASE("hanning window endpoints and symmetry") {
    auto w = hanning_window(800);
    CHECK(w.size() == 800);
    for (std::size_t i = 0; i < 400; ++i)
        CHECK(w[i] == doctest::Approx(w[799 - i]).epsilon(1e-12));
    const double mid = *std::max_element(w.begin(), w.end());
    CHECK(mid == doctest::Approx(1.0).epsilon(1e-4));
}
