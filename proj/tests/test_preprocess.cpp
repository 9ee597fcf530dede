#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "moodreader/preprocess.hpp"
#include "moodreader/rng.hpp"

using namespace mr;

namespace {

constexpr double kPi = 3.14159265358979323846;

RawRecording noise_recording(std::size_t channels, std::size_t samples, double fs,
                             RandomStream& rng, double amp = 1.0) {
    RawRecording rec;
    rec.fs = fs;
    rec.data = Tensor::matrix(channels, samples);
    for (std::size_t i = 0; i < rec.data.numel(); ++i) rec.data[i] = amp * rng.normal();
    return rec;
}

}  // namespace

TEST_CASE("segment counts and reverse anchoring") {
    RandomStream rng(1);
    auto rec800 = noise_recording(1, 800, 200.0, rng);
    CHECK(segment(rec800).size() == 1);

    auto rec2000 = noise_recording(1, 2000, 200.0, rng);
    auto segs = segment(rec2000);
    REQUIRE(segs.size() == 2);
    // reverse anchoring: [400,1200) and [1200,2000)
    CHECK(segs[0].start == 400);
    CHECK(segs[0].end == 1200);
    CHECK(segs[1].start == 1200);
    CHECK(segs[1].end == 2000);

    auto rec799 = noise_recording(1, 799, 200.0, rng);
    bool short_flag = false;
    CHECK(segment(rec799, 4.0, &short_flag).empty());
    CHECK(short_flag);
}

TEST_CASE("segment count matches index arithmetic at random lengths") {
    RandomStream rng(2);
    for (int trial = 0; trial < 15; ++trial) {
        const std::size_t t = 500 + rng.below(5000);
        auto rec = noise_recording(1, t, 200.0, rng);
        auto segs = segment(rec);
        CHECK(segs.size() == t / 800);
        if (!segs.empty()) {
            CHECK(segs.front().start == t - segs.size() * 800);
            CHECK(segs.back().end == t);
        }
    }
}

TEST_CASE("segments carry the Hanning taper") {
    RandomStream rng(3);
    auto rec = noise_recording(1, 800, 200.0, rng);
    auto segs = segment(rec);
    REQUIRE(segs.size() == 1);
    auto w = hanning_window(800);
    for (std::size_t i : {0ul, 100ul, 400ul, 799ul})
        CHECK(segs[0].tapered.at(0, i) ==
              doctest::Approx(rec.data.at(0, i) * w[i]).epsilon(1e-12));
}

TEST_CASE("full-band DE of unit-variance white noise approximates 0.5 ln(2 pi e)") {
    // Monte Carlo oracle averaged over 100 seeded realizations
    std::vector<Band> full = {{"full", 0.0, 100.0}};
    double acc = 0.0;
    for (int r = 0; r < 100; ++r) {
        RandomStream rng(1000 + r);
        Tensor seg = Tensor::matrix(1, 800);
        for (std::size_t i = 0; i < 800; ++i) seg[i] = rng.normal();
        Tensor de = de_features(seg, 200.0, full);
        acc += de[0];
    }
    acc /= 100.0;
    const double expect = 0.5 * std::log(2.0 * kPi * std::exp(1.0));
    CHECK(acc == doctest::Approx(expect).epsilon(0.05 / expect));
}

TEST_CASE("scaling the signal by 2 raises every band DE by ln 2") {
    RandomStream rng(7);
    Tensor seg = Tensor::matrix(2, 800);
    for (std::size_t i = 0; i < seg.numel(); ++i) seg[i] = rng.normal();
    Tensor seg2 = seg;
    for (std::size_t i = 0; i < seg2.numel(); ++i) seg2[i] *= 2.0;
    auto bands = default_bands();
    Tensor de1 = de_features(seg, 200.0, bands);
    Tensor de2 = de_features(seg2, 200.0, bands);
    for (std::size_t i = 0; i < de1.numel(); ++i)
        CHECK(de2[i] - de1[i] == doctest::Approx(std::log(2.0)).epsilon(1e-2 / 0.69));
}

TEST_CASE("pure 10 Hz sine: alpha DE strictly above gamma DE") {
    Tensor seg = Tensor::matrix(1, 800);
    for (std::size_t i = 0; i < 800; ++i) seg[i] = std::sin(2.0 * kPi * 10.0 * i / 200.0);
    Tensor de = de_features(seg, 200.0, default_bands());
    // band order: delta, theta, alpha, beta, gamma
    CHECK(de[2] > de[4]);
}

TEST_CASE("zero signal floors at the variance clamp without NaN") {
    Tensor seg = Tensor::matrix(1, 800);
    Tensor de = de_features(seg, 200.0, default_bands());
    CHECK(de.all_finite());
}

TEST_CASE("grouping arithmetic and raw-span bookkeeping") {
    RandomStream rng(11);
    auto rec12 = noise_recording(2, 800 * 12, 200.0, rng);
    auto grouped12 = preprocess_trial(rec12, default_bands());
    CHECK(grouped12.size() == 3);

    auto rec13 = noise_recording(2, 800 * 13, 200.0, rng);
    auto grouped13 = preprocess_trial(rec13, default_bands());
    CHECK(grouped13.size() == 3);  // 13 windows -> 3 groups, 1 dropped

    for (const auto& g : grouped12) {
        CHECK(g.de.windows() == 4);
        CHECK(g.de.bands() == 5);
        CHECK(g.de.channels() == 2);
        CHECK(g.end - g.start == 4 * 800);
        CHECK(g.raw_span.rows() == 2);
        CHECK(g.raw_span.cols() == 4 * 800);
    }
    // consecutive groups tile the windowed region
    CHECK(grouped12[0].end == grouped12[1].start);
    CHECK(grouped12[1].end == grouped12[2].start);
}

TEST_CASE("fewer than 4 windows yields no grouped samples") {
    RandomStream rng(13);
    auto rec = noise_recording(1, 800 * 3, 200.0, rng);
    CHECK(preprocess_trial(rec, default_bands()).empty());
}

TEST_CASE("pipeline is deterministic") {
    RandomStream rng(17);
    auto rec = noise_recording(3, 800 * 4 + 137, 200.0, rng);
    auto a = preprocess_trial(rec, default_bands());
    auto b = preprocess_trial(rec, default_bands());
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].de.values.data() == b[i].de.values.data());
        CHECK(a[i].raw_span.data() == b[i].raw_span.data());
    }
}

TEST_CASE("a DC offset added after bandpass barely moves DE") {
    RandomStream rng(19);
    Tensor seg = Tensor::matrix(1, 800);
    for (std::size_t i = 0; i < 800; ++i) seg[i] = rng.normal();
    Tensor shifted = seg;
    for (std::size_t i = 0; i < 800; ++i) shifted[i] += 5.0;
    auto bands = default_bands();
    Tensor d1 = de_features(seg, 200.0, bands);
    Tensor d2 = de_features(shifted, 200.0, bands);
    for (std::size_t i = 0; i < d1.numel(); ++i) CHECK(std::fabs(d2[i] - d1[i]) < 1e-3);
}

TEST_CASE("default bands cover 1-50 Hz in five contiguous spans") {
    auto bands = default_bands();
    REQUIRE(bands.size() == 5);
    CHECK(bands.front().low_hz == doctest::Approx(1.0));
    CHECK(bands.back().high_hz == doctest::Approx(50.0));
    for (std::size_t i = 1; i < bands.size(); ++i)
        CHECK(bands[i].low_hz == doctest::Approx(bands[i - 1].high_hz));
}
