#include "moodreader/preprocess.hpp"

#include <cmath>

namespace mr {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPiE = 2.0 * kPi * 2.718281828459045;

RawRecording apply_per_channel(const RawRecording& rec,
                               const std::vector<Biquad>& sections) {
    RawRecording out = rec;
    const std::size_t c = rec.channels(), t = rec.samples();
    for (std::size_t ch = 0; ch < c; ++ch) {
        std::vector<double> row(t);
        for (std::size_t i = 0; i < t; ++i) row[i] = rec.data.at(ch, i);
        std::vector<double> y = filtfilt(sections, row);
        for (std::size_t i = 0; i < t; ++i) out.data.at(ch, i) = y[i];
    }
    return out;
}
}  // namespace

std::vector<Band> default_bands() {
    return {{"delta", 1.0, 4.0},
            {"theta", 4.0, 8.0},
            {"alpha", 8.0, 14.0},
            {"beta", 14.0, 31.0},
            {"gamma", 31.0, 50.0}};
}

RawRecording bandpass(const RawRecording& rec, const FilterSpec& spec) {
    if (spec.high_hz >= rec.fs / 2.0)
        throw ConfigError("bandpass: high cutoff " + std::to_string(spec.high_hz) +
                          " Hz at or above Nyquist (fs " + std::to_string(rec.fs) + ")");
    if (spec.low_hz >= spec.high_hz) throw ConfigError("bandpass: low >= high");
    // 2nd-order high-pass at the low edge; steeper 6th-order low-pass at the
    // high edge so the stop band clears 20 dB once applied forward-backward.
    std::vector<Biquad> sections = butter_highpass(2, spec.low_hz, rec.fs);
    for (const auto& s : butter_lowpass(6, spec.high_hz, rec.fs)) sections.push_back(s);
    return apply_per_channel(rec, sections);
}

RawRecording notch(const RawRecording& rec, double freq_hz, double q) {
    if (freq_hz >= rec.fs / 2.0)
        throw ConfigError("notch: frequency at or above Nyquist");
    return apply_per_channel(rec, {notch_biquad(freq_hz, rec.fs, q)});
}

RawRecording resample(const RawRecording& rec, double target_fs) {
    if (target_fs > rec.fs)
        throw ConfigError("resample: upsampling from " + std::to_string(rec.fs) + " to " +
                          std::to_string(target_fs) + " Hz is unsupported");
    if (rec.fs == target_fs) return rec;

    // anti-alias below the new Nyquist, then interpolate on the new grid
    const double cutoff = 0.45 * target_fs;
    auto aa = butter_lowpass(6, cutoff, rec.fs);
    const std::size_t c = rec.channels(), t = rec.samples();
    const std::size_t out_len =
        static_cast<std::size_t>(std::floor(static_cast<double>(t) * target_fs / rec.fs));
    RawRecording out;
    out.fs = target_fs;
    out.channel_names = rec.channel_names;
    out.data = Tensor::matrix(c, out_len);
    const double step = rec.fs / target_fs;
    for (std::size_t ch = 0; ch < c; ++ch) {
        std::vector<double> row(t);
        for (std::size_t i = 0; i < t; ++i) row[i] = rec.data.at(ch, i);
        std::vector<double> y = filtfilt(aa, row);
        for (std::size_t i = 0; i < out_len; ++i) {
            const double pos = static_cast<double>(i) * step;
            const std::size_t i0 = static_cast<std::size_t>(pos);
            const double frac = pos - static_cast<double>(i0);
            const double v0 = y[std::min(i0, t - 1)];
            const double v1 = y[std::min(i0 + 1, t - 1)];
            out.data.at(ch, i) = v0 + frac * (v1 - v0);
        }
    }
    return out;
}

std::vector<Segment> segment(const RawRecording& rec, double window_seconds, bool* too_short) {
    const std::size_t w = static_cast<std::size_t>(window_seconds * rec.fs);
    const std::size_t t = rec.samples();
    if (too_short) *too_short = false;
    if (t < w) {
        if (too_short) *too_short = true;
        return {};
    }
    const std::size_t count = t / w;
    const std::size_t offset = t - count * w;  // head remainder discarded
    std::vector<double> taper = hanning_window(w);
    std::vector<Segment> segs;
    segs.reserve(count);
    const std::size_t c = rec.channels();
    for (std::size_t k = 0; k < count; ++k) {
        Segment s;
        s.start = offset + k * w;
        s.end = s.start + w;
        s.tapered = Tensor::matrix(c, w);
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t i = 0; i < w; ++i)
                s.tapered.at(ch, i) = rec.data.at(ch, s.start + i) * taper[i];
        segs.push_back(std::move(s));
    }
    return segs;
}

Tensor de_features(const Tensor& segment_data, double fs, const std::vector<Band>& bands,
                   double sub_seconds, double var_floor) {
    const std::size_t c = segment_data.rows();
    const std::size_t w = segment_data.cols();
    const std::size_t sub = static_cast<std::size_t>(sub_seconds * fs);
    if (sub == 0 || sub > w) throw ConfigError("de_features: bad STFT sub-window length");
    const std::size_t hop = sub / 2;  // 50% overlap
    const std::size_t n_sub = (w - sub) / hop + 1;
    std::vector<double> win = hanning_window(sub);
    double win_power = 0.0;
    for (double v : win) win_power += v * v;

    Tensor de = Tensor::matrix(bands.size(), c);
    std::vector<double> buf(sub);
    for (std::size_t ch = 0; ch < c; ++ch) {
        // average one-sided power spectrum over the sub-windows
        std::vector<double> power(sub / 2 + 1, 0.0);
        for (std::size_t s = 0; s < n_sub; ++s) {
            const std::size_t start = s * hop;
            // demean the sub-window so DC cannot leak into the low bands
            double mean = 0.0;
            for (std::size_t i = 0; i < sub; ++i) mean += segment_data.at(ch, start + i);
            mean /= static_cast<double>(sub);
            for (std::size_t i = 0; i < sub; ++i)
                buf[i] = (segment_data.at(ch, start + i) - mean) * win[i];
            auto spec = rfft(buf);
            for (std::size_t k = 0; k < spec.size(); ++k) power[k] += std::norm(spec[k]);
        }
        for (double& p : power) p /= static_cast<double>(n_sub);

        const double bin_hz = fs / static_cast<double>(sub);
        for (std::size_t b = 0; b < bands.size(); ++b) {
            double var = 0.0;
            for (std::size_t k = 0; k < power.size(); ++k) {
                const double f = static_cast<double>(k) * bin_hz;
                if (f < bands[b].low_hz || f >= bands[b].high_hz) continue;
                const bool interior = (k > 0 && k < sub / 2);  // two-sided weight
                var += (interior ? 2.0 : 1.0) * power[k];
            }
            var /= static_cast<double>(sub) * win_power;
            if (var < var_floor) var = var_floor;
            de.at(b, ch) = 0.5 * std::log(kTwoPiE * var);
        }
    }
    return de;  // F x C
}

std::vector<GroupedSample> group_windows(const std::vector<Tensor>& per_window_de,
                                         const std::vector<Segment>& segments,
                                         const RawRecording& source, std::size_t group) {
    if (per_window_de.size() != segments.size())
        throw ShapeError("group_windows: DE count != segment count");
    const std::size_t n = per_window_de.size();
    std::vector<GroupedSample> out;
    if (n < group) return out;
    const std::size_t c = source.channels();
    const std::size_t f = per_window_de.empty() ? 0 : per_window_de[0].rows();
    for (std::size_t g = 0; g + group <= n; g += group) {
        GroupedSample s;
        s.de.values = Tensor({group, f, c});
        for (std::size_t k = 0; k < group; ++k) {
            const Tensor& de = per_window_de[g + k];  // F x C
            for (std::size_t b = 0; b < f; ++b)
                for (std::size_t ch = 0; ch < c; ++ch) s.de.at(k, b, ch) = de.at(b, ch);
        }
        s.start = segments[g].start;
        s.end = segments[g + group - 1].end;
        const std::size_t span = s.end - s.start;
        s.raw_span = Tensor::matrix(c, span);
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t i = 0; i < span; ++i)
                s.raw_span.at(ch, i) = source.data.at(ch, s.start + i);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<GroupedSample> preprocess_trial(const RawRecording& raw,
                                            const std::vector<Band>& bands,
                                            double target_fs) {
    FilterSpec bp;
    RawRecording rec = bandpass(raw, bp);
    rec = notch(rec, 50.0);
    rec = resample(rec, target_fs);
    bool too_short = false;
    auto segs = segment(rec, 4.0, &too_short);
    std::vector<Tensor> de;
    de.reserve(segs.size());
    for (const auto& s : segs) de.push_back(de_features(s.tapered, rec.fs, bands));
    return group_windows(de, segs, rec, 4);
}

}  // namespace mr
