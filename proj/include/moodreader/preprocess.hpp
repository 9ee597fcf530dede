#pragma once

#include <string>
#include <vector>

#include "moodreader/dsp.hpp"
#include "moodreader/tensor.hpp"

namespace mr {

/// Multichannel EEG time series, channels x samples.
struct RawRecording {
    Tensor data;  // C x T
    double fs = 0.0;
    std::vector<std::string> channel_names;

    std::size_t channels() const { return data.rows(); }
    std::size_t samples() const { return data.cols(); }
};

struct FilterSpec {
    enum class Kind { Bandpass, Notch };
    Kind kind = Kind::Bandpass;
    double low_hz = 0.1;
    double high_hz = 70.0;
    double notch_hz = 50.0;
    std::size_t order = 4;
    double notch_q = 30.0;
};

/// One frequency band [low, high) in Hz.
struct Band {
    std::string name;
    double low_hz;
    double high_hz;
};

/// Standard five-band split used throughout.
std::vector<Band> default_bands();

/// Differential entropy features, N windows x F bands x C channels, in nats.
struct DETensor {
    Tensor values;  // shape {N, F, C}
    std::size_t windows() const { return values.shape()[0]; }
    std::size_t bands() const { return values.shape()[1]; }
    std::size_t channels() const { return values.shape()[2]; }
    double at(std::size_t n, std::size_t f, std::size_t c) const {
        return values[(n * bands() + f) * channels() + c];
    }
    double& at(std::size_t n, std::size_t f, std::size_t c) {
        return values[(n * bands() + f) * channels() + c];
    }
};

/// A Hanning-tapered window plus its source index range in the recording.
struct Segment {
    Tensor tapered;  // C x W
    std::size_t start = 0;
    std::size_t end = 0;  // exclusive
};

/// One training sample's DE group plus its aligned raw-EEG span.
struct GroupedSample {
    DETensor de;
    Tensor raw_span;  // C x (group * W), from the preprocessed recording
    std::size_t start = 0;
    std::size_t end = 0;
};

RawRecording bandpass(const RawRecording& rec, const FilterSpec& spec);
RawRecording notch(const RawRecording& rec, double freq_hz, double q = 30.0);
/// Anti-aliased downsampling to target_fs; upsampling is rejected.
RawRecording resample(const RawRecording& rec, double target_fs);

/// Non-overlapping windows tiled backward from the trial end; leading
/// remainder discarded; each window multiplied by a Hanning taper.
std::vector<Segment> segment(const RawRecording& rec, double window_seconds = 4.0,
                             bool* too_short = nullptr);

///// Gaussian-assumption DE per channel and band from the segment's STFT power:
/// DE_b = 0.5 ln(2 pi e sigma_b^2). Sub-windows of sub_seconds with 50%
/// overlap; sigma floored at var_floor.
Tensor de_features(const Tensor& segment_data, double fs, const std::vector<Band>& bands,
                   double sub_seconds = 1.0, double var_floor = 1e-12);

/// Groups consecutive runs of `group` windows into samples with the matching
/// raw span extracted from the recording; trailing remainder dropped.
std::vector<GroupedSample> group_windows(const std::vector<Tensor>& per_window_de,
                                         const std::vector<Segment>& segments,
                                         const RawRecording& source, std::size_t group = 4);

///// Full trial pipeline: bandpass -> notch -> resample(200) -> segment ->
/// DE -> grouping. Returns one GroupedSample per 4-window run.
std::vector<GroupedSample> preprocess_trial(const RawRecording& raw,
                                            const std::vector<Band>& bands,
                                            double target_fs = 200.0);

}  // namespace mr
