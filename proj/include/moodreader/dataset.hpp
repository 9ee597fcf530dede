#pragma once

#include <optional>

#include "moodreader/preprocess.hpp"
#include "moodreader/rng.hpp"

namespace mr {

struct DatasetSample {
    DETensor de;
    Tensor raw_span;  // C x span samples, preprocessed
    std::optional<Tensor> eye;
    std::optional<Tensor> eeg_latent;  // filled when the encoder stream is active
    std::size_t label = 0;
    std::size_t subject = 0;
    std::size_t trial = 0;
};

struct Dataset {
    std::vector<DatasetSample> samples;
    std::size_t classes = 3;
    std::size_t channels = 0;
    std::size_t eye_seq_len = 0;  // 0 when no eye modality
    std::size_t eye_dim = 0;
    std::vector<std::string> channel_names;
    std::vector<std::string> warnings;

    std::size_t size() const { return samples.size(); }
};

/// Loads a manifest (JSON) referencing per-trial channels-x-samples matrix
/// files and runs the full preprocessing pipeline on each trial.
Dataset load_dataset(const std::string& manifest_path);

struct SynthSpec {
    std::size_t classes = 3;
    std::size_t subjects = 5;
    std::size_t trials_per_subject = 10;
    double separability = 1.0;
    std::size_t channels = 62;
    double fs = 200.0;
    double seconds = 16.0;  // one grouped sample per trial
    std::size_t eye_seq_len = 4;
    std::size_t eye_dim = 8;
    std::size_t signal_channels = 8;  // class signal confined to channels [0, this)
};

/// Band-limited synthetic corpus: class-dependent per-band power on the
/// designated channels plus matching low-dimensional eye sequences. Higher
/// separability widens the inter-class DE margins; 0 makes classes identical.
Dataset synth_generate(const SynthSpec& spec, std::uint64_t seed);

/// Raw synthetic recording for one trial (used by corpus export and tests).
RawRecording synth_recording(const SynthSpec& spec, std::size_t label, RandomStream& rng);

/// Writes a synthetic corpus to disk as CSV matrices plus a manifest, in the
/// same layout load_dataset expects.
void write_synth_corpus(const SynthSpec& spec, std::uint64_t seed, const std::string& dir);

/// Seeded random partition; sizes round(ratio*n) / remainder. With
/// by_subject, whole subjects go to one side.
std::pair<Dataset, Dataset> split(const Dataset& ds, double ratio, std::uint64_t seed,
                                  bool by_subject = true);

// CSV matrix helpers (rows x cols of doubles).
Tensor read_csv_matrix(const std::string& path);
void write_csv_matrix(const std::string& path, const Tensor& m);

}  // namespace mr
