#pragma once

#include "moodreader/dataset.hpp"
#include "moodreader/mbsm.hpp"
#include "moodreader/model.hpp"

namespace mr {

/// Named ablation arms: each preset pins the module flags it declares.
extern const std::vector<std::string> kAblationPresets;

/// Applies a preset name (e.g. "STIB+Eye+MLF") onto a model configuration.
void apply_preset(ModelConfig& cfg, const std::string& preset);

struct ExperimentConfig {
    // dataset
    std::string dataset_type = "synthetic";  // "synthetic" | "manifest"
    std::string manifest_path;
    SynthSpec synth;

    // model
    ModelConfig model;
    std::string preset;  // optional; overrides the model flags

    // pretraining / encoder
    MbsmConfig mbsm;
    std::string encoder_checkpoint;
    std::size_t pretrain_steps = 200;
    std::size_t pretrain_batch = 8;

    // training
    std::size_t steps = 500;
    std::size_t batch = 16;
    double lr = 1e-3;
    double split_ratio = 0.8;
    bool split_by_subject = true;
    std::size_t repeats = 1;

    std::uint64_t seed = 42;
    std::string out_dir = "out";

    static ExperimentConfig from_file(const std::string& path);
    static ExperimentConfig from_json_text(const std::string& text);
};

}  // namespace mr
