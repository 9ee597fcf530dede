#pragma once

#include "moodreader/config.hpp"
#include "moodreader/metrics.hpp"
#include "moodreader/model.hpp"

namespace mr {

/// Fills in the data-dependent model dimensions (windows, bands, channels,
/// eye shape) from a loaded dataset and applies any named preset.
ModelConfig derive_model_config(const ExperimentConfig& cfg, const Dataset& ds);

/// Loads the dataset the config names (synthetic or manifest-backed).
Dataset load_configured_dataset(const ExperimentConfig& cfg);

std::vector<ModelInput> to_inputs(const Dataset& ds);
std::vector<std::size_t> dataset_labels(const Dataset& ds);

/// Frozen-encoder extraction for every sample's raw span.
void attach_latents(Dataset& ds, MbsmModel& encoder);

struct TrainOptions {
    std::size_t steps = 500;
    std::size_t batch = 16;
    double lr = 1e-3;
    std::uint64_t seed = 42;
    bool snapshots = false;  // attention profiles at init / 25% / 50% / final
    std::size_t eval_every = 0;  // 0 -> steps / 5
};

struct TrainOutput {
    Metrics train_metrics;
    Metrics test_metrics;
    std::vector<double> loss_curve;
    std::map<std::string, Tensor> best_checkpoint;  // params + extra state
    std::vector<std::pair<std::string, Tensor>> attention_snapshots;
    bool diverged = false;
    double worst_fusion_weight_error = 0.0;
};

/// Parameters plus extra state ("extra."-prefixed) for checkpoint containers.
std::map<std::string, Tensor> model_state(const MoodReaderModel& model);
void load_model_state(MoodReaderModel& model, const std::map<std::string, Tensor>& state);

/// Mini-batch training loop; keeps the checkpoint with the best test
/// accuracy and restores it into the model before returning. Fusion weight
/// pair sums are asserted online at 1e-6.
TrainOutput train_model(MoodReaderModel& model, const Dataset& train, const Dataset& test,
                        const TrainOptions& opts);

std::vector<std::size_t> predict(MoodReaderModel& model, const Dataset& ds,
                                 std::size_t batch = 32);
Metrics evaluate_model(MoodReaderModel& model, const Dataset& ds, std::size_t batch = 32);

/// Builds (and if needed pretrains) the encoder demanded by the config, then
/// attaches latents to both splits. Returns nullptr when the arm is off.
std::unique_ptr<MbsmModel> prepare_encoder(const ExperimentConfig& cfg, Dataset& train,
                                           Dataset& test);

struct AblationRow {
    std::string preset;
    Metrics test_metrics;
    std::vector<std::string> audit;
};

/// Trains/evaluates each named preset with a shared seed and split.
std::vector<AblationRow> run_ablation(const ExperimentConfig& cfg,
                                      const std::vector<std::string>& arms);

}  // namespace mr
