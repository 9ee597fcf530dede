#pragma once

#include <optional>

#include "moodreader/fusion.hpp"
#include "moodreader/interlink.hpp"
#include "moodreader/mbsm.hpp"

namespace mr {

enum class FusionMode { MultiLevel, Concatenation };

struct ModelConfig {
    std::size_t windows = 4;
    std::size_t bands = 5;
    std::size_t channels = 62;
    std::size_t st_depth = 1;
    std::size_t heads = 4;
    double dropout = 0.1;
    bool interlink = true;
    bool use_encoder = false;
    bool use_eye = false;
    FusionMode fusion = FusionMode::MultiLevel;
    std::size_t d_unified = 32;
    std::size_t classes = 3;
    std::size_t eye_seq_len = 4;
    std::size_t eye_dim = 8;
    std::size_t encoder_dim = 0;  // d_model of the pretrained encoder when used

    void validate() const;
};

/// One classification sample after preprocessing.
struct ModelInput {
    DETensor de;
    std::optional<Tensor> eye;          // N_e x d_eye
    std::optional<Tensor> eeg_latent;   // L x d_model, frozen-encoder extraction
};

/// The end-to-end classifier: interlinked spatial-temporal attention over DE
/// features, optional pretrained-encoder and eye streams, multi-level (or
/// concatenation) fusion, and the final classifier.
class MoodReaderModel {
public:
    MoodReaderModel(const ModelConfig& cfg, RandomStream& rng);

    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    /// B x classes probabilities. Inputs must match the configured streams.
    Var forward(const std::vector<ModelInput>& batch, RandomStream& rng, bool training);

    /// Names of submodules instantiated at construction (the ablation audit).
    const std::vector<std::string>& construction_audit() const { return audit_; }

    /// Fusion weight pairs captured during the latest forward; each is 2 x D
    /// with columns summing to 1.
    const std::vector<Tensor>& last_fusion_weights() const { return last_fusion_weights_; }

    /// Per-channel attention received in the last spatial block, averaged
    /// over heads and batch samples; empty unless recording was enabled.
    void set_record_attention(bool on) { st_->set_record_attention(on); }
    Tensor channel_attention_profile(const std::vector<ModelInput>& samples,
                                     RandomStream& rng);

    /// Non-parameter state (batch-norm running statistics) for checkpoints.
    std::map<std::string, Tensor> extra_state() const;
    void set_extra_state(const std::map<std::string, Tensor>& state);

private:
    Var fuse_streams(const std::vector<Var>& unified, bool have_eeg, bool have_eye);

    ModelConfig cfg_;
    ParamStore params_;
    std::unique_ptr<StInterlink> st_;
    std::unique_ptr<EyeBranch> eye_;
    UnifiedProjection proj_st_, proj_ts_, proj_eeg_, proj_eye_;
    PairFuse fuse_st_, fuse_ee_;
    FinalFuse final_fuse_;
    Linear cf_proj_;  // concatenation-fusion projection
    Classifier classifier_;
    std::vector<std::string> audit_;
    std::vector<Tensor> last_fusion_weights_;
};

}  // namespace mr
