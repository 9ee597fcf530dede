#pragma once

#include <optional>

#include "moodreader/nn.hpp"

namespace mr {

/// Fixed-size temporal EEG tokens plus their position indices.
struct TokenSequence {
    Tensor tokens;  // L x token_dim (token_dim = token_size * C, flattened slice)
    std::vector<std::size_t> positions;
    std::size_t token_size = 0;
    std::size_t channels = 0;

    std::size_t length() const { return tokens.rows(); }
};

struct MaskPattern {
    std::vector<bool> masked;  // size L
    double ratio = 0.0;

    std::size_t count() const {
        std::size_t n = 0;
        for (bool b : masked) n += b;
        return n;
    }
};

struct MbsmConfig {
    std::size_t token_size = 40;  // 0.2 s at 200 Hz
    std::size_t d_model = 128;
    std::size_t encoder_depth = 6;
    std::size_t decoder_depth = 2;
    std::size_t heads = 4;
    double dropout = 0.1;
    double mask_ratio = 0.75;
    double lr = 1e-3;
    bool normalize_targets = true;

    void validate() const {
        if (decoder_depth < 1) throw ConfigError("mbsm: decoder depth must be >= 1");
        if (encoder_depth <= decoder_depth)
            throw ConfigError("mbsm: encoder must be deeper than decoder (asymmetry)");
        if (mask_ratio < 0.0 || mask_ratio >= 1.0)
            throw ConfigError("mbsm: mask ratio must be in [0,1)");
        if (d_model % heads != 0) throw ConfigError("mbsm: d_model not divisible by heads");
    }
};

TokenSequence tokenize(const Tensor& span, std::size_t token_size);
MaskPattern sample_mask(std::size_t length, double ratio, RandomStream& rng);

/// Asymmetric masked autoencoder over raw EEG token sequences.
class MbsmModel {
public:
    MbsmModel(const MbsmConfig& cfg, std::size_t channels, RandomStream& rng);

    const MbsmConfig& config() const { return cfg_; }
    std::size_t channels() const { return channels_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    /// Visible tokens only enter the encoder; one latent per visible token.
    Var encode(const TokenSequence& seq, const MaskPattern& mask, RandomStream& rng,
               bool training);

    /// Visible latents interleaved with the learned mask token, then the
    /// shallow decoder reconstructs every token.
    Var reconstruct(const Var& latent, const MaskPattern& mask,
                    const std::vector<std::size_t>& positions, RandomStream& rng,
                    bool training);

    /// Masked-position MSE plus one optimizer update. Returns the loss; with
    /// an empty mask the loss is 0 and no update happens.
    double pretrain_step(const std::vector<Tensor>& spans, RandomStream& rng,
                         AdamOptimizer& opt);

    /// Frozen-encoder extraction: encode with an empty mask, inference mode.
    Tensor latent_extract(const Tensor& span);

    std::size_t d_model() const { return cfg_.d_model; }

private:
    MbsmConfig cfg_;
    std::size_t channels_;
    ParamStore params_;
    Linear embed_;
    std::vector<AttentionBlock> encoder_;
    std::vector<AttentionBlock> decoder_;
    Var mask_token_;  // 1 x d_model
    Linear output_;
};

}  // namespace mr
