#include "moodreader/model.hpp"

namespace mr {

void ModelConfig::validate() const {
    if (fusion == FusionMode::MultiLevel && !use_encoder && !use_eye && !interlink)
        throw ConfigError("model: multi-level fusion without interlink/encoder/eye streams");
    if (use_encoder && encoder_dim == 0)
        throw ConfigError("model: encoder stream enabled but encoder_dim is 0");
    if (classes < 2) throw ConfigError("model: need at least 2 classes");
}

MoodReaderModel::MoodReaderModel(const ModelConfig& cfg, RandomStream& rng) : cfg_(cfg) {
    cfg_.validate();
    StInterlinkConfig sc;
    sc.windows = cfg.windows;
    sc.bands = cfg.bands;
    sc.channels = cfg.channels;
    sc.depth = cfg.st_depth;
    sc.heads = cfg.heads;
    sc.dropout = cfg.dropout;
    sc.interlink = cfg.interlink;
    st_ = std::make_unique<StInterlink>(sc, params_, rng);
    audit_.push_back("spatial_block");
    audit_.push_back("temporal_block");
    if (cfg.interlink) audit_.push_back("interlink");

    const std::size_t d = cfg.d_unified;
    const std::size_t nf = cfg.windows * cfg.bands;
    const std::size_t cf = cfg.channels * cfg.bands;
    proj_st_ = UnifiedProjection(params_, "fuse.proj_st", cfg.channels, nf, d, rng);
    proj_ts_ = UnifiedProjection(params_, "fuse.proj_ts", cfg.windows, cf, d, rng);

    std::size_t streams = 2;
    if (cfg.use_encoder) {
        audit_.push_back("encoder");
        proj_eeg_ = UnifiedProjection(params_, "fuse.proj_eeg", 1, cfg.encoder_dim, d, rng);
        ++streams;
    }
    if (cfg.use_eye) {
        audit_.push_back("eye_branch");
        eye_ = std::make_unique<EyeBranch>(cfg.eye_seq_len, cfg.eye_dim, 2, cfg.heads,
                                           cfg.dropout, params_, rng);
        proj_eye_ = UnifiedProjection(params_, "fuse.proj_eye", cfg.eye_seq_len, cfg.eye_dim,
                                      d, rng);
        ++streams;
    }

    if (cfg.fusion == FusionMode::MultiLevel) {
        audit_.push_back("multi_level_fusion");
        fuse_st_ = PairFuse(params_, "fuse.pair_st", d, rng);
        if (cfg.use_encoder && cfg.use_eye)
            fuse_ee_ = PairFuse(params_, "fuse.pair_ee", d, rng);
        final_fuse_ = FinalFuse(params_, "fuse.final", d, cfg.heads, rng);
    } else {
        audit_.push_back("concatenation_fusion");
        cf_proj_ = Linear(params_, "fuse.cf_proj", streams * d, 2 * d, rng);
    }
    classifier_ = Classifier(params_, "clf", 2 * d, d, cfg.classes, rng);
    audit_.push_back("classifier");
}

Var MoodReaderModel::fuse_streams(const std::vector<Var>& unified, bool have_eeg,
                                  bool have_eye) {
    if (cfg_.fusion == FusionMode::Concatenation) {
        return cf_proj_(concat_cols(unified));
    }
    Var f_st = fuse_st_(unified[0], unified[1]);
    last_fusion_weights_.push_back(fuse_st_.last_weights);
    Var f_ee;
    std::size_t idx = 2;
    if (have_eeg && have_eye) {
        f_ee = fuse_ee_(unified[idx], unified[idx + 1]);
        last_fusion_weights_.push_back(fuse_ee_.last_weights);
    } else if (have_eeg || have_eye) {
        f_ee = unified[idx];
    } else {
        // DE-only multi-level configuration: fuse the pair with itself
        f_ee = f_st;
    }
    return final_fuse_(f_st, f_ee);
}

Var MoodReaderModel::forward(const std::vector<ModelInput>& batch, RandomStream& rng,
                             bool training) {
    if (batch.empty()) throw DataError("model: empty batch");
    last_fusion_weights_.clear();
    std::vector<Var> fused_rows;
    fused_rows.reserve(batch.size());
    for (const auto& sample : batch) {
        auto st = st_->forward(sample.de, rng, training);
        std::vector<Var> unified;
        unified.push_back(proj_st_(st.f_st));
        unified.push_back(proj_ts_(st.f_ts));
        if (cfg_.use_encoder) {
            if (!sample.eeg_latent)
                throw DataError("model: encoder stream enabled but sample has no latent");
            Var latent = constant(*sample.eeg_latent);
            unified.push_back(proj_eeg_(mean_rows(latent)));
        }
        if (cfg_.use_eye) {
            if (!sample.eye)
                throw DataError("model: eye stream enabled but sample has no eye features");
            Var eye_out = eye_->forward(*sample.eye, rng, training);
            unified.push_back(proj_eye_(eye_out));
        }
        fused_rows.push_back(fuse_streams(unified, cfg_.use_encoder, cfg_.use_eye));
    }
    Var m = fused_rows.size() == 1 ? fused_rows[0] : concat_rows(fused_rows);
    return classifier_(m, training);
}

Tensor MoodReaderModel::channel_attention_profile(const std::vector<ModelInput>& samples,
                                                  RandomStream& rng) {
    set_record_attention(true);
    Tensor profile = Tensor::matrix(1, cfg_.channels);
    for (const auto& sample : samples) {
        (void)st_->forward(sample.de, rng, false);
        const Tensor& attn = st_->last_spatial_attention();  // C x C
        for (std::size_t q = 0; q < attn.rows(); ++q)
            for (std::size_t c = 0; c < attn.cols(); ++c) profile[c] += attn.at(q, c);
    }
    set_record_attention(false);
    double total = 0.0;
    for (std::size_t c = 0; c < profile.numel(); ++c) total += profile[c];
    if (total > 0.0)
        for (std::size_t c = 0; c < profile.numel(); ++c) profile[c] /= total;
    return profile;
}

std::map<std::string, Tensor> MoodReaderModel::extra_state() const {
    return {{"clf.bn.running_mean", classifier_.bn.running_mean},
            {"clf.bn.running_var", classifier_.bn.running_var}};
}

void MoodReaderModel::set_extra_state(const std::map<std::string, Tensor>& state) {
    auto mean = state.find("clf.bn.running_mean");
    auto var = state.find("clf.bn.running_var");
    if (mean != state.end()) classifier_.bn.running_mean = mean->second;
    if (var != state.end()) classifier_.bn.running_var = var->second;
}

}  // namespace mr

