#include "moodreader/mbsm.hpp"

#include <cmath>

namespace mr {

TokenSequence tokenize(const Tensor& span, std::size_t token_size) {
    const std::size_t c = span.rows();
    const std::size_t t = span.cols();
    if (token_size == 0 || token_size > t)
        throw ConfigError("tokenize: token_size " + std::to_string(token_size) +
                          " exceeds span length " + std::to_string(t));
    const std::size_t l = t / token_size;  // tail beyond the tiling is trimmed
    TokenSequence seq;
    seq.token_size = token_size;
    seq.channels = c;
    seq.tokens = Tensor::matrix(l, c * token_size);
    seq.positions.resize(l);
    for (std::size_t i = 0; i < l; ++i) {
        seq.positions[i] = i;
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t s = 0; s < token_size; ++s)
                seq.tokens.at(i, ch * token_size + s) = span.at(ch, i * token_size + s);
    }
    return seq;
}

MaskPattern sample_mask(std::size_t length, double ratio, RandomStream& rng) {
    if (ratio < 0.0 || ratio >= 1.0) throw ConfigError("sample_mask: ratio outside [0,1)");
    const std::size_t k = static_cast<std::size_t>(std::llround(ratio * double(length)));
    MaskPattern m;
    m.ratio = ratio;
    m.masked.assign(length, false);
    // partial Fisher-Yates: first k entries of a shuffled index list
    std::vector<std::size_t> idx(length);
    for (std::size_t i = 0; i < length; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + rng.below(length - i);
        std::swap(idx[i], idx[j]);
        m.masked[idx[i]] = true;
    }
    return m;
}

MbsmModel::MbsmModel(const MbsmConfig& cfg, std::size_t channels, RandomStream& rng)
    : cfg_(cfg), channels_(channels) {
    cfg_.validate();
    const std::size_t token_dim = cfg_.token_size * channels_;
    embed_ = Linear(params_, "mbsm.embed", token_dim, cfg_.d_model, rng);
    for (std::size_t i = 0; i < cfg_.encoder_depth; ++i)
        encoder_.emplace_back(params_, "mbsm.enc" + std::to_string(i), cfg_.d_model,
                              cfg_.heads, cfg_.dropout, rng);
    for (std::size_t i = 0; i < cfg_.decoder_depth; ++i)
        decoder_.emplace_back(params_, "mbsm.dec" + std::to_string(i), cfg_.d_model,
                              cfg_.heads, cfg_.dropout, rng);
    mask_token_ = params_.add("mbsm.mask_token",
                              init_uniform({1, cfg_.d_model}, cfg_.d_model, rng));
    output_ = Linear(params_, "mbsm.output", cfg_.d_model, token_dim, rng);
}

Var MbsmModel::encode(const TokenSequence& seq, const MaskPattern& mask, RandomStream& rng,
                      bool training) {
    const std::size_t l = seq.length();
    if (mask.masked.size() != l) throw ShapeError("encode: mask length != sequence length");
    std::vector<std::size_t> visible;
    for (std::size_t i = 0; i < l; ++i)
        if (!mask.masked[i]) visible.push_back(i);
    if (visible.empty()) throw DataError("encode: all tokens masked");

    Tensor vis_tokens = Tensor::matrix(visible.size(), seq.tokens.cols());
    std::vector<std::size_t> vis_positions;
    for (std::size_t r = 0; r < visible.size(); ++r) {
        vis_positions.push_back(seq.positions[visible[r]]);
        for (std::size_t j = 0; j < seq.tokens.cols(); ++j)
            vis_tokens.at(r, j) = seq.tokens.at(visible[r], j);
    }
    Var x = embed_(constant(std::move(vis_tokens)));
    x = add(x, constant(sinusoidal_positions(vis_positions, cfg_.d_model)));
    for (auto& block : encoder_) x = block(x, rng, training);
    return x;
}

Var MbsmModel::reconstruct(const Var& latent, const MaskPattern& mask,
                           const std::vector<std::size_t>& positions, RandomStream& rng,
                           bool training) {
    const std::size_t l = mask.masked.size();
    std::vector<Var> rows;
    rows.reserve(l);
    std::size_t vis = 0;
    for (std::size_t i = 0; i < l; ++i) {
        if (mask.masked[i])
            rows.push_back(mask_token_);
        else {
            rows.push_back(slice_rows(latent, vis, vis + 1));
            ++vis;
        }
    }
    if (vis != latent->value.rows())
        throw ShapeError("reconstruct: latent rows do not match visible count");
    Var x = concat_rows(rows);
    x = add(x, constant(sinusoidal_positions(positions, cfg_.d_model)));
    for (auto& block : decoder_) x = block(x, rng, training);
    return output_(x);
}

double MbsmModel::pretrain_step(const std::vector<Tensor>& spans, RandomStream& rng,
                                AdamOptimizer& opt) {
    if (spans.empty()) throw DataError("pretrain_step: empty batch");
    std::vector<Var> losses;
    std::size_t masked_total = 0;
    for (const Tensor& span : spans) {
        TokenSequence seq = tokenize(span, cfg_.token_size);
        MaskPattern mask = sample_mask(seq.length(), cfg_.mask_ratio, rng);
        const std::size_t n_masked = mask.count();
        if (n_masked == 0) continue;  // vacuous draw, nothing to reconstruct
        masked_total += n_masked;

        Tensor target = seq.tokens;
        if (cfg_.normalize_targets) {
            for (std::size_t i = 0; i < target.rows(); ++i) {
                double mean = 0.0;
                for (std::size_t j = 0; j < target.cols(); ++j) mean += target.at(i, j);
                mean /= double(target.cols());
                double var = 0.0;
                for (std::size_t j = 0; j < target.cols(); ++j) {
                    const double d = target.at(i, j) - mean;
                    var += d * d;
                }
                var /= double(target.cols());
                const double is = 1.0 / std::sqrt(var + 1e-8);
                for (std::size_t j = 0; j < target.cols(); ++j)
                    target.at(i, j) = (target.at(i, j) - mean) * is;
            }
        }

        Var latent = encode(seq, mask, rng, true);
        Var recon = reconstruct(latent, mask, seq.positions, rng, true);

        // squared error restricted to masked rows
        Tensor row_mask = Tensor::matrix(seq.length(), seq.tokens.cols());
        for (std::size_t i = 0; i < seq.length(); ++i)
            if (mask.masked[i])
                for (std::size_t j = 0; j < seq.tokens.cols(); ++j) row_mask.at(i, j) = 1.0;
        Var diff = mul(sub(recon, constant(target)), constant(row_mask));
        Var sq = mul(diff, diff);
        losses.push_back(scalar_mul(sum_all(sq),
                                    1.0 / double(n_masked * seq.tokens.cols())));
    }
    if (losses.empty()) return 0.0;

    Var total = losses[0];
    for (std::size_t i = 1; i < losses.size(); ++i) total = add(total, losses[i]);
    total = scalar_mul(total, 1.0 / double(losses.size()));
    const double loss = total->value[0];
    if (!std::isfinite(loss)) throw DataError("pretrain_step: non-finite loss");
    params_.zero_grads();
    backward(total);
    opt.step(params_);
    return loss;
}

Tensor MbsmModel::latent_extract(const Tensor& span) {
    TokenSequence seq = tokenize(span, cfg_.token_size);
    MaskPattern empty;
    empty.masked.assign(seq.length(), false);
    RandomStream unused(0);
    Var latent = encode(seq, empty, unused, false);
    return latent->value;
}

}  // namespace mr
