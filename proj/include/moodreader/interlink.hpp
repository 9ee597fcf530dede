#pragma once

#include "moodreader/nn.hpp"
#include "moodreader/preprocess.hpp"

namespace mr {

/// X_hat (N x F x C) -> spatial rows-by-channel C x (N*F).
Tensor to_spatial_rep(const DETensor& de);
/// X_hat (N x F x C) -> temporal rows-by-window N x (C*F).
Tensor to_temporal_rep(const DETensor& de);
/// Inverse of to_spatial_rep / to_temporal_rep (round-trip exactness).
DETensor from_spatial_rep(const Tensor& xs, std::size_t n, std::size_t f);
DETensor from_temporal_rep(const Tensor& xt, std::size_t c, std::size_t f);

/// Cross-feed block: the primary operand gets a single linear map, the
/// secondary a two-stage transformation (linear, tanh, axis realignment,
/// linear) into the primary's row space; the two parts are concatenated and
/// self-attended, and only the primary rows are kept.
struct InterlinkBlock {
    Linear primary_map;  // d_p -> d_p
    Linear sec_stage1;   // d_s -> d_s
    Linear sec_stage2;   // d_p -> d_p, after realignment
    MultiHeadAttention mha;
    std::vector<std::size_t> align_map;  // flat permutation S x d_s -> P x d_p
    std::size_t primary_rows = 0;
    std::size_t primary_width = 0;
    double dropout_rate = 0.1;

    InterlinkBlock() = default;
    /// spatial_primary: primary = C x (N*F), secondary = N x (C*F); the
    /// temporal variant is the mirror image.
    InterlinkBlock(ParamStore& ps, const std::string& prefix, std::size_t n, std::size_t f,
                   std::size_t c, bool spatial_primary, std::size_t heads,
                   double dropout_rate, RandomStream& rng);

    Var operator()(const Var& primary, const Var& secondary, RandomStream& rng,
                   bool training);
};

struct StInterlinkConfig {
    std::size_t windows = 4;   // N
    std::size_t bands = 5;     // F
    std::size_t channels = 62; // C
    std::size_t depth = 1;     // stacked spatial/temporal block pairs
    std::size_t heads = 4;
    double dropout = 0.1;
    bool interlink = true;     // off = plain spatial-temporal blocks (STB arm)
};

/// Parallel spatial/temporal attention stacks plus the interlink pair.
class StInterlink {
public:
    StInterlink(const StInterlinkConfig& cfg, ParamStore& ps, RandomStream& rng);

    struct Output {
        Var f_st;  // C' x (N*F) spatial features interlinked with time
        Var f_ts;  // N' x (C*F) temporal features interlinked with space
    };
    Output forward(const DETensor& de, RandomStream& rng, bool training);

    const StInterlinkConfig& config() const { return cfg_; }
    /// Head-averaged attention matrix of the last spatial block (C x C).
    const Tensor& last_spatial_attention() const;
    void set_record_attention(bool on);

private:
    StInterlinkConfig cfg_;
    std::vector<AttentionBlock> spatial_blocks_;
    std::vector<AttentionBlock> temporal_blocks_;
    InterlinkBlock spatial_interlink_;
    InterlinkBlock temporal_interlink_;
};

/// Stack of temporal attention blocks over an eye-movement feature sequence.
class EyeBranch {
public:
    EyeBranch(std::size_t seq_len, std::size_t width, std::size_t depth, std::size_t heads,
              double dropout, ParamStore& ps, RandomStream& rng);
    Var forward(const Tensor& eye, RandomStream& rng, bool training);
    std::size_t width() const { return width_; }
    std::size_t seq_len() const { return seq_len_; }

private:
    std::size_t seq_len_, width_;
    std::vector<AttentionBlock> blocks_;
};

}  // namespace mr
