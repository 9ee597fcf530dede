#pragma once

#include "moodreader/nn.hpp"

namespace mr {

/// Layer norm -> flatten -> linear map into the unified feature space.
struct UnifiedProjection {
    LayerNorm ln;
    Linear proj;
    std::size_t in_rows = 0, in_cols = 0;

    UnifiedProjection() = default;
    UnifiedProjection(ParamStore& ps, const std::string& prefix, std::size_t rows,
                      std::size_t cols, std::size_t d_unified, RandomStream& rng);
    Var operator()(const Var& stream) const;  // -> 1 x D_unified
};

/// Score-filtering fusion of a feature pair: per-dimension softmax over the
/// two scores yields convex weights, output = c_a * F_a + c_b * F_b.
struct PairFuse {
    Linear score_a;  // D x D, no bias (Score = F W)
    Linear score_b;
    Tensor last_weights;  // 2 x D, rows are (c_a, c_b) of the latest forward

    PairFuse() = default;
    PairFuse(ParamStore& ps, const std::string& prefix, std::size_t d_unified,
             RandomStream& rng);
    Var operator()(const Var& fa, const Var& fb);
};

/// Layer-normalize both fused vectors, stack as a 2-token sequence, apply
/// self-attention, flatten to M in R^{2*D_unified}.
struct FinalFuse {
    LayerNorm ln_a, ln_b;
    MultiHeadAttention mha;

    FinalFuse() = default;
    FinalFuse(ParamStore& ps, const std::string& prefix, std::size_t d_unified,
              std::size_t heads, RandomStream& rng);
    Var operator()(const Var& f_st, const Var& f_ee);
};

/// batch_norm -> linear -> tanh -> linear -> tanh -> linear -> softmax.
struct Classifier {
    BatchNorm bn;
    Linear l1, l2, l3;

    Classifier() = default;
    Classifier(ParamStore& ps, const std::string& prefix, std::size_t d_in,
               std::size_t d_hidden, std::size_t classes, RandomStream& rng);
    Var operator()(const Var& m_batch, bool training);  // -> B x C_cls probabilities
};

}  // namespace mr
