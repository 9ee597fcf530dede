#include "moodreader/fusion.hpp"

namespace mr {

UnifiedProjection::UnifiedProjection(ParamStore& ps, const std::string& prefix,
                                     std::size_t rows, std::size_t cols,
                                     std::size_t d_unified, RandomStream& rng)
    : in_rows(rows), in_cols(cols) {
    ln = LayerNorm(ps, prefix + ".ln", cols);
    proj = Linear(ps, prefix + ".proj", rows * cols, d_unified, rng);
}

Var UnifiedProjection::operator()(const Var& stream) const {
    if (stream->value.rows() != in_rows || stream->value.cols() != in_cols)
        throw ShapeError("project_unified: stream " + stream->value.shape_str() +
                         " vs configured " + std::to_string(in_rows) + "x" +
                         std::to_string(in_cols));
    Var normed = ln(stream);
    Var flat = reshape(normed, {1, in_rows * in_cols});
    return proj(flat);
}

PairFuse::PairFuse(ParamStore& ps, const std::string& prefix, std::size_t d_unified,
                   RandomStream& rng) {
    score_a = Linear(ps, prefix + ".score_a", d_unified, d_unified, rng, /*with_bias=*/false);
    score_b = Linear(ps, prefix + ".score_b", d_unified, d_unified, rng, /*with_bias=*/false);
}

Var PairFuse::operator()(const Var& fa, const Var& fb) {
    if (!fa->value.same_shape(fb->value))
        throw ShapeError("pair_fuse: operands " + fa->value.shape_str() + " vs " +
                         fb->value.shape_str());
    Var sa = score_a(fa);  // 1 x D
    Var sb = score_b(fb);
    // per-dimension competition between the two streams
    Var stacked = concat_rows({sa, sb});                     // 2 x D
    Var weights = transpose(softmax_rows(transpose(stacked)));  // 2 x D, columns sum to 1
    last_weights = weights->value;
    Var ca = slice_rows(weights, 0, 1);
    Var cb = slice_rows(weights, 1, 2);
    return add(mul(ca, fa), mul(cb, fb));
}

FinalFuse::FinalFuse(ParamStore& ps, const std::string& prefix, std::size_t d_unified,
                     std::size_t heads, RandomStream& rng) {
    ln_a = LayerNorm(ps, prefix + ".ln_a", d_unified);
    ln_b = LayerNorm(ps, prefix + ".ln_b", d_unified);
    mha = MultiHeadAttention(ps, prefix + ".mha", d_unified,
                             effective_heads(d_unified, heads), rng);
}

Var FinalFuse::operator()(const Var& f_st, const Var& f_ee) {
    Var stacked = concat_rows({ln_a(f_st), ln_b(f_ee)});  // 2 x D
    Var attended = mha(stacked, stacked);
    return reshape(attended, {1, 2 * attended->value.cols()});
}

Classifier::Classifier(ParamStore& ps, const std::string& prefix, std::size_t d_in,
                       std::size_t d_hidden, std::size_t classes, RandomStream& rng) {
    bn = BatchNorm(ps, prefix + ".bn", d_in);
    l1 = Linear(ps, prefix + ".l1", d_in, d_hidden, rng);
    l2 = Linear(ps, prefix + ".l2", d_hidden, std::max<std::size_t>(1, d_hidden / 2), rng);
    l3 = Linear(ps, prefix + ".l3", std::max<std::size_t>(1, d_hidden / 2), classes, rng);
}

Var Classifier::operator()(const Var& m_batch, bool training) {
    Var x = bn(m_batch, training);
    x = tanh_op(l1(x));
    x = tanh_op(l2(x));
    return softmax_rows(l3(x));
}

}  // namespace mr
