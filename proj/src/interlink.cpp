#include "moodreader/interlink.hpp"

namespace mr {

Tensor to_spatial_rep(const DETensor& de) {
    const std::size_t n = de.windows(), f = de.bands(), c = de.channels();
    Tensor xs = Tensor::matrix(c, n * f);
    for (std::size_t ni = 0; ni < n; ++ni)
        for (std::size_t fi = 0; fi < f; ++fi)
            for (std::size_t ci = 0; ci < c; ++ci)
                xs.at(ci, ni * f + fi) = de.at(ni, fi, ci);
    return xs;
}

Tensor to_temporal_rep(const DETensor& de) {
    const std::size_t n = de.windows(), f = de.bands(), c = de.channels();
    Tensor xt = Tensor::matrix(n, c * f);
    for (std::size_t ni = 0; ni < n; ++ni)
        for (std::size_t fi = 0; fi < f; ++fi)
            for (std::size_t ci = 0; ci < c; ++ci)
                xt.at(ni, ci * f + fi) = de.at(ni, fi, ci);
    return xt;
}

DETensor from_spatial_rep(const Tensor& xs, std::size_t n, std::size_t f) {
    const std::size_t c = xs.rows();
    if (xs.cols() != n * f) throw ShapeError("from_spatial_rep: width != N*F");
    DETensor de;
    de.values = Tensor({n, f, c});
    for (std::size_t ni = 0; ni < n; ++ni)
        for (std::size_t fi = 0; fi < f; ++fi)
            for (std::size_t ci = 0; ci < c; ++ci)
                de.at(ni, fi, ci) = xs.at(ci, ni * f + fi);
    return de;
}

DETensor from_temporal_rep(const Tensor& xt, std::size_t c, std::size_t f) {
    const std::size_t n = xt.rows();
    if (xt.cols() != c * f) throw ShapeError("from_temporal_rep: width != C*F");
    DETensor de;
    de.values = Tensor({n, f, c});
    for (std::size_t ni = 0; ni < n; ++ni)
        for (std::size_t fi = 0; fi < f; ++fi)
            for (std::size_t ci = 0; ci < c; ++ci)
                de.at(ni, fi, ci) = xt.at(ni, ci * f + fi);
    return de;
}

InterlinkBlock::InterlinkBlock(ParamStore& ps, const std::string& prefix, std::size_t n,
                               std::size_t f, std::size_t c, bool spatial_primary,
                               std::size_t heads, double dropout_rate_, RandomStream& rng)
    : dropout_rate(dropout_rate_) {
    const std::size_t d_spatial = n * f;   // width of C-row representation
    const std::size_t d_temporal = c * f;  // width of N-row representation
    const std::size_t d_p = spatial_primary ? d_spatial : d_temporal;
    const std::size_t d_s = spatial_primary ? d_temporal : d_spatial;
    primary_rows = spatial_primary ? c : n;
    primary_width = d_p;
    primary_map = Linear(ps, prefix + ".primary", d_p, d_p, rng);
    sec_stage1 = Linear(ps, prefix + ".sec1", d_s, d_s, rng);
    sec_stage2 = Linear(ps, prefix + ".sec2", d_p, d_p, rng);
    mha = MultiHeadAttention(ps, prefix + ".mha", d_p, effective_heads(d_p, heads), rng);

    // realignment permutation between the two flattenings of N x F x C
    align_map.resize(primary_rows * d_p);
    if (spatial_primary) {
        // source N x (C*F) -> target C x (N*F)
        for (std::size_t ci = 0; ci < c; ++ci)
            for (std::size_t ni = 0; ni < n; ++ni)
                for (std::size_t fi = 0; fi < f; ++fi)
                    align_map[ci * (n * f) + ni * f + fi] = ni * (c * f) + ci * f + fi;
    } else {
        // source C x (N*F) -> target N x (C*F)
        for (std::size_t ni = 0; ni < n; ++ni)
            for (std::size_t ci = 0; ci < c; ++ci)
                for (std::size_t fi = 0; fi < f; ++fi)
                    align_map[ni * (c * f) + ci * f + fi] = ci * (n * f) + ni * f + fi;
    }
}

Var InterlinkBlock::operator()(const Var& primary, const Var& secondary, RandomStream& rng,
                               bool training) {
    if (primary->value.rows() != primary_rows || primary->value.cols() != primary_width)
        throw ConfigError("interlink: primary operand " + primary->value.shape_str() +
                          " does not match configured " + std::to_string(primary_rows) + "x" +
                          std::to_string(primary_width));
    Var p = primary_map(primary);
    Var s = tanh_op(sec_stage1(secondary));
    s = reindex(s, {primary_rows, primary_width}, align_map);
    s = sec_stage2(s);
    Var cat = concat_rows({p, s});
    Var attended = mha(cat, cat);
    attended = dropout(attended, dropout_rate, rng, training);
    return slice_rows(attended, 0, primary_rows);
}

StInterlink::StInterlink(const StInterlinkConfig& cfg, ParamStore& ps, RandomStream& rng)
    : cfg_(cfg) {
    const std::size_t d_s = cfg.windows * cfg.bands;
    const std::size_t d_t = cfg.channels * cfg.bands;
    for (std::size_t i = 0; i < cfg.depth; ++i) {
        spatial_blocks_.emplace_back(ps, "stil.spatial" + std::to_string(i), d_s,
                                     effective_heads(d_s, cfg.heads), cfg.dropout, rng);
        temporal_blocks_.emplace_back(ps, "stil.temporal" + std::to_string(i), d_t,
                                      effective_heads(d_t, cfg.heads), cfg.dropout, rng);
    }
    if (cfg.interlink) {
        spatial_interlink_ = InterlinkBlock(ps, "stil.ilink_s", cfg.windows, cfg.bands,
                                            cfg.channels, true, cfg.heads, cfg.dropout, rng);
        temporal_interlink_ = InterlinkBlock(ps, "stil.ilink_t", cfg.windows, cfg.bands,
                                             cfg.channels, false, cfg.heads, cfg.dropout, rng);
    }
}

StInterlink::Output StInterlink::forward(const DETensor& de, RandomStream& rng,
                                         bool training) {
    if (de.windows() != cfg_.windows || de.bands() != cfg_.bands ||
        de.channels() != cfg_.channels)
        throw ShapeError("st-interlink: DE tensor " + de.values.shape_str() +
                         " does not match configuration");
    Var xs = constant(to_spatial_rep(de));
    // positions only on the window axis; channels are a set
    Tensor xt_rep = to_temporal_rep(de);
    std::vector<std::size_t> window_positions(cfg_.windows);
    for (std::size_t i = 0; i < cfg_.windows; ++i) window_positions[i] = i;
    Var xt = add(constant(std::move(xt_rep)),
                 constant(sinusoidal_positions(window_positions, cfg_.channels * cfg_.bands)));

    for (auto& b : spatial_blocks_) xs = b(xs, rng, training);
    for (auto& b : temporal_blocks_) xt = b(xt, rng, training);

    Output out;
    if (cfg_.interlink) {
        out.f_st = spatial_interlink_(xs, xt, rng, training);
        out.f_ts = temporal_interlink_(xt, xs, rng, training);
    } else {
        out.f_st = xs;
        out.f_ts = xt;
    }
    return out;
}

const Tensor& StInterlink::last_spatial_attention() const {
    return spatial_blocks_.back().mha.last_attention;
}

void StInterlink::set_record_attention(bool on) {
    for (auto& b : spatial_blocks_) b.mha.record_attention = on;
}

EyeBranch::EyeBranch(std::size_t seq_len, std::size_t width, std::size_t depth,
                     std::size_t heads, double dropout, ParamStore& ps, RandomStream& rng)
    : seq_len_(seq_len), width_(width) {
    for (std::size_t i = 0; i < depth; ++i)
        blocks_.emplace_back(ps, "eye.block" + std::to_string(i), width,
                             effective_heads(width, heads), dropout, rng);
}

Var EyeBranch::forward(const Tensor& eye, RandomStream& rng, bool training) {
    if (eye.rows() == 0 || eye.numel() == 0) throw DataError("eye branch: empty sequence");
    if (eye.cols() != width_)
        throw ShapeError("eye branch: feature width " + std::to_string(eye.cols()) +
                         " != configured " + std::to_string(width_));
    std::vector<std::size_t> positions(eye.rows());
    for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
    Var x = add(constant(eye), constant(sinusoidal_positions(positions, width_)));
    for (auto& b : blocks_) x = b(x, rng, training);
    return x;
}

}  // namespace mr
