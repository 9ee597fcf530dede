#include "moodreader/nn.hpp"

#include <cmath>

namespace mr {

Var ParamStore::add(const std::string& name, Tensor init, bool trainable) {
    if (index_.count(name))
        throw ConfigError("ParamStore: duplicate parameter name '" + name + "'");
    Parameter p;
    p.name = name;
    p.trainable = trainable;
    p.node = leaf(std::move(init), trainable);
    index_[name] = params_.size();
    params_.push_back(p);
    return params_.back().node;
}

Var ParamStore::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("ParamStore: unknown parameter '" + name + "'");
    return params_[it->second].node;
}

void ParamStore::zero_grads() {
    for (auto& p : params_) zero_grad(p.node);
}

std::size_t ParamStore::total_values() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.node->value.numel();
    return n;
}

Tensor init_uniform(std::vector<std::size_t> shape, std::size_t fan_in, RandomStream& rng) {
    Tensor t(std::move(shape));
    const double a = 1.0 / std::sqrt(static_cast<double>(fan_in ? fan_in : 1));
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-a, a);
    return t;
}

std::size_t effective_heads(std::size_t width, std::size_t requested) {
    if (requested == 0) requested = 1;
    for (std::size_t h = std::min(width, requested); h > 1; --h)
        if (width % h == 0) return h;
    return 1;
}

Linear::Linear(ParamStore& ps, const std::string& prefix, std::size_t d_in, std::size_t d_out,
               RandomStream& rng, bool with_bias) {
    weight = ps.add(prefix + ".weight", init_uniform({d_in, d_out}, d_in, rng));
    if (with_bias) bias = ps.add(prefix + ".bias", Tensor::matrix(1, d_out));
}

Var Linear::operator()(const Var& x) const {
    const std::size_t din = weight->value.rows();
    if (x->value.ndim() < 1 || x->value.shape().back() != din)
        throw ShapeError("linear: input " + x->value.shape_str() + " vs weight " +
                         weight->value.shape_str());
    Var in = x;
    bool reshaped_in = x->value.ndim() != 2;
    std::vector<std::size_t> out_shape = x->value.shape();
    if (reshaped_in) {
        const std::size_t rows = x->value.numel() / din;
        in = reshape(x, {rows, din});
    }
    Var y = matmul(in, weight);
    if (bias) y = add_row(y, bias);
    if (reshaped_in) {
        out_shape.back() = weight->value.cols();
        y = reshape(y, out_shape);
    }
    return y;
}

LayerNorm::LayerNorm(ParamStore& ps, const std::string& prefix, std::size_t width) {
    if (width == 0) throw ShapeError("layer_norm: zero width");
    gain = ps.add(prefix + ".gain", Tensor::full({1, width}, 1.0));
    shift = ps.add(prefix + ".shift", Tensor::matrix(1, width));
}

BatchNorm::BatchNorm(ParamStore& ps, const std::string& prefix, std::size_t width) {
    gain = ps.add(prefix + ".gain", Tensor::full({1, width}, 1.0));
    shift = ps.add(prefix + ".shift", Tensor::matrix(1, width));
    running_mean = Tensor::matrix(1, width);
    running_var = Tensor::full({1, width}, 1.0);
}

Var BatchNorm::operator()(const Var& x, bool training) {
    if (training) {
        Tensor bm, bv;
        Var y = batch_norm_cols(x, gain, shift, eps, &bm, &bv);
        for (std::size_t j = 0; j < running_mean.numel(); ++j) {
            running_mean[j] = (1.0 - momentum) * running_mean[j] + momentum * bm[j];
            running_var[j] = (1.0 - momentum) * running_var[j] + momentum * bv[j];
        }
        return y;
    }
    // inference path: normalize with frozen running statistics
    const std::size_t b = x->value.rows(), n = x->value.cols();
    Tensor scale = Tensor::matrix(b, n), offset = Tensor::matrix(b, n);
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double is = 1.0 / std::sqrt(running_var[j] + eps);
            scale.at(i, j) = is;
            offset.at(i, j) = -running_mean[j] * is;
        }
    Var norm = add(mul(x, constant(scale)), constant(offset));
    // broadcast affine
    Tensor gb = Tensor::matrix(b, n), sb = Tensor::matrix(b, n);
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            gb.at(i, j) = gain->value[j];
            sb.at(i, j) = shift->value[j];
        }
    return add(mul(norm, constant(gb)), constant(sb));
}

MultiHeadAttention::MultiHeadAttention(ParamStore& ps, const std::string& prefix,
                                       std::size_t width, std::size_t heads_,
                                       RandomStream& rng)
    : heads(heads_) {
    if (heads == 0 || width % heads != 0)
        throw ConfigError("attention: width " + std::to_string(width) +
                          " not divisible by heads " + std::to_string(heads_));
    wq = Linear(ps, prefix + ".wq", width, width, rng);
    wk = Linear(ps, prefix + ".wk", width, width, rng);
    wv = Linear(ps, prefix + ".wv", width, width, rng);
    wo = Linear(ps, prefix + ".wo", width, width, rng);
}

Var MultiHeadAttention::operator()(const Var& q_in, const Var& kv_in) {
    const std::size_t d = wq.d_in();
    const std::size_t dk = d / heads;
    Var q = wq(q_in);
    Var k = wk(kv_in);
    Var v = wv(kv_in);
    std::vector<Var> head_outputs;
    Tensor attn_sum;
    for (std::size_t h = 0; h < heads; ++h) {
        Var qh = slice_cols(q, h * dk, (h + 1) * dk);
        Var kh = slice_cols(k, h * dk, (h + 1) * dk);
        Var vh = slice_cols(v, h * dk, (h + 1) * dk);
        Var scores = scalar_mul(matmul(qh, transpose(kh)), 1.0 / std::sqrt(double(dk)));
        Var attn = softmax_rows(scores);
        if (record_attention) {
            if (h == 0)
                attn_sum = attn->value;
            else
                for (std::size_t i = 0; i < attn_sum.numel(); ++i)
                    attn_sum[i] += attn->value[i];
        }
        head_outputs.push_back(matmul(attn, vh));
    }
    if (record_attention) {
        for (std::size_t i = 0; i < attn_sum.numel(); ++i) attn_sum[i] /= double(heads);
        last_attention = attn_sum;
    }
    Var cat = heads == 1 ? head_outputs[0] : concat_cols(head_outputs);
    return wo(cat);
}

AttentionBlock::AttentionBlock(ParamStore& ps, const std::string& prefix, std::size_t width,
                               std::size_t heads, double dropout_rate_, RandomStream& rng)
    : dropout_rate(dropout_rate_) {
    ln_in = LayerNorm(ps, prefix + ".ln_in", width);
    ln_out = LayerNorm(ps, prefix + ".ln_out", width);
    mha = MultiHeadAttention(ps, prefix + ".mha", width, heads, rng);
}

Var AttentionBlock::operator()(const Var& x, RandomStream& rng, bool training) {
    Var normed = ln_in(x);
    Var attended = mha(normed, normed);
    Var dropped = dropout(attended, dropout_rate, rng, training);
    return ln_out(add(dropped, normed));
}

Var cross_entropy(const Var& probs, const Tensor& onehot, double log_floor) {
    if (!probs->value.same_shape(onehot))
        throw ShapeError("cross_entropy: probs " + probs->value.shape_str() + " vs labels " +
                         onehot.shape_str());
    const std::size_t batch = probs->value.rows();
    Var logp = log_clamped(probs, log_floor);
    Var picked = mul(logp, constant(onehot));
    return scalar_mul(sum_all(picked), -1.0 / static_cast<double>(batch));
}

Tensor one_hot(const std::vector<std::size_t>& labels, std::size_t classes) {
    Tensor t = Tensor::matrix(labels.size(), classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= classes)
            throw DataError("label " + std::to_string(labels[i]) + " out of range for " +
                            std::to_string(classes) + " classes");
        t.at(i, labels[i]) = 1.0;
    }
    return t;
}

Tensor sinusoidal_positions(const std::vector<std::size_t>& positions, std::size_t width) {
    Tensor t = Tensor::matrix(positions.size(), width);
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const double pos = static_cast<double>(positions[i]);
        for (std::size_t j = 0; j < width; ++j) {
            const double exponent = static_cast<double>(2 * (j / 2)) / static_cast<double>(width);
            const double angle = pos / std::pow(10000.0, exponent);
            t.at(i, j) = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return t;
}

void AdamOptimizer::step(ParamStore& params) {
    ++t_;
    double lr = lr_;
    if (total_steps_ > 0) {
        const double frac = std::min(1.0, static_cast<double>(t_ - 1) / total_steps_);
        lr = lr_ * 0.5 * (1.0 + std::cos(3.14159265358979323846 * frac));
    }
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (auto& p : params.all()) {
        if (!p.trainable || p.node->grad.numel() == 0) continue;
        auto& [m, v] = state_[p.node.get()];
        if (m.empty()) {
            m.assign(p.node->value.numel(), 0.0);
            v.assign(p.node->value.numel(), 0.0);
        }
        for (std::size_t i = 0; i < m.size(); ++i) {
            const double g = p.node->grad[i];
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p.node->value[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

}  // namespace mr
