#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "moodreader/autodiff.hpp"

namespace mr {

/// Named trainable tensor. Registration enforces unique names per store.
struct Parameter {
    std::string name;
    Var node;  // leaf with requires_grad = trainable
    bool trainable = true;
};

class ParamStore {
public:
    Var add(const std::string& name, Tensor init, bool trainable = true);
    Var get(const std::string& name) const;
    bool has(const std::string& name) const { return index_.count(name) != 0; }
    const std::vector<Parameter>& all() const { return params_; }
    std::vector<Parameter>& all() { return params_; }
    void zero_grads();
    std::size_t total_values() const;

private:
    std::vector<Parameter> params_;
    std::map<std::string, std::size_t> index_;
};

/// Scaled-uniform fan-in initialization.
Tensor init_uniform(std::vector<std::size_t> shape, std::size_t fan_in, RandomStream& rng);

/// Largest head count <= requested that divides width (at least 1). Widths
/// derived from data shapes (e.g. C*F) are not always divisible by the
/// configured head count.
std::size_t effective_heads(std::size_t width, std::size_t requested);

struct Linear {
    Var weight;  // d_in x d_out
    Var bias;    // 1 x d_out, may be null
    Linear() = default;
    Linear(ParamStore& ps, const std::string& prefix, std::size_t d_in, std::size_t d_out,
           RandomStream& rng, bool with_bias = true);
    Var operator()(const Var& x) const;
    std::size_t d_in() const { return weight->value.rows(); }
    std::size_t d_out() const { return weight->value.cols(); }
};

struct LayerNorm {
    Var gain;
    Var shift;
    double eps = 1e-5;
    LayerNorm() = default;
    LayerNorm(ParamStore& ps, const std::string& prefix, std::size_t width);
    Var operator()(const Var& x) const { return layer_norm_rows(x, gain, shift, eps); }
};

/// Batch normalization over the batch axis with running statistics.
struct BatchNorm {
    Var gain;
    Var shift;
    Tensor running_mean;  // 1 x d
    Tensor running_var;   // 1 x d
    double eps = 1e-5;
    double momentum = 0.1;
    BatchNorm() = default;
    BatchNorm(ParamStore& ps, const std::string& prefix, std::size_t width);
    Var operator()(const Var& x, bool training);
};

/// Multi-head scaled dot-product attention with full-width Q/K/V projections
/// split per head, concatenated and projected by the output weight.
/// Self-attention is the q_in == kv_in case.
struct MultiHeadAttention {
    std::size_t heads = 1;
    Linear wq, wk, wv, wo;
    /// Head-averaged attention matrix (L_q x L_k) from the latest forward.
    Tensor last_attention;
    bool record_attention = false;

    MultiHeadAttention() = default;
    MultiHeadAttention(ParamStore& ps, const std::string& prefix, std::size_t width,
                       std::size_t heads, RandomStream& rng);
    Var operator()(const Var& q_in, const Var& kv_in);
    Var operator()(const Var& x) { return (*this)(x, x); }
};

/// LN -> MHA -> dropout -> residual -> LN, the shared spatial/temporal
/// attention block; the sequence axis is whatever the rows of x index.
struct AttentionBlock {
    LayerNorm ln_in, ln_out;
    MultiHeadAttention mha;
    double dropout_rate = 0.1;

    AttentionBlock() = default;
    AttentionBlock(ParamStore& ps, const std::string& prefix, std::size_t width,
                   std::size_t heads, double dropout_rate, RandomStream& rng);
    Var operator()(const Var& x, RandomStream& rng, bool training);
};

/// L = -(1/B) sum_i sum_c onehot_ic log(max(probs_ic, floor)).
Var cross_entropy(const Var& probs, const Tensor& onehot, double log_floor = 1e-12);

Tensor one_hot(const std::vector<std::size_t>& labels, std::size_t classes);

/// Fixed sinusoidal positional encoding, one row per position.
Tensor sinusoidal_positions(const std::vector<std::size_t>& positions, std::size_t width);

/// Adaptive-moment optimizer with optional cosine decay of the learning rate.
class AdamOptimizer {
public:
    AdamOptimizer(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void set_cosine_decay(std::size_t total_steps) { total_steps_ = total_steps; }
    void step(ParamStore& params);
    std::size_t steps_taken() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
    std::size_t total_steps_ = 0;
    std::map<const Node*, std::pair<std::vector<double>, std::vector<double>>> state_;
};

}  // namespace mr
