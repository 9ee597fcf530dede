#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "moodreader/rng.hpp"
#include "moodreader/tensor.hpp"

namespace mr {

/// One node of the reverse-mode tape. Built implicitly as ops compose;
/// backward() walks the graph in reverse topological order.
struct Node {
    Tensor value;
    Tensor grad;  // allocated lazily, same shape as value
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;  // accumulates into parents' grads

    void ensure_grad() {
        if (grad.numel() != value.numel()) grad = Tensor::zeros(value.shape());
    }
};

using Var = std::shared_ptr<Node>;

Var constant(Tensor value);
Var leaf(Tensor value, bool requires_grad = true);

/// Seeds root->grad with ones and propagates to all reachable leaves.
void backward(const Var& root);
void zero_grad(const Var& v);

// Elementwise
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scalar_mul(const Var& x, double s);
Var tanh_op(const Var& x);
/// ln(max(x, floor)); zero gradient where the clamp is active.
Var log_clamped(const Var& x, double floor = 1e-12);

// Linear algebra (2-D)
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& x);
Var add_row(const Var& x, const Var& bias);  // bias broadcast over rows

// Structure
Var reshape(const Var& x, std::vector<std::size_t> shape);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(const Var& x, std::size_t r0, std::size_t r1);
Var slice_cols(const Var& x, std::size_t c0, std::size_t c1);
/// y.flat[i] = x.flat[map[i]]; map must index into x. Backward scatter-adds.
Var reindex(const Var& x, std::vector<std::size_t> shape, std::vector<std::size_t> map);

// Reductions
Var sum_all(const Var& x);       // -> 1x1
Var mean_all(const Var& x);      // -> 1x1
Var mean_rows(const Var& x);     // m x n -> 1 x n

// Normalization / regularization
Var softmax_rows(const Var& x);
Var layer_norm_rows(const Var& x, const Var& gain, const Var& shift, double eps = 1e-5);
/// Column-wise batch statistics (training path). B >= 2 enforced by callers.
Var batch_norm_cols(const Var& x, const Var& gain, const Var& shift, double eps,
                    Tensor* batch_mean_out = nullptr, Tensor* batch_var_out = nullptr);
Var dropout(const Var& x, double rate, RandomStream& rng, bool training);

/// Central-difference gradient verification. `f` must map leaves to a scalar
/// (1x1) Var. Returns the worst relative error over all input entries.
double gradient_check(const std::function<Var(const std::vector<Var>&)>& f,
                      const std::vector<Tensor>& inputs, double step = 1e-5);

}  // namespace mr
