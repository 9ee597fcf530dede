#include "moodreader/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace mr {

namespace {

Var make_node(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backprop) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    if (!n->value.all_finite())
        throw DataError("non-finite values produced by a forward operation");
    n->parents = std::move(parents);
    for (const auto& p : n->parents)
        if (p->requires_grad) n->requires_grad = true;
    if (n->requires_grad) n->backprop = std::move(backprop);
    return n;
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
    if (!a->value.same_shape(b->value))
        throw ShapeError(std::string(op) + ": shape mismatch " + a->value.shape_str() + " vs " +
                         b->value.shape_str());
}

}  // namespace

Var constant(Tensor value) { return leaf(std::move(value), false); }

Var leaf(Tensor value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return n;
}

void backward(const Var& root) {
    // iterative topological order
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.push_back({root.get(), 0});
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx == 0 && visited.count(node)) {
            stack.pop_back();
            continue;
        }
        if (idx < node->parents.size()) {
            Node* next = node->parents[idx++].get();
            if (!visited.count(next)) stack.push_back({next, 0});
        } else {
            visited.insert(node);
            order.push_back(node);
            stack.pop_back();
        }
    }
    root->ensure_grad();
    root->grad.fill(1.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->requires_grad && n->backprop) n->backprop(*n);
    }
}

void zero_grad(const Var& v) {
    if (v->grad.numel()) v->grad.fill(0.0);
}

Var add(const Var& a, const Var& b) {
    require_same_shape(a, b, "add");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b->value[i];
    return make_node(std::move(out), {a, b}, [a, b](Node& self) {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < self.grad.numel(); ++i) a->grad[i] += self.grad[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (std::size_t i = 0; i < self.grad.numel(); ++i) b->grad[i] += self.grad[i];
        }
    });
}

Var sub(const Var& a, const Var& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= b->value[i];
    return make_node(std::move(out), {a, b}, [a, b](Node& self) {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < self.grad.numel(); ++i) a->grad[i] += self.grad[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (std::size_t i = 0; i < self.grad.numel(); ++i) b->grad[i] -= self.grad[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    require_same_shape(a, b, "mul");
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= b->value[i];
    return make_node(std::move(out), {a, b}, [a, b](Node& self) {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < self.grad.numel(); ++i)
                a->grad[i] += self.grad[i] * b->value[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (std::size_t i = 0; i < self.grad.numel(); ++i)
                b->grad[i] += self.grad[i] * a->value[i];
        }
    });
}

Var scalar_mul(const Var& x, double s) {
    Tensor out = x->value;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= s;
    return make_node(std::move(out), {x}, [x, s](Node& self) {
        x->ensure_grad();
        for (std::size_t i = 0; i < self.grad.numel(); ++i) x->grad[i] += s * self.grad[i];
    });
}

Var tanh_op(const Var& x) {
    Tensor out = x->value;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(out[i]);
    auto n = make_node(std::move(out), {x}, nullptr);
    if (n->requires_grad) {
        Node* raw = n.get();
        n->backprop = [x, raw](Node& self) {
            (void)raw;
            x->ensure_grad();
            for (std::size_t i = 0; i < self.grad.numel(); ++i) {
                const double t = self.value[i];
                x->grad[i] += self.grad[i] * (1.0 - t * t);
            }
        };
    }
    return n;
}

Var log_clamped(const Var& x, double floor) {
    Tensor out = x->value;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::log(std::max(out[i], floor));
    return make_node(std::move(out), {x}, [x, floor](Node& self) {
        x->ensure_grad();
        for (std::size_t i = 0; i < self.grad.numel(); ++i) {
            const double v = x->value[i];
            if (v > floor) x->grad[i] += self.grad[i] / v;
        }
    });
}

Var matmul(const Var& a, const Var& b) {
    const Tensor& A = a->value;
    const Tensor& B = b->value;
    if (A.cols() != B.rows())
        throw ShapeError("matmul: inner dimensions disagree, " + A.shape_str() + " x " +
                         B.shape_str());
    const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
    Tensor out = Tensor::matrix(m, n);
    const double* pa = A.data().data();
    const double* pb = B.data().data();
    double* po = out.data().data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double av = pa[i * k + p];
            if (av == 0.0) continue;
            const double* brow = pb + p * n;
            double* orow = po + i * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    return make_node(std::move(out), {a, b}, [a, b, m, k, n](Node& self) {
        const double* g = self.grad.data().data();
        if (a->requires_grad) {
            a->ensure_grad();
            // dA = G * B^T
            const double* pb = b->value.data().data();
            double* ga = a->grad.data().data();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    double s = 0.0;
                    const double* grow = g + i * n;
                    const double* brow = pb + p * n;
                    for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
                    ga[i * k + p] += s;
                }
        }
        if (b->requires_grad) {
            b->ensure_grad();
            // dB = A^T * G
            const double* pa = a->value.data().data();
            double* gb = b->grad.data().data();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double av = pa[i * k + p];
                    if (av == 0.0) continue;
                    const double* grow = g + i * n;
                    double* brow = gb + p * n;
                    for (std::size_t j = 0; j < n; ++j) brow[j] += av * grow[j];
                }
        }
    });
}

Var transpose(const Var& x) {
    const std::size_t m = x->value.rows(), n = x->value.cols();
    Tensor out = Tensor::matrix(n, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(j, i) = x->value.at(i, j);
    return make_node(std::move(out), {x}, [x, m, n](Node& self) {
        x->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) x->grad.at(i, j) += self.grad.at(j, i);
    });
}

Var add_row(const Var& x, const Var& bias) {
    const std::size_t m = x->value.rows(), n = x->value.cols();
    if (bias->value.numel() != n)
        throw ShapeError("add_row: bias " + bias->value.shape_str() + " vs cols " +
                         std::to_string(n));
    Tensor out = x->value;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) += bias->value[j];
    return make_node(std::move(out), {x, bias}, [x, bias, m, n](Node& self) {
        if (x->requires_grad) {
            x->ensure_grad();
            for (std::size_t i = 0; i < self.grad.numel(); ++i) x->grad[i] += self.grad[i];
        }
        if (bias->requires_grad) {
            bias->ensure_grad();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) bias->grad[j] += self.grad.at(i, j);
        }
    });
}

Var reshape(const Var& x, std::vector<std::size_t> shape) {
    Tensor out = x->value.reshaped(shape);
    return make_node(std::move(out), {x}, [x](Node& self) {
        x->ensure_grad();
        for (std::size_t i = 0; i < self.grad.numel(); ++i) x->grad[i] += self.grad[i];
    });
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows: empty list");
    const std::size_t n = parts[0]->value.cols();
    std::size_t m = 0;
    for (const auto& p : parts) {
        if (p->value.cols() != n) throw ShapeError("concat_rows: column mismatch");
        m += p->value.rows();
    }
    Tensor out = Tensor::matrix(m, n);
    std::size_t r = 0;
    for (const auto& p : parts) {
        std::copy(p->value.data().begin(), p->value.data().end(),
                  out.data().begin() + r * n);
        r += p->value.rows();
    }
    return make_node(std::move(out), parts, [parts, n](Node& self) {
        std::size_t r = 0;
        for (const auto& p : parts) {
            const std::size_t rows = p->value.rows();
            if (p->requires_grad) {
                p->ensure_grad();
                for (std::size_t i = 0; i < rows * n; ++i)
                    p->grad[i] += self.grad[r * n + i];
            }
            r += rows;
        }
    });
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: empty list");
    const std::size_t m = parts[0]->value.rows();
    std::size_t n = 0;
    for (const auto& p : parts) {
        if (p->value.rows() != m) throw ShapeError("concat_cols: row mismatch");
        n += p->value.cols();
    }
    Tensor out = Tensor::matrix(m, n);
    std::size_t c = 0;
    for (const auto& p : parts) {
        const std::size_t pc = p->value.cols();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < pc; ++j) out.at(i, c + j) = p->value.at(i, j);
        c += pc;
    }
    return make_node(std::move(out), parts, [parts, m](Node& self) {
        std::size_t c = 0;
        for (const auto& p : parts) {
            const std::size_t pc = p->value.cols();
            if (p->requires_grad) {
                p->ensure_grad();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < pc; ++j)
                        p->grad.at(i, j) += self.grad.at(i, c + j);
            }
            c += pc;
        }
    });
}

Var slice_rows(const Var& x, std::size_t r0, std::size_t r1) {
    const std::size_t m = x->value.rows(), n = x->value.cols();
    if (!(r0 < r1 && r1 <= m)) throw ShapeError("slice_rows: bad range");
    Tensor out = Tensor::matrix(r1 - r0, n);
    std::copy(x->value.data().begin() + r0 * n, x->value.data().begin() + r1 * n,
              out.data().begin());
    return make_node(std::move(out), {x}, [x, r0, n](Node& self) {
        x->ensure_grad();
        for (std::size_t i = 0; i < self.grad.numel(); ++i)
            x->grad[r0 * n + i] += self.grad[i];
    });
}

Var slice_cols(const Var& x, std::size_t c0, std::size_t c1) {
    const std::size_t m = x->value.rows(), n = x->value.cols();
    if (!(c0 < c1 && c1 <= n)) throw ShapeError("slice_cols: bad range");
    Tensor out = Tensor::matrix(m, c1 - c0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = c0; j < c1; ++j) out.at(i, j - c0) = x->value.at(i, j);
    return make_node(std::move(out), {x}, [x, c0, m](Node& self) {
        const std::size_t w = self.grad.cols();
        x->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < w; ++j) x->grad.at(i, c0 + j) += self.grad.at(i, j);
    });
}

Var reindex(const Var& x, std::vector<std::size_t> shape, std::vector<std::size_t> map) {
    Tensor out(shape);
    if (map.size() != out.numel()) throw ShapeError("reindex: map size mismatch");
    for (std::size_t i = 0; i < map.size(); ++i) out[i] = x->value[map[i]];
    auto map_shared = std::make_shared<std::vector<std::size_t>>(std::move(map));
    return make_node(std::move(out), {x}, [x, map_shared](Node& self) {
        x->ensure_grad();
        for (std::size_t i = 0; i < map_shared->size(); ++i)
            x->grad[(*map_shared)[i]] += self.grad[i];
    });
}

Var sum_all(const Var& x) {
    double s = 0.0;
    for (double v : x->value.data()) s += v;
    return make_node(Tensor({1, 1}, {s}), {x}, [x](Node& self) {
        x->ensure_grad();
        const double g = self.grad[0];
        for (std::size_t i = 0; i < x->grad.numel(); ++i) x->grad[i] += g;
    });
}

Var mean_all(const Var& x) { return scalar_mul(sum_all(x), 1.0 / x->value.numel()); }

Var mean_rows(const Var& x) {
    const std::size_t m = x->value.rows(), n = x->value.cols();
    Tensor out = Tensor::matrix(1, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j] += x->value.at(i, j);
    for (std::size_t j = 0; j < n; ++j) out[j] /= static_cast<double>(m);
    return make_node(std::move(out), {x}, [x, m, n](Node& self) {
        x->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
                x->grad.at(i, j) += self.grad[j] / static_cast<double>(m);
    });
}

Var softmax_rows(const Var& x) {
    const std::size_t m = x->value.rows(), n = x->value.cols();
    Tensor out = Tensor::matrix(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        double mx = x->value.at(i, 0);
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, x->value.at(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double e = std::exp(x->value.at(i, j) - mx);
            out.at(i, j) = e;
            z += e;
        }
        for (std::size_t j = 0; j < n; ++j) out.at(i, j) /= z;
    }
    auto n_ = make_node(std::move(out), {x}, nullptr);
    if (n_->requires_grad) {
        n_->backprop = [x, m, n](Node& self) {
            x->ensure_grad();
            for (std::size_t i = 0; i < m; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < n; ++j)
                    dot += self.grad.at(i, j) * self.value.at(i, j);
                for (std::size_t j = 0; j < n; ++j)
                    x->grad.at(i, j) += self.value.at(i, j) * (self.grad.at(i, j) - dot);
            }
        };
    }
    return n_;
}

Var layer_norm_rows(const Var& x, const Var& gain, const Var& shift, double eps) {
    const std::size_t m = x->value.rows(), n = x->value.cols();
    if (n == 0) throw ShapeError("layer_norm: zero-width row");
    if (gain->value.numel() != n || shift->value.numel() != n)
        throw ShapeError("layer_norm: gain/shift width " + std::to_string(gain->value.numel()) +
                         " vs feature width " + std::to_string(n));
    Tensor out = Tensor::matrix(m, n);
    auto xhat = std::make_shared<Tensor>(Tensor::matrix(m, n));
    auto inv_std = std::make_shared<std::vector<double>>(m);
    for (std::size_t i = 0; i < m; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean += x->value.at(i, j);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = x->value.at(i, j) - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[i] = is;
        for (std::size_t j = 0; j < n; ++j) {
            const double h = (x->value.at(i, j) - mean) * is;
            xhat->at(i, j) = h;
            out.at(i, j) = h * gain->value[j] + shift->value[j];
        }
    }
    return make_node(std::move(out), {x, gain, shift},
                     [x, gain, shift, xhat, inv_std, m, n](Node& self) {
        for (std::size_t i = 0; i < m; ++i) {
            if (x->requires_grad) {
                // dL/dx = is * (gdy - mean(gdy) - xhat * mean(gdy*xhat))
                double mean_gdy = 0.0, mean_gdyh = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    const double gdy = self.grad.at(i, j) * gain->value[j];
                    mean_gdy += gdy;
                    mean_gdyh += gdy * xhat->at(i, j);
                }
                mean_gdy /= static_cast<double>(n);
                mean_gdyh /= static_cast<double>(n);
                x->ensure_grad();
                for (std::size_t j = 0; j < n; ++j) {
                    const double gdy = self.grad.at(i, j) * gain->value[j];
                    x->grad.at(i, j) +=
                        (*inv_std)[i] * (gdy - mean_gdy - xhat->at(i, j) * mean_gdyh);
                }
            }
            if (gain->requires_grad) {
                gain->ensure_grad();
                for (std::size_t j = 0; j < n; ++j)
                    gain->grad[j] += self.grad.at(i, j) * xhat->at(i, j);
            }
            if (shift->requires_grad) {
                shift->ensure_grad();
                for (std::size_t j = 0; j < n; ++j) shift->grad[j] += self.grad.at(i, j);
            }
        }
    });
}

Var batch_norm_cols(const Var& x, const Var& gain, const Var& shift, double eps,
                    Tensor* batch_mean_out, Tensor* batch_var_out) {
    const std::size_t b = x->value.rows(), n = x->value.cols();
    if (b < 2) throw DataError("batch_norm: degenerate batch of size " + std::to_string(b));
    if (gain->value.numel() != n || shift->value.numel() != n)
        throw ShapeError("batch_norm: gain/shift width mismatch");
    auto mean = std::make_shared<std::vector<double>>(n, 0.0);
    auto inv_std = std::make_shared<std::vector<double>>(n, 0.0);
    auto xhat = std::make_shared<Tensor>(Tensor::matrix(b, n));
    Tensor out = Tensor::matrix(b, n);
    Tensor bm = Tensor::matrix(1, n), bv = Tensor::matrix(1, n);
    for (std::size_t j = 0; j < n; ++j) {
        double mu = 0.0;
        for (std::size_t i = 0; i < b; ++i) mu += x->value.at(i, j);
        mu /= static_cast<double>(b);
        double var = 0.0;
        for (std::size_t i = 0; i < b; ++i) {
            const double d = x->value.at(i, j) - mu;
            var += d * d;
        }
        var /= static_cast<double>(b);
        (*mean)[j] = mu;
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[j] = is;
        bm[j] = mu;
        bv[j] = var;
        for (std::size_t i = 0; i < b; ++i) {
            const double h = (x->value.at(i, j) - mu) * is;
            xhat->at(i, j) = h;
            out.at(i, j) = h * gain->value[j] + shift->value[j];
        }
    }
    if (batch_mean_out) *batch_mean_out = bm;
    if (batch_var_out) *batch_var_out = bv;
    return make_node(std::move(out), {x, gain, shift},
                     [x, gain, shift, xhat, inv_std, b, n](Node& self) {
        for (std::size_t j = 0; j < n; ++j) {
            if (x->requires_grad) {
                double mean_gdy = 0.0, mean_gdyh = 0.0;
                for (std::size_t i = 0; i < b; ++i) {
                    const double gdy = self.grad.at(i, j) * gain->value[j];
                    mean_gdy += gdy;
                    mean_gdyh += gdy * xhat->at(i, j);
                }
                mean_gdy /= static_cast<double>(b);
                mean_gdyh /= static_cast<double>(b);
                x->ensure_grad();
                for (std::size_t i = 0; i < b; ++i) {
                    const double gdy = self.grad.at(i, j) * gain->value[j];
                    x->grad.at(i, j) +=
                        (*inv_std)[j] * (gdy - mean_gdy - xhat->at(i, j) * mean_gdyh);
                }
            }
            if (gain->requires_grad) {
                gain->ensure_grad();
                for (std::size_t i = 0; i < b; ++i)
                    gain->grad[j] += self.grad.at(i, j) * xhat->at(i, j);
            }
            if (shift->requires_grad) {
                shift->ensure_grad();
                for (std::size_t i = 0; i < b; ++i) shift->grad[j] += self.grad.at(i, j);
            }
        }
    });
}

Var dropout(const Var& x, double rate, RandomStream& rng, bool training) {
    if (rate < 0.0 || rate >= 1.0)
        throw ConfigError("dropout: rate must be in [0,1), got " + std::to_string(rate));
    if (!training || rate == 0.0) return x;
    const double keep = 1.0 - rate;
    auto mask = std::make_shared<std::vector<double>>(x->value.numel());
    Tensor out = x->value;
    for (std::size_t i = 0; i < out.numel(); ++i) {
        const double m = (rng.uniform() < rate) ? 0.0 : 1.0 / keep;
        (*mask)[i] = m;
        out[i] *= m;
    }
    return make_node(std::move(out), {x}, [x, mask](Node& self) {
        x->ensure_grad();
        for (std::size_t i = 0; i < self.grad.numel(); ++i)
            x->grad[i] += self.grad[i] * (*mask)[i];
    });
}

double gradient_check(const std::function<Var(const std::vector<Var>&)>& f,
                      const std::vector<Tensor>& inputs, double step) {
    std::vector<Var> leaves;
    leaves.reserve(inputs.size());
    for (const auto& t : inputs) leaves.push_back(leaf(t, true));
    Var out = f(leaves);
    if (out->value.numel() != 1) throw ConfigError("gradient_check: f must return a scalar");
    if (!out->value.all_finite()) throw DataError("gradient_check: non-finite output");
    backward(out);

    auto eval = [&](const std::vector<Var>& pts) {
        Var o = f(pts);
        return o->value[0];
    };

    double worst = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        for (std::size_t i = 0; i < inputs[k].numel(); ++i) {
            std::vector<Var> plus, minus;
            for (std::size_t j = 0; j < inputs.size(); ++j) {
                plus.push_back(leaf(inputs[j], false));
                minus.push_back(leaf(inputs[j], false));
            }
            plus[k]->value[i] += step;
            minus[k]->value[i] -= step;
            const double numeric = (eval(plus) - eval(minus)) / (2.0 * step);
            const double analytic = leaves[k]->grad.numel() ? leaves[k]->grad[i] : 0.0;
            const double denom = std::max(std::abs(numeric) + std::abs(analytic), 1e-6);
            worst = std::max(worst, std::abs(numeric - analytic) / denom);
        }
    }
    return worst;
}

}  // namespace mr
