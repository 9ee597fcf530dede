#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace mr {

// Error taxonomy shared across the library. The C API maps these to codes.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense row-major tensor of doubles. Most of the model works with 2-D
/// matrices; higher ranks appear only in the DE feature tensor (N x F x C).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0) {}
    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != checked_numel(shape_))
            throw ShapeError("Tensor: data size " + std::to_string(data_.size()) +
                             " does not match shape (numel " +
                             std::to_string(checked_numel(shape_)) + ")");
    }

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<std::size_t> shape, double v) {
        Tensor t(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), v);
        return t;
    }
    static Tensor matrix(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }
    static Tensor row(std::vector<double> v) {
        const std::size_t n = v.size();
        return Tensor({1, n}, std::move(v));
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t ndim() const { return shape_.size(); }
    std::size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::size_t rows() const {
        require_2d();
        return shape_[0];
    }
    std::size_t cols() const {
        require_2d();
        return shape_[1];
    }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t r, std::size_t c) {
        require_2d();
        return data_[r * shape_[1] + c];
    }
    double at(std::size_t r, std::size_t c) const {
        require_2d();
        return data_[r * shape_[1] + c];
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    bool all_finite() const;
    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    Tensor reshaped(std::vector<std::size_t> new_shape) const {
        Tensor t(std::move(new_shape), data_);
        return t;
    }

    static std::string shape_str(const std::vector<std::size_t>& s);
    std::string shape_str() const { return shape_str(shape_); }

private:
    static std::size_t checked_numel(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t e : s) {
            if (e == 0) throw ShapeError("Tensor: zero extent in shape " + shape_str(s));
            n *= e;
        }
        return s.empty() ? 0 : n;
    }
    void require_2d() const {
        if (shape_.size() != 2) throw ShapeError("Tensor: expected 2-D, got " + shape_str());
    }

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

}  // namespace mr
