#pragma once

#include <cassert>
#include <cstdint>
#include <string>
#include <vector>

#include "ccsp/common.hpp"

namespace ccsp {

using Shape = std::vector<int64_t>;

std::string shape_str(const Shape& s);

/// Dense row-major double tensor. Rank-4 activations are laid out NCHW.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);
    Tensor(Shape shape, double fill);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor zeros(const Shape& shape) { return Tensor(shape); }
    static Tensor full(const Shape& shape, double v) { return Tensor(shape, v); }

    int64_t numel() const { return static_cast<int64_t>(data_.size()); }
    int rank() const { return static_cast<int>(shape_.size()); }
    const Shape& shape() const { return shape_; }
    int64_t dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    bool defined() const { return !shape_.empty(); }
    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    // NCHW accessors.
    double& at(int64_t n, int64_t c, int64_t h, int64_t w) {
        return data_[static_cast<size_t>(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
    }
    double at(int64_t n, int64_t c, int64_t h, int64_t w) const {
        return data_[static_cast<size_t>(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
    }
    // CHW accessors for single images.
    double& at(int64_t c, int64_t h, int64_t w) {
        return data_[static_cast<size_t>((c * shape_[1] + h) * shape_[2] + w)];
    }
    double at(int64_t c, int64_t h, int64_t w) const {
        return data_[static_cast<size_t>((c * shape_[1] + h) * shape_[2] + w)];
    }

    void fill(double v);
    void zero() { fill(0.0); }

    /// In-place axpy: this += a * other (shapes must match).
    void add_scaled(const Tensor& other, double a);

    double min() const;
    double max() const;
    double sum() const;
    bool all_finite() const;

    /// Fills with uniform draws from [lo, hi) using the given stream.
    void fill_uniform(Rng& rng, double lo, double hi);

private:
    Shape shape_;
    std::vector<double> data_;
};

int64_t shape_numel(const Shape& s);

}  // namespace ccsp
