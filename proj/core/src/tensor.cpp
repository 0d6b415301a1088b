#include "ccsp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ccsp {

int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << ", ";
        os << s[i];
    }
    os << ")";
    return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(shape_numel(shape_)), 0.0);
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(shape_numel(shape_)), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    assert(static_cast<int64_t>(data_.size()) == shape_numel(shape_));
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::add_scaled(const Tensor& other, double a) {
    assert(same_shape(other));
    const double* src = other.data();
    double* dst = data();
    const int64_t n = numel();
    for (int64_t i = 0; i < n; ++i) dst[i] += a * src[i];
}

double Tensor::min() const {
    return data_.empty() ? 0.0 : *std::min_element(data_.begin(), data_.end());
}

double Tensor::max() const {
    return data_.empty() ? 0.0 : *std::max_element(data_.begin(), data_.end());
}

double Tensor::sum() const { return std::accumulate(data_.begin(), data_.end(), 0.0); }

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::fill_uniform(Rng& rng, double lo, double hi) {
    for (double& v : data_) v = rng.uniform(lo, hi);
}

}  // namespace ccsp
