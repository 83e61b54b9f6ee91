#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace glore {

/// Dense row-major matrix of doubles. Bias vectors are rows x 1.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Matrix& o) const noexcept {
        return rows_ == o.rows_ && cols_ == o.cols_;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

using Vector = std::vector<double>;

namespace linalg {

/// out += m * x
inline void gemv_acc(const Matrix& m, std::span<const double> x, std::span<double> out) {
    assert(x.size() == m.cols() && out.size() == m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        double s = 0.0;
        for (std::size_t c = 0; c < row.size(); ++c)
            s += row[c] * x[c];
        out[r] += s;
    }
}

/// out += m^T * y
inline void gemv_t_acc(const Matrix& m, std::span<const double> y, std::span<double> out) {
    assert(y.size() == m.rows() && out.size() == m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double yr = y[r];
        if (yr == 0.0)
            continue;
        const auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c)
            out[c] += row[c] * yr;
    }
}

/// m += y * x^T
inline void outer_acc(Matrix& m, std::span<const double> y, std::span<const double> x) {
    assert(y.size() == m.rows() && x.size() == m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double yr = y[r];
        if (yr == 0.0)
            continue;
        auto row = m.row(r);
        for (std::size_t c = 0; c < row.size(); ++c)
            row[c] += yr * x[c];
    }
}

inline double sigmoid(double x) {
    if (x >= 0.0)
        return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// Max-subtracted softmax.
inline Vector softmax(std::span<const double> logits) {
    Vector p(logits.begin(), logits.end());
    if (p.empty())
        return p;
    const double mx = *std::max_element(p.begin(), p.end());
    double z = 0.0;
    for (double& v : p) {
        v = std::exp(v - mx);
        z += v;
    }
    for (double& v : p)
        v /= z;
    return p;
}

/// log softmax, computed as logits - max - log(sum exp(logits - max)).
inline Vector log_softmax(std::span<const double> logits) {
    Vector out(logits.begin(), logits.end());
    if (out.empty())
        return out;
    const double mx = *std::max_element(out.begin(), out.end());
    double z = 0.0;
    for (double v : out)
        z += std::exp(v - mx);
    const double lz = mx + std::log(z);
    for (double& v : out)
        v -= lz;
    return out;
}

} // namespace linalg
} // namespace glore
