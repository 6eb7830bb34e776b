#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gcdr/errors.hpp"

namespace gcdr {

// Row-major f32 matrix; the single dense type everything is built on.
using Mat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<float, 1, Eigen::Dynamic, Eigen::RowMajor>;

using Shape = std::vector<int>;

inline std::int64_t shape_size(const Shape& s) {
    std::int64_t n = 1;
    for (int d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + ")";
}

// Dense f32 tensor: a shape plus row-major storage viewed as an Eigen matrix
// with rows = shape[0] and cols = product of the remaining dims. Rank >= 1;
// every dimension is positive; storage length always equals the shape product.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape) { reset(std::move(shape)); }

    Tensor(Shape shape, std::vector<float> values) {
        check_shape(shape);
        if (static_cast<std::int64_t>(values.size()) != shape_size(shape))
            throw DimensionError("tensor: " + std::to_string(values.size()) +
                                 " values for shape " + shape_str(shape));
        shape_ = std::move(shape);
        m_.resize(rows(), cols());
        std::copy(values.begin(), values.end(), m_.data());
    }

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

    static Tensor scalar(float v) {
        Tensor t({1});
        t.m_(0, 0) = v;
        return t;
    }

    static Tensor from_mat(Shape shape, Mat m) {
        check_shape(shape);
        Tensor t;
        if (m.rows() != shape[0] || m.cols() * shape[0] != shape_size(shape))
            throw DimensionError("tensor: matrix " + std::to_string(m.rows()) + "x" +
                                 std::to_string(m.cols()) + " does not fill shape " +
                                 shape_str(shape));
        t.shape_ = std::move(shape);
        t.m_ = std::move(m);
        return t;
    }

    const Shape& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    std::int64_t size() const { return shape_.empty() ? 0 : shape_size(shape_); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }

    Eigen::Index rows() const { return shape_.empty() ? 0 : shape_[0]; }
    Eigen::Index cols() const { return shape_.empty() ? 0 : shape_size(shape_) / shape_[0]; }

    Mat& mat() { return m_; }
    const Mat& mat() const { return m_; }

    float* data() { return m_.data(); }
    const float* data() const { return m_.data(); }

    float& at(std::initializer_list<int> idx) { return m_.data()[offset(idx)]; }
    float at(std::initializer_list<int> idx) const { return m_.data()[offset(idx)]; }

    void fill(float v) { m_.setConstant(v); }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    bool all_finite() const { return m_.allFinite(); }

    // Same data, new shape with identical element count.
    Tensor reshaped(Shape shape) const {
        check_shape(shape);
        if (shape_size(shape) != size())
            throw DimensionError("reshape: " + shape_str(shape_) + " to " + shape_str(shape));
        Tensor t;
        t.shape_ = std::move(shape);
        t.m_.resize(t.rows(), t.cols());
        std::copy(m_.data(), m_.data() + size(), t.m_.data());
        return t;
    }

private:
    static void check_shape(const Shape& shape) {
        if (shape.empty()) throw DimensionError("tensor: rank must be >= 1");
        for (int d : shape)
            if (d <= 0) throw DimensionError("tensor: non-positive dim in " + shape_str(shape));
    }

    void reset(Shape shape) {
        check_shape(shape);
        shape_ = std::move(shape);
        m_.setZero(rows(), cols());
    }

    std::int64_t offset(std::initializer_list<int> idx) const {
        if (static_cast<int>(idx.size()) != rank())
            throw DimensionError("tensor: index rank mismatch");
        std::int64_t off = 0;
        int i = 0;
        for (int v : idx) {
            const int d = shape_[static_cast<std::size_t>(i)];
            if (v < 0 || v >= d) throw RangeError("tensor: index out of range");
            off = off * d + v;
            ++i;
        }
        return off;
    }

    Shape shape_;
    Mat m_;
};

}  // namespace gcdr
