#ifndef LRTC_TENSOR_HPP
#define LRTC_TENSOR_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace lrtc {

using Index = std::int64_t;

/// Thrown when tensor shapes do not line up for an operation.
struct dimension_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical routine (SVD, solver step) fails to converge.
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shape of a third-order tensor.
struct Dims {
    Index i1 = 0;
    Index i2 = 0;
    Index i3 = 0;

    friend bool operator==(const Dims&, const Dims&) = default;

    Index count() const { return i1 * i2 * i3; }

    std::string str() const {
        return std::to_string(i1) + "x" + std::to_string(i2) + "x" + std::to_string(i3);
    }
};

namespace detail {

inline void check_dims_positive(const Dims& d) {
    if (d.i1 < 1 || d.i2 < 1 || d.i3 < 1)
        throw dimension_error("tensor dims must be positive, got " + d.str());
}

}  // namespace detail

/// Dense real third-order tensor. Storage is a flat array with the first
/// index varying fastest, so frontal slice k is a contiguous column-major
/// I1 x I2 matrix and the whole tensor maps onto an (I1*I2) x I3 matrix
/// whose column k is slice k.
class Tensor3 {
public:
    Tensor3() = default;

    /// Zero tensor of the given shape.
    explicit Tensor3(Dims dims) : dims_(dims), values_(static_cast<std::size_t>(dims.count()), 0.0) {
        detail::check_dims_positive(dims);
    }

    Tensor3(Index i1, Index i2, Index i3) : Tensor3(Dims{i1, i2, i3}) {}

    /// Adopts an existing value buffer (i1-fastest order). Rejects size
    /// mismatches and non-finite entries.
    Tensor3(Dims dims, std::vector<double> values) : dims_(dims), values_(std::move(values)) {
        detail::check_dims_positive(dims);
        if (static_cast<Index>(values_.size()) != dims.count())
            throw dimension_error("value buffer length " + std::to_string(values_.size()) +
                                  " does not match dims " + dims.str());
        for (double v : values_)
            if (!std::isfinite(v)) throw std::invalid_argument("tensor entries must be finite");
    }

    const Dims& dims() const { return dims_; }
    Index size() const { return static_cast<Index>(values_.size()); }

    double operator()(Index i1, Index i2, Index i3) const {
        return values_[static_cast<std::size_t>(linear_index(i1, i2, i3))];
    }
    double& operator()(Index i1, Index i2, Index i3) {
        return values_[static_cast<std::size_t>(linear_index(i1, i2, i3))];
    }

    Index linear_index(Index i1, Index i2, Index i3) const {
        return i1 + dims_.i1 * (i2 + dims_.i2 * i3);
    }

    const double* data() const { return values_.data(); }
    double* data() { return values_.data(); }
    const std::vector<double>& values() const { return values_; }

    /// Frontal slice k as a column-major matrix view.
    Eigen::Map<const Eigen::MatrixXd> slice(Index k) const {
        return {values_.data() + k * dims_.i1 * dims_.i2, dims_.i1, dims_.i2};
    }
    Eigen::Map<Eigen::MatrixXd> slice(Index k) {
        return {values_.data() + k * dims_.i1 * dims_.i2, dims_.i1, dims_.i2};
    }

    /// The tensor viewed as an (I1*I2) x I3 matrix; column k is slice k,
    /// row r is the mode-3 tube of entry r.
    Eigen::Map<const Eigen::MatrixXd> tube_matrix() const {
        return {values_.data(), dims_.i1 * dims_.i2, dims_.i3};
    }
    Eigen::Map<Eigen::MatrixXd> tube_matrix() {
        return {values_.data(), dims_.i1 * dims_.i2, dims_.i3};
    }

    /// Flat elementwise view.
    Eigen::Map<const Eigen::ArrayXd> flat() const {
        return {values_.data(), static_cast<Index>(values_.size())};
    }
    Eigen::Map<Eigen::ArrayXd> flat() { return {values_.data(), static_cast<Index>(values_.size())}; }

    double frobenius_norm() const { return std::sqrt(flat().square().sum()); }

    friend bool operator==(const Tensor3& a, const Tensor3& b) {
        return a.dims_ == b.dims_ && a.values_ == b.values_;
    }

private:
    Dims dims_;
    std::vector<double> values_;
};

/// Complex third-order tensor with the same layout as Tensor3; holds the
/// mode-3 DFT of a real tensor.
class FTensor3 {
public:
    using Scalar = std::complex<double>;

    FTensor3() = default;

    explicit FTensor3(Dims dims) : dims_(dims), values_(static_cast<std::size_t>(dims.count())) {
        detail::check_dims_positive(dims);
    }

    FTensor3(Index i1, Index i2, Index i3) : FTensor3(Dims{i1, i2, i3}) {}

    const Dims& dims() const { return dims_; }
    Index size() const { return static_cast<Index>(values_.size()); }

    Scalar operator()(Index i1, Index i2, Index i3) const {
        return values_[static_cast<std::size_t>(i1 + dims_.i1 * (i2 + dims_.i2 * i3))];
    }
    Scalar& operator()(Index i1, Index i2, Index i3) {
        return values_[static_cast<std::size_t>(i1 + dims_.i1 * (i2 + dims_.i2 * i3))];
    }

    const Scalar* data() const { return values_.data(); }
    Scalar* data() { return values_.data(); }

    Eigen::Map<const Eigen::MatrixXcd> slice(Index k) const {
        return {values_.data() + k * dims_.i1 * dims_.i2, dims_.i1, dims_.i2};
    }
    Eigen::Map<Eigen::MatrixXcd> slice(Index k) {
        return {values_.data() + k * dims_.i1 * dims_.i2, dims_.i1, dims_.i2};
    }

    Eigen::Map<const Eigen::MatrixXcd> tube_matrix() const {
        return {values_.data(), dims_.i1 * dims_.i2, dims_.i3};
    }
    Eigen::Map<Eigen::MatrixXcd> tube_matrix() {
        return {values_.data(), dims_.i1 * dims_.i2, dims_.i3};
    }

private:
    Dims dims_;
    std::vector<Scalar> values_;
};

inline void check_same_dims(const Tensor3& a, const Tensor3& b, const char* what) {
    if (!(a.dims() == b.dims()))
        throw dimension_error(std::string(what) + ": dims " + a.dims().str() + " vs " +
                              b.dims().str());
}

}  // namespace lrtc

#endif  // LRTC_TENSOR_HPP
