#ifndef LRTC_SHRINK_HPP
#define LRTC_SHRINK_HPP

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

namespace lrtc {

/// Parameters of the p-shrinkage thresholding operator: exponent p <= 1 and
/// threshold weight mu > 0. p = 1 gives the classical soft threshold; as
/// p -> -inf the operator approaches hard thresholding.
struct ShrinkParams {
    double p;
    double mu;

    ShrinkParams(double p_, double mu_) : p(p_), mu(mu_) {
        if (!std::isfinite(p) || !std::isfinite(mu))
            throw std::invalid_argument("shrink params must be finite");
        if (p > 1.0) throw std::invalid_argument("shrink exponent p must be <= 1");
        if (mu <= 0.0) throw std::invalid_argument("shrink weight mu must be positive");
    }
};

/// Scalar p-shrinkage: sign(x) * max(|x| - mu*|x|^(p-1), 0).
/// Maps 0 to 0 by convention (the penalty term diverges there for p < 1).
inline double p_shrink(double x, const ShrinkParams& params) {
    if (x == 0.0) return 0.0;
    const double ax = std::abs(x);
    const double shrunk = ax - params.mu * std::pow(ax, params.p - 1.0);
    if (!(shrunk > 0.0)) return 0.0;  // also catches -inf from pow overflow
    return std::copysign(shrunk, x);
}

/// Elementwise p-shrinkage of a nonnegative spectrum (singular values).
/// Output entries stay nonnegative and never exceed the input.
inline Eigen::ArrayXd p_shrink_spectrum(const Eigen::ArrayXd& sbar, const ShrinkParams& params) {
    Eigen::ArrayXd out(sbar.size());
    for (Eigen::Index i = 0; i < sbar.size(); ++i) out[i] = p_shrink(sbar[i], params);
    return out;
}

}  // namespace lrtc

#endif  // LRTC_SHRINK_HPP
