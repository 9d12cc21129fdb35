#ifndef LRTC_METRICS_HPP
#define LRTC_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include <Eigen/Core>

#include "lrtc/tensor.hpp"

namespace lrtc {

/// Recovery-quality summary of one completion run.
struct MetricReport {
    double rse = 0.0;
    double psnr = 0.0;
    std::optional<double> ssim;
};

/// PSNR reported when the recovery error is exactly zero, to keep CSV
/// output numeric.
inline constexpr double kPsnrCap = 300.0;

/// Relative square error ||xstar - x||_F / ||x||_F, with x the ground truth.
inline double rse(const Tensor3& x, const Tensor3& xstar) {
    check_same_dims(x, xstar, "rse");
    const double denom = x.frobenius_norm();
    if (denom == 0.0) throw std::invalid_argument("rse: ground truth has zero norm");
    return std::sqrt((xstar.flat() - x.flat()).square().sum()) / denom;
}

/// Peak signal-to-noise ratio 10*log10(max|x|^2 / mse) in dB, capped at
/// kPsnrCap when the error vanishes.
inline double psnr(const Tensor3& x, const Tensor3& xstar) {
    check_same_dims(x, xstar, "psnr");
    const double peak = x.flat().abs().maxCoeff();
    if (peak == 0.0) throw std::invalid_argument("psnr: ground truth is identically zero");
    const double mse = (xstar.flat() - x.flat()).square().sum() / static_cast<double>(x.size());
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

/// Mean structural similarity between two greyscale images in [0,1], over
/// 8x8 non-overlapping windows (partial edge windows are dropped; images
/// smaller than one window are treated as a single window), with
/// c1 = (0.01)^2 and c2 = (0.03)^2 for unit dynamic range. Window moments
/// are population statistics. Identical inputs give exactly 1.
inline double ssim(const Eigen::MatrixXd& img, const Eigen::MatrixXd& imgstar) {
    if (img.rows() != imgstar.rows() || img.cols() != imgstar.cols())
        throw std::invalid_argument("ssim: image shapes differ");
    if (img.size() == 0) throw std::invalid_argument("ssim: empty image");
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    const Eigen::Index win = 8;
    const Eigen::Index wr = std::min(win, img.rows());
    const Eigen::Index wc = std::min(win, img.cols());
    double total = 0.0;
    Eigen::Index windows = 0;
    for (Eigen::Index r = 0; r + wr <= img.rows(); r += wr)
        for (Eigen::Index c = 0; c + wc <= img.cols(); c += wc) {
            const auto a = img.block(r, c, wr, wc).array();
            const auto b = imgstar.block(r, c, wr, wc).array();
            const double n = static_cast<double>(wr * wc);
            const double mu_a = a.sum() / n;
            const double mu_b = b.sum() / n;
            const double var_a = (a - mu_a).square().sum() / n;
            const double var_b = (b - mu_b).square().sum() / n;
            const double cov = ((a - mu_a) * (b - mu_b)).sum() / n;
            total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                     ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
            ++windows;
        }
    return total / static_cast<double>(windows);
}

/// Luminance image of an H x W x 3 tensor (weights 0.299/0.587/0.114),
/// clamped to [0,1] where ssim is defined.
inline Eigen::MatrixXd to_greyscale(const Tensor3& x) {
    if (x.dims().i3 != 3) throw dimension_error("to_greyscale expects an H x W x 3 tensor");
    Eigen::MatrixXd grey = 0.299 * x.slice(0) + 0.587 * x.slice(1) + 0.114 * x.slice(2);
    return grey.cwiseMax(0.0).cwiseMin(1.0);
}

/// rse + psnr for any tensor pair; ssim additionally when the tensors have
/// three frontal slices and can be treated as RGB images.
inline MetricReport evaluate_recovery(const Tensor3& truth, const Tensor3& estimate) {
    MetricReport report;
    report.rse = rse(truth, estimate);
    report.psnr = psnr(truth, estimate);
    if (truth.dims().i3 == 3) report.ssim = ssim(to_greyscale(truth), to_greyscale(estimate));
    return report;
}

}  // namespace lrtc

#endif  // LRTC_METRICS_HPP
