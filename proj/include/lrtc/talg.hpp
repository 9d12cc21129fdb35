#ifndef LRTC_TALG_HPP
#define LRTC_TALG_HPP

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "lrtc/shrink.hpp"
#include "lrtc/tensor.hpp"

namespace lrtc {

namespace detail {

/// Unnormalized forward DFT matrix W(j,k) = exp(-2*pi*i*j*k/n). Symmetric;
/// the inverse transform is conj(W)/n.
inline Eigen::MatrixXcd dft_matrix(Index n) {
    Eigen::MatrixXcd w(n, n);
    const double step = -2.0 * EIGEN_PI / static_cast<double>(n);
    for (Index j = 0; j < n; ++j)
        for (Index k = 0; k < n; ++k) w(j, k) = std::polar(1.0, step * static_cast<double>((j * k) % n));
    return w;
}

/// Number of frontal slices of the mode-3 DFT that must be computed
/// explicitly for a real tensor; slices nh..I3-1 follow by conjugation.
inline Index dft_half_count(Index i3) { return i3 / 2 + 1; }

/// True for the DC slice and (even I3) the Nyquist slice, whose Fourier
/// matrices are real.
inline bool self_conjugate_slice(Index k, Index i3) { return k == 0 || 2 * k == i3; }

}  // namespace detail

/// Mode-3 DFT: each tube x(i1,i2,:) is replaced by its unnormalized forward
/// DFT. Frontal slices of the result satisfy conjugate symmetry.
inline FTensor3 dft_mode3(const Tensor3& x) {
    const Dims d = x.dims();
    FTensor3 out(d);
    const Eigen::MatrixXcd w = detail::dft_matrix(d.i3);
    const Eigen::MatrixXd wr = w.real();
    const Eigen::MatrixXd wi = w.imag();
    const Eigen::MatrixXd re = x.tube_matrix() * wr;
    const Eigen::MatrixXd im = x.tube_matrix() * wi;
    std::complex<double>* dst = out.data();
    for (Index i = 0; i < out.size(); ++i) dst[i] = {re.data()[i], im.data()[i]};
    return out;
}

/// Inverse of dft_mode3: divides by I3 and returns the real part.
inline Tensor3 idft_mode3(const FTensor3& xf) {
    const Dims d = xf.dims();
    const Eigen::MatrixXcd w = detail::dft_matrix(d.i3);
    const Eigen::MatrixXd wr = w.real();
    const Eigen::MatrixXd wi = w.imag();
    Eigen::MatrixXd re(d.i1 * d.i2, d.i3);
    Eigen::MatrixXd im(d.i1 * d.i2, d.i3);
    const std::complex<double>* src = xf.data();
    for (Index i = 0; i < xf.size(); ++i) {
        re.data()[i] = src[i].real();
        im.data()[i] = src[i].imag();
    }
    Tensor3 out(d);
    // Re(Xbar * conj(W)) / I3 with conj(W) = wr - i*wi
    out.tube_matrix() = (re * wr + im * wi) / static_cast<double>(d.i3);
    return out;
}

/// Frontal slices stacked vertically into an (I1*I3) x I2 matrix.
inline Eigen::MatrixXd unfold(const Tensor3& x) {
    const Dims d = x.dims();
    Eigen::MatrixXd m(d.i1 * d.i3, d.i2);
    for (Index k = 0; k < d.i3; ++k) m.middleRows(k * d.i1, d.i1) = x.slice(k);
    return m;
}

/// Inverse of unfold for a known shape.
inline Tensor3 fold(const Eigen::MatrixXd& m, const Dims& dims) {
    if (m.rows() != dims.i1 * dims.i3 || m.cols() != dims.i2)
        throw dimension_error("fold: matrix " + std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()) + " does not match dims " + dims.str());
    Tensor3 out(dims);
    for (Index k = 0; k < dims.i3; ++k) out.slice(k) = m.middleRows(k * dims.i1, dims.i1);
    return out;
}

/// Block circulant matrix of x: block (r,c) is frontal slice ((r-c) mod I3).
/// Serves as the direct (non-Fourier) route to the t-product in tests.
inline Eigen::MatrixXd bcirc(const Tensor3& x) {
    const Dims d = x.dims();
    Eigen::MatrixXd m(d.i1 * d.i3, d.i2 * d.i3);
    for (Index c = 0; c < d.i3; ++c)
        for (Index r = 0; r < d.i3; ++r) {
            const Index k = (r - c + d.i3) % d.i3;
            m.block(r * d.i1, c * d.i2, d.i1, d.i2) = x.slice(k);
        }
    return m;
}

/// t-product a * b, computed slicewise in the Fourier domain. Conjugate
/// symmetry of real inputs lets slices beyond I3/2 be mirrored.
inline Tensor3 tprod(const Tensor3& a, const Tensor3& b) {
    const Dims da = a.dims();
    const Dims db = b.dims();
    if (da.i2 != db.i1 || da.i3 != db.i3)
        throw dimension_error("tprod: incompatible dims " + da.str() + " and " + db.str());
    const Index i3 = da.i3;
    FTensor3 af = dft_mode3(a);
    FTensor3 bf = dft_mode3(b);
    FTensor3 cf(Dims{da.i1, db.i2, i3});
    const Index nh = detail::dft_half_count(i3);
    for (Index k = 0; k < nh; ++k) cf.slice(k).noalias() = af.slice(k) * bf.slice(k);
    for (Index k = nh; k < i3; ++k) cf.slice(k) = cf.slice(i3 - k).conjugate();
    return idft_mode3(cf);
}

/// Tensor transpose: slice 1 transposed, slices 2..I3 transposed and
/// reversed in order, so that (a*b)^T = b^T * a^T.
inline Tensor3 transpose(const Tensor3& x) {
    const Dims d = x.dims();
    Tensor3 out(Dims{d.i2, d.i1, d.i3});
    out.slice(0) = x.slice(0).transpose();
    for (Index k = 1; k < d.i3; ++k) out.slice(k) = x.slice(d.i3 - k).transpose();
    return out;
}

/// Neutral element of the t-product: first frontal slice is the n x n
/// identity, all other slices zero.
inline Tensor3 identity_tensor(Index n, Index i3) {
    Tensor3 out(Dims{n, n, i3});
    out.slice(0).setIdentity();
    return out;
}

/// t-SVD factors of a real tensor: x = u * s * v^T with orthogonal u, v and
/// f-diagonal s, plus the Fourier-domain singular values sbar
/// (min(I1,I2) x I3, each column nonincreasing).
struct TSvd {
    Tensor3 u;
    Tensor3 s;
    Tensor3 v;
    Eigen::MatrixXd sbar;
};

namespace detail {

[[noreturn]] inline void svd_failure(Index slice) {
    throw numerical_error("SVD failed to converge on Fourier slice " + std::to_string(slice));
}

}  // namespace detail

/// Fourier-domain singular values of x without materializing the factors.
inline Eigen::MatrixXd fourier_singular_values(const Tensor3& x) {
    const Dims d = x.dims();
    const Index mind = std::min(d.i1, d.i2);
    FTensor3 xf = dft_mode3(x);
    Eigen::MatrixXd sbar(mind, d.i3);
    const Index nh = detail::dft_half_count(d.i3);
    for (Index k = 0; k < nh; ++k) {
        if (detail::self_conjugate_slice(k, d.i3)) {
            Eigen::BDCSVD<Eigen::MatrixXd> svd(xf.slice(k).real());
            if (svd.info() != Eigen::Success) detail::svd_failure(k);
            sbar.col(k) = svd.singularValues();
        } else {
            Eigen::BDCSVD<Eigen::MatrixXcd> svd(xf.slice(k));
            if (svd.info() != Eigen::Success) detail::svd_failure(k);
            sbar.col(k) = svd.singularValues();
        }
    }
    for (Index k = nh; k < d.i3; ++k) sbar.col(k) = sbar.col(d.i3 - k);
    return sbar;
}

/// Full t-SVD. Self-conjugate Fourier slices are decomposed with a real SVD
/// so the factor tensors come back exactly real; the remaining slices are
/// mirrored by conjugation.
inline TSvd tsvd(const Tensor3& x) {
    const Dims d = x.dims();
    const Index mind = std::min(d.i1, d.i2);
    FTensor3 xf = dft_mode3(x);
    FTensor3 uf(Dims{d.i1, d.i1, d.i3});
    FTensor3 sf(Dims{d.i1, d.i2, d.i3});
    FTensor3 vf(Dims{d.i2, d.i2, d.i3});
    Eigen::MatrixXd sbar(mind, d.i3);

    const Index nh = detail::dft_half_count(d.i3);
    for (Index k = 0; k < nh; ++k) {
        sf.slice(k).setZero();
        if (detail::self_conjugate_slice(k, d.i3)) {
            Eigen::BDCSVD<Eigen::MatrixXd> svd(xf.slice(k).real(),
                                               Eigen::ComputeFullU | Eigen::ComputeFullV);
            if (svd.info() != Eigen::Success) detail::svd_failure(k);
            uf.slice(k) = svd.matrixU().cast<std::complex<double>>();
            vf.slice(k) = svd.matrixV().cast<std::complex<double>>();
            sbar.col(k) = svd.singularValues();
        } else {
            Eigen::BDCSVD<Eigen::MatrixXcd> svd(xf.slice(k),
                                                Eigen::ComputeFullU | Eigen::ComputeFullV);
            if (svd.info() != Eigen::Success) detail::svd_failure(k);
            uf.slice(k) = svd.matrixU();
            vf.slice(k) = svd.matrixV();
            sbar.col(k) = svd.singularValues();
        }
        sf.slice(k).diagonal().head(mind) = sbar.col(k).cast<std::complex<double>>();
    }
    for (Index k = nh; k < d.i3; ++k) {
        uf.slice(k) = uf.slice(d.i3 - k).conjugate();
        sf.slice(k) = sf.slice(d.i3 - k);
        vf.slice(k) = vf.slice(d.i3 - k).conjugate();
        sbar.col(k) = sbar.col(d.i3 - k);
    }
    return TSvd{idft_mode3(uf), idft_mode3(sf), idft_mode3(vf), std::move(sbar)};
}

/// Number of nonzero singular tubes, with a threshold relative to the
/// largest Fourier singular value.
inline int tubal_rank(const TSvd& t, double tol = 1e-8) {
    if (tol < 0) throw std::invalid_argument("tubal_rank: tol must be >= 0");
    const double cut = tol * t.sbar.maxCoeff();
    int rank = 0;
    for (Index i = 0; i < t.sbar.rows(); ++i)
        if (t.sbar.row(i).maxCoeff() > cut) ++rank;
    return rank;
}

/// Per-Fourier-slice ranks, using the same relative threshold as tubal_rank
/// (so tubal rank equals the maximum multi-rank entry).
inline std::vector<int> multi_rank(const TSvd& t, double tol = 1e-8) {
    if (tol < 0) throw std::invalid_argument("multi_rank: tol must be >= 0");
    const double cut = tol * t.sbar.maxCoeff();
    std::vector<int> ranks(static_cast<std::size_t>(t.sbar.cols()), 0);
    for (Index k = 0; k < t.sbar.cols(); ++k)
        ranks[static_cast<std::size_t>(k)] = static_cast<int>((t.sbar.col(k).array() > cut).count());
    return ranks;
}

/// Mean of the multi-rank entries.
inline double average_rank(const TSvd& t, double tol = 1e-8) {
    const std::vector<int> mr = multi_rank(t, tol);
    double sum = 0;
    for (int r : mr) sum += r;
    return sum / static_cast<double>(mr.size());
}

inline double tnn_from_sbar(const Eigen::MatrixXd& sbar) {
    return sbar.sum() / static_cast<double>(sbar.cols());
}

/// Tensor nuclear norm: average of the nuclear norms of the Fourier slices.
inline double tnn(const TSvd& t) { return tnn_from_sbar(t.sbar); }

/// Tensor spectral norm: largest Fourier singular value.
inline double spectral_norm(const TSvd& t) { return t.sbar.maxCoeff(); }

inline double ptnn_from_sbar(const Eigen::MatrixXd& sbar, double p, double mu) {
    if (p >= 1.0) throw std::domain_error("ptnn requires p < 1");
    if (mu <= 0.0) throw std::domain_error("ptnn requires mu > 0");
    const ShrinkParams params(p, mu);
    double sum = 0;
    for (Index k = 0; k < sbar.cols(); ++k)
        for (Index i = 0; i < sbar.rows(); ++i) sum += p_shrink(sbar(i, k), params);
    return sum / static_cast<double>(sbar.cols());
}

/// Tensor p-shrinkage nuclear norm: p-shrunk Fourier singular values summed
/// and averaged over slices. Requires p < 1 (the p = 1 soft-threshold regime
/// is the plain tensor nuclear norm).
inline double ptnn(const TSvd& t, double p, double mu) { return ptnn_from_sbar(t.sbar, p, mu); }

/// Tensor generalized singular value thresholding: the closed-form proximal
/// step that applies p-shrinkage with weight tau to the Fourier-domain
/// singular values of z and rebuilds the tensor. For p = 1 this is exactly
/// per-slice singular value soft thresholding at tau.
inline Tensor3 tgsvt(const Tensor3& z, double p, double tau) {
    if (tau <= 0.0) throw std::invalid_argument("tgsvt: tau must be positive");
    if (p > 1.0) throw std::invalid_argument("tgsvt: p must be <= 1");
    const ShrinkParams params(p, tau);
    const Dims d = z.dims();
    FTensor3 zf = dft_mode3(z);
    FTensor3 yf(d);
    const Index nh = detail::dft_half_count(d.i3);
    for (Index k = 0; k < nh; ++k) {
        if (detail::self_conjugate_slice(k, d.i3)) {
            Eigen::BDCSVD<Eigen::MatrixXd> svd(zf.slice(k).real(),
                                               Eigen::ComputeThinU | Eigen::ComputeThinV);
            if (svd.info() != Eigen::Success) detail::svd_failure(k);
            const Eigen::ArrayXd dvals = p_shrink_spectrum(svd.singularValues().array(), params);
            Index r = 0;
            while (r < dvals.size() && dvals[r] > 0.0) ++r;
            if (r == 0)
                yf.slice(k).setZero();
            else
                yf.slice(k) = (svd.matrixU().leftCols(r) * dvals.head(r).matrix().asDiagonal() *
                               svd.matrixV().leftCols(r).transpose())
                                  .cast<std::complex<double>>();
        } else {
            Eigen::BDCSVD<Eigen::MatrixXcd> svd(zf.slice(k),
                                                Eigen::ComputeThinU | Eigen::ComputeThinV);
            if (svd.info() != Eigen::Success) detail::svd_failure(k);
            const Eigen::ArrayXd dvals = p_shrink_spectrum(svd.singularValues().array(), params);
            Index r = 0;
            while (r < dvals.size() && dvals[r] > 0.0) ++r;
            if (r == 0) {
                yf.slice(k).setZero();
            } else {
                const Eigen::VectorXcd dc = dvals.head(r).matrix().cast<std::complex<double>>();
                yf.slice(k).noalias() =
                    svd.matrixU().leftCols(r) * dc.asDiagonal() * svd.matrixV().leftCols(r).adjoint();
            }
        }
    }
    for (Index k = nh; k < d.i3; ++k) yf.slice(k) = yf.slice(d.i3 - k).conjugate();
    return idft_mode3(yf);
}

}  // namespace lrtc

#endif  // LRTC_TALG_HPP
