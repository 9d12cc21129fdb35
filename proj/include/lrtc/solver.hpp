#ifndef LRTC_SOLVER_HPP
#define LRTC_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lrtc/data.hpp"
#include "lrtc/talg.hpp"
#include "lrtc/tensor.hpp"

namespace lrtc {

/// Hyperparameters of the completion solver. lambda = 0 requests the
/// data-adapted default beta0 * smax^(2-p), smax being the largest Fourier
/// singular value of the observation; it places the first shrinkage
/// zero-crossing at the top of the observed spectrum, so the threshold
/// schedule lambda/beta^t sweeps the whole spectrum as beta grows.
struct SolverConfig {
    double p = -1.0;
    double lambda = 0.0;
    double mu = 1.0;  // weight of the norm's own p-shrinkage (objective only)
    double beta0 = 0.01;
    double beta_max = 1e5;
    double eta = 1.1;
    double gamma0 = 0.1;
    double rho = 2.0;
    int max_iters = 1000;
    double tol = 1e-4;

    void validate() const {
        const bool finite = std::isfinite(p) && std::isfinite(lambda) && std::isfinite(mu) &&
                            std::isfinite(beta0) && std::isfinite(beta_max) && std::isfinite(eta) &&
                            std::isfinite(gamma0) && std::isfinite(rho) && std::isfinite(tol);
        if (!finite) throw std::invalid_argument("solver config values must be finite");
        if (p > 1.0) throw std::invalid_argument("solver requires p <= 1");
        if (lambda < 0.0) throw std::invalid_argument("lambda must be positive (or 0 for the default)");
        if (mu <= 0.0) throw std::invalid_argument("mu must be positive");
        if (beta0 <= 0.0) throw std::invalid_argument("beta0 must be positive");
        if (beta_max < beta0) throw std::invalid_argument("beta_max must be >= beta0");
        if (eta <= 1.0) throw std::invalid_argument("eta must be > 1");
        if (gamma0 <= 0.0 || gamma0 > 1.0) throw std::invalid_argument("gamma0 must be in (0, 1]");
        if (rho <= 1.0) throw std::invalid_argument("rho must be > 1");
        if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
        if (tol <= 0.0) throw std::invalid_argument("tol must be positive");
    }
};

/// cfg.lambda when set, otherwise the data-adapted default
/// beta0 * smax(obs)^(2-p).
inline double resolve_lambda(const SolverConfig& cfg, const Tensor3& obs) {
    if (cfg.lambda > 0.0) return cfg.lambda;
    const double smax = fourier_singular_values(obs).maxCoeff();
    if (smax == 0.0) return cfg.beta0;
    return cfg.beta0 * std::pow(smax, 2.0 - cfg.p);
}

/// Iterates and work tensors of one solve. After iteration t the state holds
/// x = X^{t+1}, x_prev = X^t, the momentum candidate q and accepted point w
/// of that iteration, and the beta/gamma that were in effect.
struct SolverState {
    Tensor3 x_prev;
    Tensor3 x;
    Tensor3 y;
    Tensor3 z;
    Tensor3 w;
    Tensor3 q;
    double beta = 0.0;
    double gamma = 0.0;
    int iter = 0;
};

struct TraceRow {
    int iter;
    double f_value;
    double step_norm;
    double rel_change;  // -1 while ||X^t|| is zero and the ratio is undefined
    double gamma;
    double beta;
    bool momentum_accepted;
};

struct SolverTrace {
    std::vector<TraceRow> rows;
    bool converged = false;
    int iterations = 0;
};

struct SolveResult {
    Tensor3 x;
    SolverTrace trace;
};

namespace detail {

/// F(x) = 0.5*||P_Omega(x - obs)||_F^2 + lambda*||x||_p evaluated with the
/// given norm weight mu (p = 1 falls back to the tensor nuclear norm).
inline double objective_mu(const Tensor3& x, const Tensor3& obs, const SamplingMask& mask,
                           double p, double lambda, double mu) {
    double data = 0.0;
    for (std::uint64_t idx : mask.observed()) {
        const double d = x.data()[idx] - obs.data()[idx];
        data += d * d;
    }
    const Eigen::MatrixXd sbar = fourier_singular_values(x);
    const double norm = p == 1.0 ? tnn_from_sbar(sbar) : ptnn_from_sbar(sbar, p, mu);
    return 0.5 * data + lambda * norm;
}

inline Tensor3 extrapolate(const Tensor3& x, const Tensor3& x_prev, double gamma) {
    Tensor3 q(x.dims());
    q.flat() = x.flat() + gamma * (x.flat() - x_prev.flat());
    return q;
}

}  // namespace detail

/// The completion objective F(x), evaluated with cfg.mu as the norm weight
/// (p = 1 uses the plain tensor nuclear norm).
inline double objective(const Tensor3& x, const Tensor3& obs, const SamplingMask& mask,
                        const SolverConfig& cfg) {
    cfg.validate();
    check_same_dims(x, obs, "objective");
    const double lambda = resolve_lambda(cfg, obs);
    return detail::objective_mu(x, obs, mask, cfg.p, lambda, cfg.mu);
}

/// Proximal step of the norm term: t-GSVT of w - z/beta at threshold
/// lambda/beta.
inline Tensor3 update_Y(const Tensor3& w, const Tensor3& z, double beta, const SolverConfig& cfg) {
    if (beta <= 0.0) throw std::invalid_argument("update_Y: beta must be positive");
    if (cfg.lambda <= 0.0)
        throw std::invalid_argument("update_Y needs an explicit lambda (the default is resolved "
                                    "against the observation, which this step never sees)");
    check_same_dims(w, z, "update_Y");
    Tensor3 arg(w.dims());
    arg.flat() = w.flat() - z.flat() / beta;
    return tgsvt(arg, cfg.p, cfg.lambda / beta);
}

/// Data step: y + z/beta on the unobserved set, the observation itself on
/// the observed set (plain assignment, no arithmetic on observed entries).
inline Tensor3 update_X(const Tensor3& y, const Tensor3& z, double beta, const Tensor3& obs,
                        const SamplingMask& mask) {
    if (beta <= 0.0) throw std::invalid_argument("update_X: beta must be positive");
    check_same_dims(y, z, "update_X");
    check_same_dims(y, obs, "update_X");
    Tensor3 out(y.dims());
    out.flat() = y.flat() + z.flat() / beta;
    mask.assign_observed(out, obs);
    return out;
}

/// Multiplier step z + beta*(y - x).
inline Tensor3 update_Z(const Tensor3& z, const Tensor3& y, const Tensor3& x, double beta) {
    check_same_dims(z, y, "update_Z");
    check_same_dims(z, x, "update_Z");
    Tensor3 out(z.dims());
    out.flat() = z.flat() + beta * (y.flat() - x.flat());
    return out;
}

struct MomentumDecision {
    Tensor3 w;
    double gamma_next;
    bool accepted;
};

/// Adaptive-momentum test: extrapolate q = x + gamma*(x - x_prev); accept it
/// as the proximal anchor when it does not increase the objective, growing
/// gamma (capped at 1) on acceptance and dividing it by rho on rejection.
inline MomentumDecision momentum_step(const SolverState& state, const Tensor3& obs,
                                      const SamplingMask& mask, const SolverConfig& cfg) {
    const double lambda = resolve_lambda(cfg, obs);
    Tensor3 q = detail::extrapolate(state.x, state.x_prev, state.gamma);
    const double f_q = detail::objective_mu(q, obs, mask, cfg.p, lambda, cfg.mu);
    const double f_x = detail::objective_mu(state.x, obs, mask, cfg.p, lambda, cfg.mu);
    if (f_q <= f_x)
        return {std::move(q), std::min(1.0, cfg.rho * state.gamma), true};
    return {state.x, state.gamma / cfg.rho, false};
}

/// Runs the accelerated ADMM loop until the relative iterate change falls
/// below cfg.tol or max_iters is exhausted. Deterministic for identical
/// inputs. The optional observer sees the state after every iteration.
inline SolveResult solve(const Tensor3& obs, const SamplingMask& mask, const SolverConfig& config,
                         const std::function<void(const SolverState&)>& observer = {}) {
    config.validate();
    if (!(obs.dims() == mask.dims()))
        throw dimension_error("solve: mask dims " + mask.dims().str() + " vs observation " +
                              obs.dims().str());
    SolverConfig cfg = config;
    cfg.lambda = resolve_lambda(config, obs);
    const double lambda = cfg.lambda;

    SolverState st;
    st.x_prev = Tensor3(obs.dims());
    st.x = Tensor3(obs.dims());
    st.y = Tensor3(obs.dims());
    st.z = Tensor3(obs.dims());
    st.beta = cfg.beta0;
    st.gamma = cfg.gamma0;

    SolverTrace trace;
    trace.rows.reserve(static_cast<std::size_t>(std::min(cfg.max_iters, 4096)));

    // cached F(X^t), reused by the next momentum test
    double f_x = detail::objective_mu(st.x, obs, mask, cfg.p, lambda, cfg.mu);

    for (int t = 0; t < cfg.max_iters; ++t) {
        st.iter = t;
        const double beta_t = st.beta;
        const double gamma_t = st.gamma;

        st.q = detail::extrapolate(st.x, st.x_prev, gamma_t);
        const double f_q = detail::objective_mu(st.q, obs, mask, cfg.p, lambda, cfg.mu);
        bool accepted;
        double gamma_next;
        if (f_q <= f_x) {
            st.w = st.q;
            gamma_next = std::min(1.0, cfg.rho * gamma_t);
            accepted = true;
        } else {
            st.w = st.x;
            gamma_next = gamma_t / cfg.rho;
            accepted = false;
        }

        Tensor3 y = update_Y(st.w, st.z, beta_t, cfg);
        Tensor3 x_next = update_X(y, st.z, beta_t, obs, mask);
        st.z = update_Z(st.z, y, x_next, beta_t);
        st.y = std::move(y);

        const double step = std::sqrt((x_next.flat() - st.x.flat()).square().sum());
        const double denom = st.x.frobenius_norm();
        const double rel = denom > 0.0 ? step / denom : -1.0;

        st.x_prev = std::move(st.x);
        st.x = std::move(x_next);

        const double beta_next = std::min(cfg.eta * beta_t, cfg.beta_max);
        f_x = detail::objective_mu(st.x, obs, mask, cfg.p, lambda, cfg.mu);

        trace.rows.push_back({t, f_x, step, rel, gamma_t, beta_t, accepted});
        trace.iterations = t + 1;
        if (observer) observer(st);

        st.beta = beta_next;
        st.gamma = gamma_next;

        if (rel >= 0.0 && rel <= cfg.tol) {
            trace.converged = true;
            break;
        }
    }
    return {std::move(st.x), std::move(trace)};
}

}  // namespace lrtc

#endif  // LRTC_SOLVER_HPP
