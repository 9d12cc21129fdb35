#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "lrtc/metrics.hpp"
#include "lrtc/solver.hpp"

using namespace lrtc;

namespace {

Tensor3 scalar_tensor(double v) {
    Tensor3 t(1, 1, 1);
    t(0, 0, 0) = v;
    return t;
}

SamplingMask full_mask(Dims d) {
    std::vector<std::uint64_t> all(static_cast<std::size_t>(d.count()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return SamplingMask(d, std::move(all));
}

}  // namespace

TEST_CASE("solver config validation") {
    SolverConfig cfg;
    REQUIRE_NOTHROW(cfg.validate());
    SolverConfig bad = cfg;
    bad.p = 1.5;
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.eta = 1.0;
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.gamma0 = 0.0;
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.rho = 0.5;
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.tol = 0.0;
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("objective") {
    SECTION("zero everything gives zero") {
        Dims d{2, 2, 2};
        SamplingMask mask = gen_mask(d, 0.5, RngSeed{1});
        SolverConfig cfg;
        cfg.lambda = 1.0;
        REQUIRE(objective(Tensor3(d), Tensor3(d), mask, cfg) == 0.0);
    }
    SECTION("zero x against nonzero observation leaves the data term") {
        Dims d{3, 3, 2};
        Tensor3 truth = gen_gaussian(d, RngSeed{2});
        SamplingMask mask = gen_mask(d, 0.6, RngSeed{3});
        Tensor3 obs = mask.project(truth);
        SolverConfig cfg;
        cfg.lambda = 1.0;
        const double expect = 0.5 * obs.frobenius_norm() * obs.frobenius_norm();
        REQUIRE(objective(Tensor3(d), obs, mask, cfg) == Approx(expect));
    }
    SECTION("1x1x1 fully observed hand value") {
        // x = [2], obs = [1], p = -1, lambda = 1, mu = lambda/beta0 = 1
        SolverConfig cfg;
        cfg.p = -1.0;
        cfg.lambda = 1.0;
        cfg.beta0 = 1.0;
        SamplingMask mask = full_mask({1, 1, 1});
        const double f = objective(scalar_tensor(2.0), scalar_tensor(1.0), mask, cfg);
        REQUIRE(f == Approx(0.5 + (2.0 - 0.25)));
    }
    SECTION("dimension mismatch") {
        SolverConfig cfg;
        SamplingMask mask = full_mask({1, 1, 1});
        REQUIRE_THROWS_AS(objective(Tensor3(2, 1, 1), scalar_tensor(0.0), mask, cfg),
                          dimension_error);
    }
}

TEST_CASE("update_Y") {
    SECTION("large threshold zeroes the tensor at p = 1") {
        Tensor3 w = gen_gaussian({4, 4, 3}, RngSeed{4});
        SolverConfig cfg;
        cfg.p = 1.0;
        cfg.lambda = fourier_singular_values(w).maxCoeff() * 2.0;
        Tensor3 y = update_Y(w, Tensor3(w.dims()), 1.0, cfg);
        REQUIRE(y.frobenius_norm() == 0.0);
    }
    SECTION("scalar soft threshold: w = [5], lambda/beta = 1 gives [4]") {
        SolverConfig cfg;
        cfg.p = 1.0;
        cfg.lambda = 1.0;
        Tensor3 y = update_Y(scalar_tensor(5.0), scalar_tensor(0.0), 1.0, cfg);
        REQUIRE(y(0, 0, 0) == Approx(4.0));
    }
    SECTION("scalar p-shrink: w = [3], p = -1, lambda/beta = 1 gives 26/9") {
        SolverConfig cfg;
        cfg.p = -1.0;
        cfg.lambda = 1.0;
        Tensor3 y = update_Y(scalar_tensor(3.0), scalar_tensor(0.0), 1.0, cfg);
        REQUIRE(y(0, 0, 0) == Approx(26.0 / 9.0));
    }
    SECTION("p = 1 path equals the per-slice soft-threshold oracle") {
        Tensor3 w = gen_gaussian({8, 8, 4}, RngSeed{5});
        Tensor3 z = gen_gaussian({8, 8, 4}, RngSeed{6});
        SolverConfig cfg;
        cfg.p = 1.0;
        cfg.lambda = 3.0;
        const double beta = 1.7;
        Tensor3 fast = update_Y(w, z, beta, cfg);
        Tensor3 arg(w.dims());
        arg.flat() = w.flat() - z.flat() / beta;
        Tensor3 slow = oracles::naive_soft_threshold(arg, cfg.lambda / beta);
        REQUIRE(std::sqrt((fast.flat() - slow.flat()).square().sum()) <= 1e-8);
    }
    SECTION("auto lambda is rejected here") {
        SolverConfig cfg;  // lambda = 0
        REQUIRE_THROWS_AS(update_Y(scalar_tensor(1.0), scalar_tensor(0.0), 1.0, cfg),
                          std::invalid_argument);
    }
}

TEST_CASE("update_X") {
    Dims d{5, 4, 3};
    Tensor3 y = gen_gaussian(d, RngSeed{7});
    Tensor3 z = gen_gaussian(d, RngSeed{8});
    SECTION("full observation returns the observation bitwise") {
        Tensor3 obs = gen_gaussian(d, RngSeed{9});
        Tensor3 x = update_X(y, z, 2.0, obs, full_mask(d));
        REQUIRE(x == obs);
    }
    SECTION("random mask splits into assignment and y + z/beta") {
        SamplingMask mask = gen_mask(d, 0.4, RngSeed{10});
        Tensor3 truth = gen_gaussian(d, RngSeed{11});
        Tensor3 obs = mask.project(truth);
        const double beta = 2.5;
        Tensor3 x = update_X(y, z, beta, obs, mask);
        std::vector<bool> observed(static_cast<std::size_t>(d.count()), false);
        for (std::uint64_t idx : mask.observed()) observed[idx] = true;
        for (Index i = 0; i < x.size(); ++i) {
            if (observed[static_cast<std::size_t>(i)]) {
                REQUIRE(x.data()[i] == obs.data()[i]);  // exact assignment
            } else {
                REQUIRE(x.data()[i] == Approx(y.data()[i] + z.data()[i] / beta).margin(1e-15));
            }
        }
    }
    SECTION("one observed entry leaves the rest at y + z/beta") {
        SamplingMask mask(d, {7});
        Tensor3 obs(d);
        obs.data()[7] = 3.25;
        Tensor3 x = update_X(y, z, 4.0, obs, mask);
        REQUIRE(x.data()[7] == 3.25);
        REQUIRE(x.data()[0] == Approx(y.data()[0] + z.data()[0] / 4.0));
    }
}

TEST_CASE("update_Z") {
    SECTION("y = x leaves the multiplier unchanged") {
        Tensor3 y = gen_gaussian({3, 3, 2}, RngSeed{12});
        Tensor3 z = gen_gaussian({3, 3, 2}, RngSeed{13});
        Tensor3 out = update_Z(z, y, y, 3.0);
        REQUIRE(out == z);
    }
    SECTION("zero multiplier with beta 1 gives y - x") {
        Tensor3 y = gen_gaussian({2, 2, 2}, RngSeed{14});
        Tensor3 x = gen_gaussian({2, 2, 2}, RngSeed{15});
        Tensor3 out = update_Z(Tensor3(y.dims()), y, x, 1.0);
        for (Index i = 0; i < out.size(); ++i)
            REQUIRE(out.data()[i] == Approx(y.data()[i] - x.data()[i]));
    }
    SECTION("scalar arithmetic") {
        Tensor3 out = update_Z(scalar_tensor(1.0), scalar_tensor(3.0), scalar_tensor(1.0), 2.0);
        REQUIRE(out(0, 0, 0) == Approx(5.0));
    }
}

TEST_CASE("momentum_step") {
    SamplingMask mask = full_mask({1, 1, 1});
    Tensor3 obs = scalar_tensor(1.0);
    SolverConfig cfg;
    cfg.p = -1.0;
    cfg.lambda = 1.0;
    cfg.beta0 = 1.0;
    SolverState st;
    st.x = scalar_tensor(1.0);
    st.y = st.z = Tensor3(1, 1, 1);
    st.beta = 1.0;

    SECTION("zero extrapolation is always accepted and grows gamma") {
        st.x_prev = st.x;
        st.gamma = 0.1;
        MomentumDecision dec = momentum_step(st, obs, mask, cfg);
        REQUIRE(dec.accepted);
        REQUIRE(dec.w == st.x);
        REQUIRE(dec.gamma_next == Approx(0.2));
    }
    SECTION("gamma is capped at 1") {
        st.x_prev = st.x;
        st.gamma = 1.0;
        MomentumDecision dec = momentum_step(st, obs, mask, cfg);
        REQUIRE(dec.accepted);
        REQUIRE(dec.gamma_next == 1.0);
    }
    SECTION("rejected extrapolation halves gamma with rho = 2") {
        st.x_prev = scalar_tensor(3.0);  // Q = 1 + 0.1*(1-3) = 0.8, worse data fit
        st.gamma = 0.1;
        MomentumDecision dec = momentum_step(st, obs, mask, cfg);
        REQUIRE_FALSE(dec.accepted);
        REQUIRE(dec.w == st.x);
        REQUIRE(dec.gamma_next == Approx(0.05));
    }
}

TEST_CASE("solve on a fully observed tensor returns it after two iterations") {
    Dims d{6, 5, 4};
    Tensor3 truth = gen_gaussian(d, RngSeed{16});
    SolveResult res = solve(truth, full_mask(d), SolverConfig{});
    REQUIRE(res.trace.converged);
    REQUIRE(res.trace.iterations <= 2);
    REQUIRE(res.x == truth);
}

TEST_CASE("solve recovers a small low-tubal-rank instance") {
    Dims d{20, 20, 5};
    Tensor3 truth = gen_lowrank(d, 2, RngSeed{17});
    SamplingMask mask = gen_mask(d, 0.6, RngSeed{18});
    Tensor3 obs = mask.project(truth);

    std::vector<bool> fidelity_ok;
    std::vector<bool> flags_expected;
    SolverConfig cfg;
    SolveResult res = solve(obs, mask, cfg, [&](const SolverState& st) {
        fidelity_ok.push_back(mask.matches_observed(st.x, obs));
        // recompute the momentum comparison F(Q^t) <= F(X^t)
        const double lambda = resolve_lambda(cfg, obs);
        const double f_q = detail::objective_mu(st.q, obs, mask, cfg.p, lambda, cfg.mu);
        const double f_x = detail::objective_mu(st.x_prev, obs, mask, cfg.p, lambda, cfg.mu);
        flags_expected.push_back(f_q <= f_x);
    });

    REQUIRE(res.trace.converged);
    REQUIRE(rse(truth, res.x) <= 1e-2);
    for (bool ok : fidelity_ok) REQUIRE(ok);
    REQUIRE(flags_expected.size() == res.trace.rows.size());
    for (std::size_t i = 0; i < flags_expected.size(); ++i)
        REQUIRE(res.trace.rows[i].momentum_accepted == flags_expected[i]);

    SECTION("trace bookkeeping") {
        REQUIRE(res.trace.rows.front().rel_change == -1.0);  // ||X^0|| = 0
        REQUIRE(res.trace.rows.front().beta == Approx(cfg.beta0));
        REQUIRE(res.trace.rows.back().rel_change <= cfg.tol);
        for (const TraceRow& row : res.trace.rows) {
            REQUIRE(std::isfinite(row.f_value));
            REQUIRE(row.step_norm >= 0.0);
        }
    }
    SECTION("deterministic rerun") {
        SolveResult again = solve(obs, mask, cfg);
        REQUIRE(again.x == res.x);
        REQUIRE(again.trace.rows.size() == res.trace.rows.size());
        for (std::size_t i = 0; i < again.trace.rows.size(); ++i) {
            REQUIRE(again.trace.rows[i].f_value == res.trace.rows[i].f_value);
            REQUIRE(again.trace.rows[i].step_norm == res.trace.rows[i].step_norm);
        }
    }
    SECTION("steps have vanished by the end of a converged run") {
        const double bound = 10.0 * cfg.tol * res.x.frobenius_norm();
        const std::size_t n = res.trace.rows.size();
        for (std::size_t i = n >= 10 ? n - 10 : 0; i < n; ++i)
            REQUIRE(res.trace.rows[i].step_norm <= bound);
    }
}

TEST_CASE("solve reports non-convergence via the trace") {
    Dims d{10, 10, 3};
    Tensor3 truth = gen_lowrank(d, 2, RngSeed{19});
    SamplingMask mask = gen_mask(d, 0.5, RngSeed{20});
    SolverConfig cfg;
    cfg.max_iters = 3;
    SolveResult res = solve(mask.project(truth), mask, cfg);
    REQUIRE_FALSE(res.trace.converged);
    REQUIRE(res.trace.iterations == 3);
}

TEST_CASE("solve rejects mismatched mask dims") {
    Tensor3 obs(2, 2, 2);
    SamplingMask mask = gen_mask({2, 2, 3}, 0.5, RngSeed{21});
    REQUIRE_THROWS_AS(solve(obs, mask, SolverConfig{}), dimension_error);
}
