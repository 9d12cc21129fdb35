#ifndef LRTC_EXPERIMENTS_HPP
#define LRTC_EXPERIMENTS_HPP

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "lrtc/data.hpp"
#include "lrtc/metrics.hpp"
#include "lrtc/solver.hpp"

namespace lrtc {

/// PSNR level that counts as a successful recovery in the phase diagram.
inline constexpr double kPhaseSuccessPsnrDb = 32.0;

/// Axes and harness settings of one sweep command. Sweep axes left empty are
/// filled with the command's defaults (desk scale, or the published grids
/// under paper_scale).
struct ExperimentSpec {
    Dims dims{0, 0, 0};
    std::vector<Index> ranks;
    std::vector<double> sampling_rates;
    std::vector<double> p_values;
    int trials = 3;
    std::uint64_t base_seed = 1;
    SolverConfig cfg;
    bool paper_scale = false;
    int jobs = 0;  // 0 = hardware concurrency
    std::string out_path;
    std::string trace_path;
};

/// One completed solve inside a sweep.
struct RunRecord {
    Dims dims;
    Index rank;
    double sr;
    double p;
    int trial;
    std::uint64_t tensor_seed;
    std::uint64_t mask_seed;
    int iterations;
    bool converged;
    double rse;
    double psnr;
    bool success;
    double wall_s;
};

/// Per-cell aggregate over trials, in grid order.
struct CellSummary {
    Dims dims;
    Index rank;
    double sr;
    double p;
    double mean_rse;
    double mean_psnr;
    double success_fraction;
    double mean_iterations;
};

struct SweepResult {
    std::vector<RunRecord> runs;
    std::vector<CellSummary> cells;
};

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::string fmt(std::uint64_t v) { return std::to_string(v); }
inline std::string fmt(Index v) { return std::to_string(v); }
inline std::string fmt(int v) { return std::to_string(v); }
inline std::string fmt(bool v) { return v ? "1" : "0"; }

/// Runs fn(0..n-1) on a small worker pool; the first exception wins and is
/// rethrown after all workers drain.
template <typename Fn>
inline void parallel_jobs(std::size_t n, int jobs, Fn&& fn) {
    if (n == 0) return;
    unsigned workers = jobs > 0 ? static_cast<unsigned>(jobs) : std::thread::hardware_concurrency();
    workers = std::min<unsigned>(std::max(1u, workers), static_cast<unsigned>(n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

struct SweepCellSpec {
    Dims dims;
    Index rank;
    double sr;
    double p;
};

inline const char* kSweepHeader =
    "row,i1,i2,i3,rank,sr,p,trial,tensor_seed,mask_seed,iterations,converged,rse,psnr,success,"
    "wall_s";

inline std::string sweep_run_row(const RunRecord& r) {
    return std::string("run,") + fmt(r.dims.i1) + "," + fmt(r.dims.i2) + "," + fmt(r.dims.i3) +
           "," + fmt(r.rank) + "," + fmt(r.sr) + "," + fmt(r.p) + "," + fmt(r.trial) + "," +
           fmt(r.tensor_seed) + "," + fmt(r.mask_seed) + "," + fmt(r.iterations) + "," +
           fmt(r.converged) + "," + fmt(r.rse) + "," + fmt(r.psnr) + "," + fmt(r.success) + "," +
           fmt(r.wall_s);
}

inline std::string sweep_mean_row(const CellSummary& c) {
    return std::string("mean,") + fmt(c.dims.i1) + "," + fmt(c.dims.i2) + "," + fmt(c.dims.i3) +
           "," + fmt(c.rank) + "," + fmt(c.sr) + "," + fmt(c.p) + ",-1,0,0," +
           fmt(c.mean_iterations) + ",," + fmt(c.mean_rse) + "," + fmt(c.mean_psnr) + "," +
           fmt(c.success_fraction) + ",";
}

inline void write_sweep_csv(const std::string& path, const SweepResult& result) {
    if (path.empty()) return;
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw io_error("cannot open for writing: " + path);
    os << kSweepHeader << "\n";
    for (const RunRecord& r : result.runs) os << sweep_run_row(r) << "\n";
    for (const CellSummary& c : result.cells) os << sweep_mean_row(c) << "\n";
    os.flush();
    if (!os) throw io_error("write failed: " + path);
}

inline const char* kTraceHeader = "cell,trial,iter,f_value,step_norm,rel_change,gamma,beta,accepted";

inline void append_trace_rows(std::string& out, std::size_t cell, int trial,
                              const SolverTrace& trace) {
    for (const TraceRow& row : trace.rows) {
        out += fmt(static_cast<std::uint64_t>(cell));
        out += ",";
        out += fmt(trial);
        out += ",";
        out += fmt(row.iter);
        out += ",";
        out += fmt(row.f_value);
        out += ",";
        out += fmt(row.step_norm);
        out += ",";
        out += fmt(row.rel_change);
        out += ",";
        out += fmt(row.gamma);
        out += ",";
        out += fmt(row.beta);
        out += ",";
        out += fmt(row.momentum_accepted);
        out += "\n";
    }
}

/// Shared engine: one job per (cell, trial), parallel over jobs, records and
/// cell means gathered in grid order.
inline SweepResult run_sweep(const std::vector<SweepCellSpec>& cells, const ExperimentSpec& spec) {
    spec.cfg.validate();
    if (spec.trials < 1) throw std::invalid_argument("trials must be >= 1");
    const std::size_t n_jobs = cells.size() * static_cast<std::size_t>(spec.trials);
    std::vector<RunRecord> runs(n_jobs);
    std::vector<std::string> traces(spec.trace_path.empty() ? 0 : n_jobs);

    parallel_jobs(n_jobs, spec.jobs, [&](std::size_t job) {
        const std::size_t cell = job / static_cast<std::size_t>(spec.trials);
        const int trial = static_cast<int>(job % static_cast<std::size_t>(spec.trials));
        const SweepCellSpec& cs = cells[cell];
        const RngSeed tensor_seed = derive_seed(RngSeed{spec.base_seed}, 2 * job);
        const RngSeed mask_seed = derive_seed(RngSeed{spec.base_seed}, 2 * job + 1);

        const Tensor3 truth = gen_lowrank(cs.dims, cs.rank, tensor_seed);
        const SamplingMask mask = gen_mask(cs.dims, cs.sr, mask_seed);
        const Tensor3 obs = mask.project(truth);
        SolverConfig cfg = spec.cfg;
        cfg.p = cs.p;

        const auto t0 = std::chrono::steady_clock::now();
        SolveResult sol = solve(obs, mask, cfg);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        RunRecord rec;
        rec.dims = cs.dims;
        rec.rank = cs.rank;
        rec.sr = cs.sr;
        rec.p = cs.p;
        rec.trial = trial;
        rec.tensor_seed = tensor_seed.value;
        rec.mask_seed = mask_seed.value;
        rec.iterations = sol.trace.iterations;
        rec.converged = sol.trace.converged;
        rec.rse = rse(truth, sol.x);
        rec.psnr = psnr(truth, sol.x);
        rec.success = rec.psnr > kPhaseSuccessPsnrDb;
        rec.wall_s = wall;
        runs[job] = rec;
        if (!traces.empty()) append_trace_rows(traces[job], cell, trial, sol.trace);
    });

    SweepResult result;
    result.runs = std::move(runs);
    result.cells.reserve(cells.size());
    for (std::size_t cell = 0; cell < cells.size(); ++cell) {
        CellSummary sum;
        sum.dims = cells[cell].dims;
        sum.rank = cells[cell].rank;
        sum.sr = cells[cell].sr;
        sum.p = cells[cell].p;
        sum.mean_rse = sum.mean_psnr = sum.success_fraction = sum.mean_iterations = 0.0;
        for (int trial = 0; trial < spec.trials; ++trial) {
            const RunRecord& r = result.runs[cell * spec.trials + trial];
            sum.mean_rse += r.rse;
            sum.mean_psnr += r.psnr;
            sum.success_fraction += r.success ? 1.0 : 0.0;
            sum.mean_iterations += r.iterations;
        }
        const double n = spec.trials;
        sum.mean_rse /= n;
        sum.mean_psnr /= n;
        sum.success_fraction /= n;
        sum.mean_iterations /= n;
        result.cells.push_back(sum);
    }

    write_sweep_csv(spec.out_path, result);
    if (!spec.trace_path.empty()) {
        std::ofstream os(spec.trace_path, std::ios::trunc);
        if (!os) throw io_error("cannot open for writing: " + spec.trace_path);
        os << kTraceHeader << "\n";
        for (const std::string& t : traces) os << t;
        os.flush();
        if (!os) throw io_error("write failed: " + spec.trace_path);
    }
    return result;
}

}  // namespace detail

/// 0.05, 0.10, ..., 0.50 — the sampling-rate axis shared by the sweeps.
inline std::vector<double> default_sr_grid() {
    std::vector<double> srs;
    for (int i = 1; i <= 10; ++i) srs.push_back(0.05 * i);
    return srs;
}

/// -2.0, -1.9, ..., 0.9 — the 30-point p axis of the p sweep.
inline std::vector<double> default_p_grid() {
    std::vector<double> ps;
    for (int i = 0; i < 30; ++i) ps.push_back((i - 20) / 10.0);
    return ps;
}

/// Recovery vs p on one fixed instance: p defaults to the grid
/// -2.0,-1.9,...,0.9 (30 values); instance defaults to 50x50x10 rank 3
/// sr 0.2, or 100x100x20 rank 5 under paper_scale.
inline SweepResult run_p_sweep(ExperimentSpec spec) {
    if (spec.p_values.empty()) spec.p_values = default_p_grid();
    if (spec.dims.count() == 0) spec.dims = spec.paper_scale ? Dims{100, 100, 20} : Dims{50, 50, 10};
    if (spec.ranks.empty()) spec.ranks = {spec.paper_scale ? Index{5} : Index{3}};
    if (spec.sampling_rates.empty()) spec.sampling_rates = {0.2};
    std::vector<detail::SweepCellSpec> cells;
    for (double p : spec.p_values)
        cells.push_back({spec.dims, spec.ranks.front(), spec.sampling_rates.front(), p});
    return detail::run_sweep(cells, spec);
}

/// Recovery vs sampling rate for cubic tensors of growing size n x n x n;
/// n defaults to 25,50,75,100 (50..200 under paper_scale).
inline SweepResult run_size_sweep(ExperimentSpec spec) {
    std::vector<Index> sizes;
    if (spec.dims.count() != 0) {
        sizes = {spec.dims.i1};
    } else {
        sizes = spec.paper_scale ? std::vector<Index>{50, 100, 150, 200}
                                 : std::vector<Index>{25, 50, 75, 100};
    }
    if (spec.ranks.empty()) spec.ranks = {spec.paper_scale ? Index{5} : Index{3}};
    if (spec.sampling_rates.empty()) spec.sampling_rates = default_sr_grid();
    const double p = spec.p_values.empty() ? spec.cfg.p : spec.p_values.front();
    std::vector<detail::SweepCellSpec> cells;
    for (Index n : sizes)
        for (double sr : spec.sampling_rates) cells.push_back({Dims{n, n, n}, spec.ranks.front(), sr, p});
    return detail::run_sweep(cells, spec);
}

/// Recovery vs sampling rate for I x I x I3 tensors of growing depth I3;
/// defaults I=50, I3 in 10..50 (I=100, I3 in 20..100 under paper_scale).
inline SweepResult run_depth_sweep(ExperimentSpec spec) {
    Index side = spec.paper_scale ? 100 : 50;
    std::vector<Index> depths = spec.paper_scale ? std::vector<Index>{20, 40, 60, 80, 100}
                                                 : std::vector<Index>{10, 20, 30, 40, 50};
    if (spec.dims.count() != 0) {
        side = spec.dims.i1;
        depths = {spec.dims.i3};
    }
    if (spec.ranks.empty()) spec.ranks = {spec.paper_scale ? Index{5} : Index{3}};
    if (spec.sampling_rates.empty()) spec.sampling_rates = default_sr_grid();
    const double p = spec.p_values.empty() ? spec.cfg.p : spec.p_values.front();
    std::vector<detail::SweepCellSpec> cells;
    for (Index i3 : depths)
        for (double sr : spec.sampling_rates) cells.push_back({Dims{side, side, i3}, spec.ranks.front(), sr, p});
    return detail::run_sweep(cells, spec);
}

/// Success-fraction grid over (tubal rank, sampling rate) with success
/// defined as PSNR above kPhaseSuccessPsnrDb. Desk default: 50x50x10 over a
/// 6x6 grid; paper_scale: 100x100x20, ranks 10..40, sr 0.05..0.5.
inline SweepResult run_phase_diagram(ExperimentSpec spec) {
    if (spec.dims.count() == 0) spec.dims = spec.paper_scale ? Dims{100, 100, 20} : Dims{50, 50, 10};
    if (spec.ranks.empty())
        spec.ranks = spec.paper_scale ? std::vector<Index>{10, 16, 22, 28, 34, 40}
                                      : std::vector<Index>{2, 10, 17, 25, 32, 40};
    if (spec.sampling_rates.empty())
        spec.sampling_rates = spec.paper_scale ? default_sr_grid()
                                               : std::vector<double>{0.05, 0.14, 0.23, 0.32, 0.41, 0.5};
    const double p = spec.p_values.empty() ? spec.cfg.p : spec.p_values.front();
    std::vector<detail::SweepCellSpec> cells;
    for (Index r : spec.ranks)
        for (double sr : spec.sampling_rates) cells.push_back({spec.dims, r, sr, p});
    return detail::run_sweep(cells, spec);
}

// ---------------------------------------------------------------------------
// Single completion runs on stored tensors or images.
// ---------------------------------------------------------------------------

struct CompleteArgs {
    std::string input_path;
    std::string mask_path;  // read mask from file; otherwise sampled from sr/seed
    double sr = 0.0;
    std::uint64_t seed = 1;
    bool input_is_observation = false;  // input already has unobserved entries zeroed
    SolverConfig cfg;
    std::string recovered_tensor_path;
    std::string recovered_image_path;  // only used for image inputs
    std::string out_path;              // CSV; empty writes the row to stdout
    std::string trace_path;
};

struct CompleteResult {
    Tensor3 recovered;
    SolverTrace trace;
    std::optional<MetricReport> metrics;
    bool was_image;
    double wall_s;
};

namespace detail {

inline bool sniff_image(const std::string& path) {
    std::ifstream is = open_in(path);
    char b[2] = {0, 0};
    is.read(b, 2);
    return b[0] == 'P' && b[1] == '6';
}

inline const char* kCompleteHeader =
    "input,i1,i2,i3,sr,p,lambda,beta0,beta_max,eta,gamma0,rho,max_iters,tol,seed,iterations,"
    "converged,rse,psnr,ssim,wall_s";

inline void write_complete_csv(std::ostream& os, const CompleteArgs& args, const Dims& d,
                               double sr, const SolverConfig& cfg, const CompleteResult& res) {
    os << kCompleteHeader << "\n";
    os << args.input_path << "," << fmt(d.i1) << "," << fmt(d.i2) << "," << fmt(d.i3) << ","
       << fmt(sr) << "," << fmt(cfg.p) << "," << fmt(cfg.lambda) << "," << fmt(cfg.beta0) << ","
       << fmt(cfg.beta_max) << "," << fmt(cfg.eta) << "," << fmt(cfg.gamma0) << "," << fmt(cfg.rho)
       << "," << fmt(cfg.max_iters) << "," << fmt(cfg.tol) << "," << fmt(args.seed) << ","
       << fmt(res.trace.iterations) << "," << fmt(res.trace.converged) << ",";
    if (res.metrics) {
        os << fmt(res.metrics->rse) << "," << fmt(res.metrics->psnr) << ",";
        if (res.metrics->ssim) os << fmt(*res.metrics->ssim);
    } else {
        os << ",,";
    }
    os << "," << fmt(res.wall_s) << "\n";
}

inline void write_trace_csv(const std::string& path, const SolverTrace& trace) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw io_error("cannot open for writing: " + path);
    os << kTraceHeader << "\n";
    std::string body;
    append_trace_rows(body, 0, 0, trace);
    os << body;
    os.flush();
    if (!os) throw io_error("write failed: " + path);
}

}  // namespace detail

/// Completes one stored tensor (TNS3) or image (P6) and writes the recovered
/// tensor, the recovered image for image inputs, one CSV row, and optionally
/// the solver trace.
inline CompleteResult run_complete(const CompleteArgs& args) {
    const bool is_image = detail::sniff_image(args.input_path);
    const Tensor3 input = is_image ? image_to_tensor(args.input_path) : read_tensor(args.input_path);

    std::optional<SamplingMask> mask;
    if (!args.mask_path.empty()) {
        mask.emplace(read_mask(args.mask_path));
        if (!(mask->dims() == input.dims()))
            throw dimension_error("mask dims " + mask->dims().str() + " do not match input " +
                                  input.dims().str());
    } else {
        if (args.input_is_observation)
            throw std::invalid_argument("--observed input requires an explicit mask file");
        if (!(args.sr > 0.0) || args.sr > 1.0)
            throw std::invalid_argument("a mask file or a sampling rate in (0,1] is required");
        mask.emplace(gen_mask(input.dims(), args.sr, derive_seed(RngSeed{args.seed}, 1)));
    }

    const Tensor3 obs = args.input_is_observation ? input : mask->project(input);

    const auto t0 = std::chrono::steady_clock::now();
    SolveResult sol = solve(obs, *mask, args.cfg);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    CompleteResult result{std::move(sol.x), std::move(sol.trace), std::nullopt, is_image, wall};
    if (!args.input_is_observation) result.metrics = evaluate_recovery(input, result.recovered);

    if (!args.recovered_tensor_path.empty()) write_tensor(args.recovered_tensor_path, result.recovered);
    if (is_image && !args.recovered_image_path.empty())
        tensor_to_image(result.recovered, args.recovered_image_path);
    if (!args.trace_path.empty()) detail::write_trace_csv(args.trace_path, result.trace);

    SolverConfig reported = args.cfg;
    reported.lambda = resolve_lambda(args.cfg, obs);
    if (!args.out_path.empty()) {
        std::ofstream os(args.out_path, std::ios::trunc);
        if (!os) throw io_error("cannot open for writing: " + args.out_path);
        detail::write_complete_csv(os, args, input.dims(), mask->sampling_rate(), reported, result);
        os.flush();
        if (!os) throw io_error("write failed: " + args.out_path);
    } else {
        detail::write_complete_csv(std::cout, args, input.dims(), mask->sampling_rate(), reported,
                                   result);
    }
    return result;
}

/// Metric row (rse, psnr, ssim when applicable) for a stored truth/estimate
/// tensor pair.
inline MetricReport report_metrics(const std::string& truth_path, const std::string& estimate_path,
                                   const std::string& out_path = {}) {
    const Tensor3 truth = read_tensor(truth_path);
    const Tensor3 estimate = read_tensor(estimate_path);
    const MetricReport report = evaluate_recovery(truth, estimate);
    std::string line = detail::fmt(report.rse) + "," + detail::fmt(report.psnr) + ",";
    if (report.ssim) line += detail::fmt(*report.ssim);
    if (!out_path.empty()) {
        std::ofstream os(out_path, std::ios::trunc);
        if (!os) throw io_error("cannot open for writing: " + out_path);
        os << "rse,psnr,ssim\n" << line << "\n";
        os.flush();
        if (!os) throw io_error("write failed: " + out_path);
    } else {
        std::cout << "rse,psnr,ssim\n" << line << "\n";
    }
    return report;
}

}  // namespace lrtc

#endif  // LRTC_EXPERIMENTS_HPP
