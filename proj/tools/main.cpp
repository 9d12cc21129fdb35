// Command-line harness for low-rank tensor completion: single runs, the
// p / size / depth sweeps, the rank-vs-sampling phase diagram, and metric
// reporting. All results are CSV; exit codes are 0 success, 1 usage error,
// 2 I/O error, 3 numerical failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lrtc/experiments.hpp"

namespace {

lrtc::Dims parse_dims(const std::string& text) {
    lrtc::Index d[3];
    char sep1 = 0, sep2 = 0;
    std::istringstream is(text);
    if (!(is >> d[0] >> sep1 >> d[1] >> sep2 >> d[2]) || sep1 != 'x' || sep2 != 'x' || !is.eof())
        throw CLI::ValidationError("--dims", "expected I1xI2xI3, got '" + text + "'");
    return {d[0], d[1], d[2]};
}

void require_file(const std::string& path, const std::string& flag) {
    if (path.empty()) return;
    if (!std::filesystem::is_regular_file(path))
        throw CLI::ValidationError(flag, "file not found: " + path);
}

void add_solver_flags(CLI::App* cmd, lrtc::SolverConfig& cfg) {
    cmd->add_option("--p", cfg.p, "Shrinkage exponent p <= 1 (p = 1 is plain soft thresholding)");
    cmd->add_option("--lambda", cfg.lambda,
                    "Regularization weight; 0 adapts it to the observed spectrum");
    cmd->add_option("--beta0", cfg.beta0, "Initial penalty parameter");
    cmd->add_option("--beta-max", cfg.beta_max, "Penalty cap");
    cmd->add_option("--eta", cfg.eta, "Penalty growth factor per iteration");
    cmd->add_option("--gamma0", cfg.gamma0, "Initial momentum weight");
    cmd->add_option("--rho", cfg.rho, "Momentum growth/backoff factor");
    cmd->add_option("--max-iters", cfg.max_iters, "Iteration cap");
    cmd->add_option("--tol", cfg.tol, "Relative-change stopping tolerance");
}

struct SweepFlags {
    std::string dims_text;
    std::vector<lrtc::Index> ranks;
    std::vector<double> srs;
    std::vector<double> ps;
};

void add_sweep_flags(CLI::App* cmd, lrtc::ExperimentSpec& spec, SweepFlags& flags) {
    cmd->add_option("--dims", flags.dims_text, "Instance dims as I1xI2xI3");
    cmd->add_option("--ranks", flags.ranks, "Tubal ranks of the generated instances")->delimiter(',');
    cmd->add_option("--srs", flags.srs, "Sampling rates")->delimiter(',');
    cmd->add_option("--ps", flags.ps, "p values")->delimiter(',');
    cmd->add_option("--trials", spec.trials, "Trials per grid cell");
    cmd->add_option("--seed", spec.base_seed, "Base seed; every (cell, trial) derives its own stream");
    cmd->add_option("--out", spec.out_path, "Output CSV path")->required();
    cmd->add_option("--trace", spec.trace_path, "Also write per-iteration solver traces to this CSV");
    cmd->add_flag("--paper-scale", spec.paper_scale, "Use the published grid sizes instead of desk scale");
    cmd->add_option("--jobs", spec.jobs, "Parallel workers (default: hardware concurrency)");
}

void finish_spec(lrtc::ExperimentSpec& spec, const SweepFlags& flags) {
    if (!flags.dims_text.empty()) spec.dims = parse_dims(flags.dims_text);
    spec.ranks = flags.ranks;
    spec.sampling_rates = flags.srs;
    spec.p_values = flags.ps;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Low-rank tensor completion via p-shrinkage singular value thresholding"};
    app.require_subcommand(1);

    // complete
    auto* complete = app.add_subcommand("complete", "Recover one stored tensor or P6 image");
    lrtc::CompleteArgs cargs;
    complete->add_option("--input", cargs.input_path, "Ground-truth tensor (.tns) or image (.ppm)")
        ->required();
    complete->add_option("--mask", cargs.mask_path, "Observation mask file (MSK3)");
    complete->add_option("--sr", cargs.sr, "Sampling rate used to draw a mask when none is given");
    complete->add_option("--seed", cargs.seed, "Seed for the drawn mask");
    complete->add_flag("--observed", cargs.input_is_observation,
                       "Input is the zero-filled observation itself (no ground truth; needs --mask)");
    complete->add_option("--recovered-out", cargs.recovered_tensor_path,
                         "Where to write the recovered tensor (default recovered.tns)");
    complete->add_option("--recovered-image-out", cargs.recovered_image_path,
                         "Where to write the recovered image for image inputs (default recovered.ppm)");
    complete->add_option("--out", cargs.out_path, "CSV row destination (default: stdout)");
    complete->add_option("--trace", cargs.trace_path, "Write the per-iteration solver trace CSV");
    add_solver_flags(complete, cargs.cfg);

    // sweeps
    lrtc::ExperimentSpec psweep_spec, size_spec, depth_spec, phase_spec;
    SweepFlags psweep_flags, size_flags, depth_flags, phase_flags;
    auto* psweep = app.add_subcommand("p-sweep", "Recovery quality across p values on one instance");
    add_sweep_flags(psweep, psweep_spec, psweep_flags);
    add_solver_flags(psweep, psweep_spec.cfg);
    auto* size_sweep = app.add_subcommand("size-sweep", "RSE vs sampling rate for cubic tensors of growing size");
    add_sweep_flags(size_sweep, size_spec, size_flags);
    add_solver_flags(size_sweep, size_spec.cfg);
    auto* depth_sweep = app.add_subcommand("depth-sweep", "RSE vs sampling rate for tensors of growing depth I3");
    add_sweep_flags(depth_sweep, depth_spec, depth_flags);
    add_solver_flags(depth_sweep, depth_spec.cfg);
    auto* phase = app.add_subcommand("phase-diagram", "Success fraction over the (rank, sampling rate) grid");
    add_sweep_flags(phase, phase_spec, phase_flags);
    add_solver_flags(phase, phase_spec.cfg);

    // metrics
    auto* metrics = app.add_subcommand("metrics", "RSE/PSNR/SSIM of an estimate against its ground truth");
    std::string truth_path, estimate_path, metrics_out;
    metrics->add_option("--truth", truth_path, "Ground-truth tensor file")->required();
    metrics->add_option("--estimate", estimate_path, "Estimate tensor file")->required();
    metrics->add_option("--out", metrics_out, "CSV destination (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (complete->parsed()) {
            require_file(cargs.input_path, "--input");
            require_file(cargs.mask_path, "--mask");
            if (cargs.recovered_tensor_path.empty()) cargs.recovered_tensor_path = "recovered.tns";
            if (cargs.recovered_image_path.empty()) cargs.recovered_image_path = "recovered.ppm";
            lrtc::run_complete(cargs);
        } else if (psweep->parsed()) {
            finish_spec(psweep_spec, psweep_flags);
            lrtc::run_p_sweep(psweep_spec);
        } else if (size_sweep->parsed()) {
            finish_spec(size_spec, size_flags);
            lrtc::run_size_sweep(size_spec);
        } else if (depth_sweep->parsed()) {
            finish_spec(depth_spec, depth_flags);
            lrtc::run_depth_sweep(depth_spec);
        } else if (phase->parsed()) {
            finish_spec(phase_spec, phase_flags);
            lrtc::run_phase_diagram(phase_spec);
        } else if (metrics->parsed()) {
            require_file(truth_path, "--truth");
            require_file(estimate_path, "--estimate");
            lrtc::report_metrics(truth_path, estimate_path, metrics_out);
        }
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const lrtc::numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const lrtc::io_error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 2;
    } catch (const lrtc::dimension_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
