#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dnnaf/filters.hpp"
#include "dnnaf/noise.hpp"

namespace dnnaf {

// Template for one algorithm slot in an experiment. `label` names the CSV
// column (defaults to the algorithm name; disambiguate when running one
// algorithm at several step sizes).
struct AlgoSpec {
    Algorithm algo = Algorithm::LMS;
    std::string label;
    double eta = 0.01;
    double mcc_kernel_width = 2.0;
    int mee_window = 10;
    double mee_kernel_width = 1.0;
    const GradientNet* net = nullptr;
    long pretrain_len = 500;
    double eta_pretrain = 0.01;

    std::string effective_label() const { return label.empty() ? algorithm_name(algo) : label; }
};

struct ExperimentConfig {
    explicit ExperimentConfig(NoiseModel noise_model) : noise(std::move(noise_model)) {}

    int M = 5;
    double sigma_u = 1.0;
    // Empty -> unit-norm random vector derived from master_seed. Unit-norm
    // start makes 0 dB the natural initial MSD reference.
    std::vector<double> w_o;
    long iterations = 5000;
    int trials = 100;
    NoiseModel noise;
    std::vector<AlgoSpec> algorithms;
    std::uint64_t master_seed = 42;
    // A trial whose squared deviation exceeds this is flagged diverged even
    // while its weights are still finite — a bounded-output net can push
    // weights into runaway growth without ever producing an Inf.
    double divergence_threshold = 1e6;
    unsigned threads = 1;
    // Debug: keep the per-iteration residual e_i in each TrialResult (for
    // trajectory dumps; off by default to keep experiment memory flat).
    bool record_residuals = false;
};

struct MsdCurve {
    std::string algorithm_tag;
    std::vector<double> msd_linear; // mean over non-diverged trials, per iteration
    std::vector<double> msd_db;
    int diverged_trials = 0;
};

struct TrialResult {
    std::vector<double> deviation_sq; // ||w_o - w_{i+1}||^2 after update i
    std::vector<double> residuals;    // e_i per iteration, only if record_residuals
    bool diverged = false;
    long diverged_at = -1; // iteration index of the flagging step
};

// The resolved unknown system for this config (explicit w_o or the seeded
// unit-norm vector).
std::vector<double> resolve_w_o(const ExperimentConfig& cfg);

// One trial of one algorithm. Per-trial streams derive from master_seed as
//   u: derive_seed(master, 3·trial+1)   v: derive_seed(master, 3·trial+2)
//   w0: derive_seed(master, 3·trial+3)
// (w_o itself uses stream 0), so every algorithm sees identical (u, v, w_0)
// within a trial — comparisons are paired by construction.
TrialResult run_trial(const ExperimentConfig& cfg, const AlgoSpec& spec, int trial);

// All algorithms over all trials, ensemble-averaged into MSD curves. Diverged
// trials are excluded from the average and counted. Trials are processed in
// fixed-size chunks (8 trials) with in-order combination, so the output is
// bit-identical for any cfg.threads.
std::vector<MsdCurve> run_experiment(const ExperimentConfig& cfg);

// Mean of the final 10% of msd_db, after verifying the curve actually
// plateaus: least-squares slope of 100-point block means over the final half
// must stay below +0.01 dB per 100 iterations (one-sided — a falling tail is
// fine, a rising one is not converged). Throws NotConvergedError otherwise.
double steady_state_of(const MsdCurve& curve);

// Plateau check alone (true = plateau present).
bool has_plateau(const MsdCurve& curve);

} // namespace dnnaf
