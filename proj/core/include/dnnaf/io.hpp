#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dnnaf/harness.hpp"
#include "dnnaf/kde.hpp"
#include "dnnaf/noise.hpp"
#include "dnnaf/theory.hpp"

namespace dnnaf {

// All numeric output uses 17 significant digits so every format round-trips
// bit-exactly and regenerated files are byte-identical.

// --- noise sample sets: "# model=... seed=... n=..." then "index,value" ---
void write_noise_csv(const std::string& path, const NoiseSampleSet& set);
NoiseSampleSet read_noise_csv(const std::string& path);

// --- gradient datasets: "# model=... n=... h=..." then "input,target" ---
void write_dataset_csv(const std::string& path, const GradientDataset& data,
                       const std::string& model_tag);
GradientDataset read_dataset_csv(const std::string& path);

// --- MSD curves: "# key = value" config echo, then "iteration,<label>..." ---
void write_curves_csv(const std::string& path, const std::vector<MsdCurve>& curves,
                      const std::vector<std::string>& header_comments);
struct CurvesFile {
    std::vector<std::string> labels;
    std::vector<long> iterations;
    std::vector<std::vector<double>> columns; // one per label, msd_db
};
CurvesFile read_curves_csv(const std::string& path);
MsdCurve curve_from_file(const CurvesFile& file, const std::string& label);

// --- single-trial trajectory dump (debug): "iteration,residual,deviation_sq" ---
// Requires a trial recorded with cfg.record_residuals = true.
void write_trial_csv(const std::string& path, const TrialResult& trial,
                     const std::string& label);

// --- theory reports: one row per (model, source, eta, ...) ---
void write_theory_csv(const std::string& path, const std::vector<TheoryRow>& rows);

// --- companion gnuplot script for a curves CSV ---
void write_gnuplot_script(const std::string& script_path, const std::string& csv_name,
                          const std::string& title, const std::vector<std::string>& labels);

// --- experiment config files: flat "key = value" text ---
// Keys mirror ExperimentConfig; repeated `algorithm` lines accumulate, each
// carrying per-algorithm parameters as name=value pairs. Networks are
// referenced by model-file path and loaded by the caller. Unknown keys or
// malformed values -> ConfigError.
struct AlgoFileEntry {
    Algorithm algo = Algorithm::LMS;
    std::string label;
    double eta = 0.01;
    std::optional<double> eta_pretrain;
    double mcc_kernel_width = 2.0;
    int mee_window = 10;
    double mee_kernel_width = 1.0;
    long pretrain_len = 500;
    std::string model_path; // DNN-AF only
};

struct ExperimentFile {
    NoiseModel noise = NoiseModel::impulse();
    int M = 5;
    double sigma_u = 1.0;
    std::vector<double> w_o;
    long iterations = 5000;
    int trials = 100;
    std::uint64_t master_seed = 42;
    double divergence_threshold = 1e6;
    std::vector<AlgoFileEntry> algorithms;
};

ExperimentFile parse_experiment_file(const std::string& path);

} // namespace dnnaf
