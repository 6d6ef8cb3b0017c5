#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dnnaf/kde.hpp"

namespace dnnaf {

struct Scaler {
    double mean = 0.0;
    double std = 1.0;
};

// 1 -> 32 -> 16 -> 8 -> 4 -> 1 feed-forward net: tanh on the four hidden
// layers, affine output. Maps a residual to an estimated PDF-derivative.
// Immutable once trained; forward() is pure, so one trained net may be shared
// read-only across concurrent filter trials.
class GradientNet {
public:
    static constexpr std::array<int, 6> kDims = {1, 32, 16, 8, 4, 1};
    static constexpr int kLayers = 5;

    // Row-major weights: layer k has shape kDims[k+1] x kDims[k].
    std::array<std::vector<double>, kLayers> weights;
    std::array<std::vector<double>, kLayers> biases;
    Scaler input_scaler;
    Scaler target_scaler;
    // Inference outputs are clamped to this magnitude (set by train() to 3x
    // the largest |target| in the training split) so out-of-range residuals
    // early in a filter run cannot produce extrapolation spikes. Infinity
    // disables the clamp.
    double output_clamp = std::numeric_limits<double>::infinity();

    // Zero-parameter net with identity scalers (useful as a degenerate case).
    GradientNet();
};

// Glorot-style fan-based init: uniform on ±gain·sqrt(6/(fan_in+fan_out)) with
// the tanh gain 5/3; biases zero; scalers identity.
GradientNet init_network(std::uint64_t init_seed);

// Standardize -> layer stack -> destandardize -> clamp.
// Throws ParameterError on a non-finite input.
double forward(const GradientNet& net, double residual);

struct TrainConfig {
    double learning_rate = 0.001;
    int epochs = 100;
    int batch_size = 50;
    std::uint64_t shuffle_seed = 0;
    std::uint64_t init_seed = 0; // recorded alongside; init itself happens in init_network
};

struct TrainReport {
    std::vector<double> per_epoch_loss; // MSE on standardized targets, end of each epoch
    double final_holdout_r2 = 0.0;
};

// Plain SGD on mini-batches. The split is 90/10 train/holdout by shuffled
// index; scalers are fit on the training split; each epoch reshuffles the
// training indices; the batch step applies the summed per-sample gradients of
// the squared error (the accumulated classical form — at lr 0.001 the
// mean-reduction variant cannot fit the sharp presets within 100 epochs).
// Deterministic given (net, shuffle_seed). Non-finite loss ->
// TrainingDivergedError with the epoch index.
TrainReport train(GradientNet& net, const GradientDataset& data, const TrainConfig& cfg);

// Central-finite-difference check (step 1e-6) of the analytic parameter
// gradients of the full-dataset MSE at `probes` randomly chosen parameters.
// Returns the maximum scale-guarded relative error
// |analytic-numeric| / max(|analytic|+|numeric|, 1).
double gradient_check(const GradientNet& net, const GradientDataset& data, int probes,
                      std::uint64_t probe_seed = 0);

// Self-describing text format; parameters printed with 17 significant digits
// so save -> load -> save is byte-identical. Malformed input -> FormatError
// naming the offending field.
void save_model(const GradientNet& net, const std::string& path);
GradientNet load_model(const std::string& path);

} // namespace dnnaf
