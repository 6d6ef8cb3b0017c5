#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "dnnaf/gradnet.hpp"

namespace dnnaf {

enum class Algorithm { LMS, LMF, MCC, MEE, DNNAF };

std::string algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name); // ParameterError listing valid names

struct RegressionStep {
    std::vector<double> input; // u_i, length M
    double desired;            // d_i
};

// One adaptive filter instance: the weight estimate plus whatever per-
// algorithm auxiliary state the update rule needs. Single-threaded mutable;
// one state per trial.
struct FilterState {
    std::vector<double> w;
    double eta = 0.0;
    Algorithm algorithm = Algorithm::LMS;
    bool diverged = false; // latched when any weight goes non-finite

    // MCC
    double mcc_kernel_width = 2.0;
    // MEE: sliding window of residuals paired with the inputs that produced
    // them, so the information-potential gradient is exact for the buffer.
    int mee_window = 10;
    double mee_kernel_width = 1.0;
    std::deque<double> mee_errors;
    std::deque<std::vector<double>> mee_inputs;
    // DNN-AF
    const GradientNet* net = nullptr;
    long pretrain_len = 500;
    double eta_pretrain = 0.0; // step size for the LMS pre-training phase
    long iteration = 0;

    static FilterState lms(std::size_t M, double eta);
    static FilterState lmf(std::size_t M, double eta);
    static FilterState mcc(std::size_t M, double eta, double kernel_width);
    static FilterState mee(std::size_t M, double eta, int window, double kernel_width);
    static FilterState dnnaf(std::size_t M, double eta, const GradientNet& net,
                             long pretrain_len, double eta_pretrain);
};

// e_i = d_i - w_i^T u_i. Dimension mismatch -> ParameterError.
double residual(const FilterState& state, const RegressionStep& step);

// The five update rules. Each returns the pre-update residual e_i and leaves
// the post-update weights in `state`; a non-finite weight latches
// state.diverged on the exact step it appears (never an exception — LMF blow-
// ups are expected behavior under heavy noise, and the harness counts them).
double lms_update(FilterState& state, const RegressionStep& step);
double lmf_update(FilterState& state, const RegressionStep& step);
double mcc_update(FilterState& state, const RegressionStep& step);
double mee_update(FilterState& state, const RegressionStep& step);
double dnnaf_update(FilterState& state, const RegressionStep& step);

// Dispatch on state.algorithm — the uniform interface the harness drives.
double update(FilterState& state, const RegressionStep& step);

} // namespace dnnaf
