#include "dnnaf/filters.hpp"

#include <cmath>

#include "dnnaf/errors.hpp"

namespace dnnaf {

namespace {

void check_dims(const FilterState& state, const RegressionStep& step) {
    if (state.w.size() != step.input.size())
        throw ParameterError("filter length " + std::to_string(state.w.size()) +
                             " does not match input length " + std::to_string(step.input.size()));
}

void latch_divergence(FilterState& state) {
    for (double w : state.w) {
        if (!std::isfinite(w)) {
            state.diverged = true;
            return;
        }
    }
}

// Gaussian kernel with width sigma (the correntropy kernel).
double kappa(double x, double sigma) {
    const double z = x / sigma;
    return std::exp(-0.5 * z * z) / (sigma * 2.5066282746310005024);
}

} // namespace

std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::LMS: return "lms";
        case Algorithm::LMF: return "lmf";
        case Algorithm::MCC: return "mcc";
        case Algorithm::MEE: return "mee";
        case Algorithm::DNNAF: return "dnnaf";
    }
    return "?";
}

Algorithm algorithm_from_name(const std::string& name) {
    if (name == "lms") return Algorithm::LMS;
    if (name == "lmf") return Algorithm::LMF;
    if (name == "mcc") return Algorithm::MCC;
    if (name == "mee") return Algorithm::MEE;
    if (name == "dnnaf") return Algorithm::DNNAF;
    throw ParameterError("unknown algorithm '" + name + "' (valid: lms, lmf, mcc, mee, dnnaf)");
}

FilterState FilterState::lms(std::size_t M, double eta) {
    if (M == 0) throw ParameterError("filter length must be >= 1");
    if (!(eta > 0.0)) throw ParameterError("step size must be positive");
    FilterState s;
    s.w.assign(M, 0.0);
    s.eta = eta;
    s.algorithm = Algorithm::LMS;
    return s;
}

FilterState FilterState::lmf(std::size_t M, double eta) {
    FilterState s = lms(M, eta);
    s.algorithm = Algorithm::LMF;
    return s;
}

FilterState FilterState::mcc(std::size_t M, double eta, double kernel_width) {
    if (!(kernel_width > 0.0)) throw ParameterError("MCC kernel width must be positive");
    FilterState s = lms(M, eta);
    s.algorithm = Algorithm::MCC;
    s.mcc_kernel_width = kernel_width;
    return s;
}

FilterState FilterState::mee(std::size_t M, double eta, int window, double kernel_width) {
    if (window < 2) throw ParameterError("MEE window must be >= 2");
    if (!(kernel_width > 0.0)) throw ParameterError("MEE kernel width must be positive");
    FilterState s = lms(M, eta);
    s.algorithm = Algorithm::MEE;
    s.mee_window = window;
    s.mee_kernel_width = kernel_width;
    return s;
}

FilterState FilterState::dnnaf(std::size_t M, double eta, const GradientNet& net,
                               long pretrain_len, double eta_pretrain) {
    if (pretrain_len > 0 && !(eta_pretrain > 0.0))
        throw ParameterError("pre-training step size must be positive");
    FilterState s = lms(M, eta);
    s.algorithm = Algorithm::DNNAF;
    s.net = &net;
    s.pretrain_len = pretrain_len;
    s.eta_pretrain = eta_pretrain;
    return s;
}

double residual(const FilterState& state, const RegressionStep& step) {
    check_dims(state, step);
    double dot = 0.0;
    for (std::size_t i = 0; i < state.w.size(); ++i) dot += state.w[i] * step.input[i];
    return step.desired - dot;
}

double lms_update(FilterState& state, const RegressionStep& step) {
    const double e = residual(state, step);
    for (std::size_t i = 0; i < state.w.size(); ++i) state.w[i] += state.eta * e * step.input[i];
    latch_divergence(state);
    return e;
}

double lmf_update(FilterState& state, const RegressionStep& step) {
    const double e = residual(state, step);
    const double e3 = e * e * e;
    for (std::size_t i = 0; i < state.w.size(); ++i) state.w[i] += state.eta * e3 * step.input[i];
    latch_divergence(state);
    return e;
}

double mcc_update(FilterState& state, const RegressionStep& step) {
    const double e = residual(state, step);
    const double sigma = state.mcc_kernel_width;
    const double factor = std::exp(-0.5 * e * e / (sigma * sigma));
    for (std::size_t i = 0; i < state.w.size(); ++i)
        state.w[i] += state.eta * factor * e * step.input[i];
    latch_divergence(state);
    return e;
}

double mee_update(FilterState& state, const RegressionStep& step) {
    const double e = residual(state, step);
    state.mee_errors.push_back(e);
    state.mee_inputs.push_back(step.input);
    while (int(state.mee_errors.size()) > state.mee_window) {
        state.mee_errors.pop_front();
        state.mee_inputs.pop_front();
    }
    // Ascend the empirical quadratic information potential
    //   V = (1/L^2) sum_j sum_k kappa(e_j - e_k),
    // where de_j/dw = -u_j, so dV/dw = (1/L^2) sum_jk kappa'(e_j-e_k)(u_k-u_j).
    const std::size_t L = state.mee_errors.size();
    const double sigma = state.mee_kernel_width;
    std::vector<double> grad(state.w.size(), 0.0);
    for (std::size_t j = 0; j < L; ++j) {
        for (std::size_t k = 0; k < L; ++k) {
            if (j == k) continue;
            const double diff = state.mee_errors[j] - state.mee_errors[k];
            const double kp = -diff / (sigma * sigma) * kappa(diff, sigma);
            for (std::size_t m = 0; m < grad.size(); ++m)
                grad[m] += kp * (state.mee_inputs[k][m] - state.mee_inputs[j][m]);
        }
    }
    const double scale = state.eta / double(L * L);
    for (std::size_t m = 0; m < state.w.size(); ++m) state.w[m] += scale * grad[m];
    latch_divergence(state);
    return e;
}

double dnnaf_update(FilterState& state, const RegressionStep& step) {
    if (state.net == nullptr)
        throw ConfigError("DNN-AF filter has no gradient network attached");
    if (state.iteration < state.pretrain_len) {
        // Pre-training phase: run plain LMS at its own step size.
        const double saved_eta = state.eta;
        state.eta = state.eta_pretrain;
        const double e = lms_update(state, step);
        state.eta = saved_eta;
        ++state.iteration;
        return e;
    }
    const double e = residual(state, step);
    if (!std::isfinite(e)) {
        // Divergence is reported through the flag, never an exception.
        state.diverged = true;
        ++state.iteration;
        return e;
    }
    const double deriv = forward(*state.net, e);
    for (std::size_t i = 0; i < state.w.size(); ++i)
        state.w[i] -= state.eta * step.input[i] * deriv;
    latch_divergence(state);
    ++state.iteration;
    return e;
}

double update(FilterState& state, const RegressionStep& step) {
    switch (state.algorithm) {
        case Algorithm::LMS: return lms_update(state, step);
        case Algorithm::LMF: return lmf_update(state, step);
        case Algorithm::MCC: return mcc_update(state, step);
        case Algorithm::MEE: return mee_update(state, step);
        case Algorithm::DNNAF: return dnnaf_update(state, step);
    }
    throw ParameterError("unhandled algorithm tag");
}

} // namespace dnnaf
