#pragma once

#include <optional>
#include <vector>

#include "dnnaf/noise.hpp"

namespace dnnaf {

// Fixed-bandwidth Gaussian KDE over a 1-D sample set. Immutable after
// construction; evaluations are pure and safe to call concurrently.
// A single sample is allowed when the bandwidth is given explicitly;
// automatic bandwidth selection (silverman_bandwidth) needs n >= 2.
class KdeModel {
public:
    KdeModel(std::vector<double> samples, double bandwidth); // throws ParameterError

    const std::vector<double>& samples() const { return samples_; }
    double bandwidth() const { return h_; }

private:
    std::vector<double> samples_;
    double h_;
};

// K(v) = (1/sqrt(2*pi))·exp(-v^2/2) and its derivative -v·K(v).
double gaussian_kernel(double v);
double gaussian_kernel_derivative(double v);

// h = 0.9·min(std, IQR/1.34)·n^(-1/5). std is the (n-1)-denominator sample
// standard deviation; IQR uses linear-interpolation quantiles. Throws
// DegenerateSampleError when the spread is zero (constant samples).
double silverman_bandwidth(const std::vector<double>& samples);

double estimate_pdf(const KdeModel& kde, double v);
double estimate_pdf_derivative(const KdeModel& kde, double v);

struct GradientDataset {
    std::vector<double> inputs;   // Dataset 1: the noise samples
    std::vector<double> targets;  // Dataset 2: KDE PDF-derivative at each sample
    double bandwidth_used = 0.0;
};

// targets[i] = estimate_pdf_derivative at inputs[i]; full O(n^2) pairwise
// evaluation. Bandwidth defaults to Silverman's rule. Each target is an
// independent evaluation, so the build may be partitioned across threads
// without affecting the result.
GradientDataset build_gradient_dataset(const NoiseSampleSet& samples,
                                       std::optional<double> bandwidth = std::nullopt,
                                       unsigned threads = 1);

// Grid evaluation of the derivative (for figure-style density/derivative
// comparisons on a uniform grid rather than at the sample points).
std::vector<double> evaluate_derivative_on_grid(const KdeModel& kde,
                                                const std::vector<double>& grid,
                                                unsigned threads = 1);

} // namespace dnnaf
