#include "dnnaf/kde.hpp"

#include <algorithm>
#include <cmath>

#include "dnnaf/errors.hpp"
#include "dnnaf/math.hpp"

namespace dnnaf {

namespace {
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}

KdeModel::KdeModel(std::vector<double> samples, double bandwidth)
    : samples_(std::move(samples)), h_(bandwidth) {
    if (samples_.empty())
        throw ParameterError("KDE needs at least 1 sample");
    if (!(h_ > 0.0))
        throw ParameterError("KDE bandwidth must be positive");
}

double gaussian_kernel(double v) { return kInvSqrt2Pi * std::exp(-0.5 * v * v); }

double gaussian_kernel_derivative(double v) { return -v * gaussian_kernel(v); }

double silverman_bandwidth(const std::vector<double>& samples) {
    const std::size_t n = samples.size();
    if (n < 2) throw DegenerateSampleError("Silverman's rule needs at least 2 samples");
    const double m = mean(samples);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = samples[i] - m;
        sq[i] = d * d;
    }
    const double sd = std::sqrt(pairwise_sum(sq) / double(n - 1));
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    // The IQR branch keeps heavy tails (e.g. a 0.1-weight sigma=5 component)
    // from inflating the bandwidth through the standard deviation.
    double spread = sd;
    if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
    if (!(spread > 0.0)) throw DegenerateSampleError("zero sample spread: bandwidth undefined");
    return 0.9 * spread * std::pow(double(n), -0.2);
}

double estimate_pdf(const KdeModel& kde, double v) {
    const auto& s = kde.samples();
    const double h = kde.bandwidth();
    std::vector<double> terms(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        terms[i] = gaussian_kernel((v - s[i]) / h);
    return pairwise_sum(terms) / (double(s.size()) * h);
}

double estimate_pdf_derivative(const KdeModel& kde, double v) {
    const auto& s = kde.samples();
    const double h = kde.bandwidth();
    std::vector<double> terms(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        terms[i] = gaussian_kernel_derivative((v - s[i]) / h);
    return pairwise_sum(terms) / (double(s.size()) * h * h);
}

GradientDataset build_gradient_dataset(const NoiseSampleSet& samples,
                                       std::optional<double> bandwidth,
                                       unsigned threads) {
    if (samples.samples.size() < 2)
        throw DegenerateSampleError("gradient dataset needs at least 2 samples");
    const double h = bandwidth ? *bandwidth : silverman_bandwidth(samples.samples);
    KdeModel kde(samples.samples, h);
    GradientDataset out;
    out.inputs = samples.samples;
    out.targets.resize(out.inputs.size());
    parallel_for(out.inputs.size(), threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            out.targets[i] = estimate_pdf_derivative(kde, out.inputs[i]);
    });
    out.bandwidth_used = h;
    return out;
}

std::vector<double> evaluate_derivative_on_grid(const KdeModel& kde,
                                                const std::vector<double>& grid,
                                                unsigned threads) {
    std::vector<double> out(grid.size());
    parallel_for(grid.size(), threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) out[i] = estimate_pdf_derivative(kde, grid[i]);
    });
    return out;
}

} // namespace dnnaf
