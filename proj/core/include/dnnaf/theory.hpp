#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "dnnaf/gradnet.hpp"
#include "dnnaf/kde.hpp"
#include "dnnaf/noise.hpp"

namespace dnnaf {

// Where p'(v) comes from when estimating the stability/steady-state
// expectations: the closed form, a fitted KDE, or the trained net.
struct AnalyticSource {};
struct KdeSource {
    const KdeModel* kde;
};
struct GradnetSource {
    const GradientNet* net;
};
using DerivativeSource = std::variant<AnalyticSource, KdeSource, GradnetSource>;

std::string source_name(const DerivativeSource& src);

struct NoiseExpectations {
    double e_ratio = 0.0;    // E[p'(v)/v]
    double e_ratio_sq = 0.0; // E[(p'(v)/v)^2]
    double e_deriv_sq = 0.0; // E[(p'(v))^2]
    std::string source;      // analytic-oracle | kde | gradnet
    long n_mc = 0;
};

// Monte Carlo estimate of the three expectations over n_mc noise draws.
// Samples with |v| < 1e-8 are rejected and redrawn (the ratio p'(v)/v is
// ill-conditioned there; for smooth densities it extends continuously, so
// rejection bias is negligible). For the kde and gradnet sources the ratio
// is formed as (p'(v) - p'(0))/v: a fitted estimate has a small nonzero
// value at the origin, and dividing that offset by near-cutoff draws would
// give the ratio moments unbounded variance. e_deriv_sq always uses the
// raw estimate. Accumulation is chunked (4096 samples per chunk, per-chunk
// derived seeds, pairwise-summed, combined in chunk order) so the result is
// independent of the thread count.
// Non-finite accumulations -> EstimationError.
NoiseExpectations estimate_expectations(const NoiseModel& model, const DerivativeSource& source,
                                        long n_mc, std::uint64_t seed, unsigned threads = 1);

// Mean-stability step-size bound 2/(sigma_u^2 · E[-p'(v)/v]).
// Requires e_ratio < 0; otherwise BoundUndefinedError (reported, not clamped).
double max_step_size(const NoiseExpectations& exp, double sigma_u_sq);

struct SteadyStatePrediction {
    double msd = 0.0;    // linear
    double msd_db = 0.0; // 10·log10(msd)
};

// Closed-form steady-state MSD
//   eta^2·M·sigma_u^2·E[(p')^2] / (1 - E[(1 + eta·sigma_u^2·p'(v)/v)^2]),
// with the denominator expanded through e_ratio and e_ratio_sq. A nonpositive
// denominator means mean-square instability at this step size ->
// InstabilityPredictedError carrying the denominator.
SteadyStatePrediction steady_state_msd(const NoiseExpectations& exp, double eta, int M,
                                       double sigma_u_sq);

// One CSV row of a theory report (see write_theory_csv in io.hpp).
struct TheoryRow {
    std::string model;
    std::string source;
    double eta;
    int M;
    double sigma_u_sq;
    double predicted_msd;
    double predicted_msd_db;
    double eta_max; // NaN when the bound is undefined for this model/source
};

} // namespace dnnaf
