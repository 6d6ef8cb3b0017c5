#include "dnnaf/theory.hpp"

#include <cmath>

#include "dnnaf/errors.hpp"
#include "dnnaf/math.hpp"
#include "dnnaf/rng.hpp"

namespace dnnaf {

namespace {

constexpr double kRatioCutoff = 1e-8;
constexpr long kChunk = 4096;

double eval_derivative(const NoiseModel& model, const DerivativeSource& src, double v) {
    if (std::holds_alternative<AnalyticSource>(src)) {
        // The uniform interior derivative is 0 and the boundary has measure
        // zero; a draw landing exactly on a kink would throw, which is the
        // right outcome for a genuinely non-differentiable point.
        return analytic_pdf_derivative(model, v);
    }
    if (const auto* k = std::get_if<KdeSource>(&src)) return estimate_pdf_derivative(*k->kde, v);
    return forward(*std::get<GradnetSource>(src).net, v);
}

// KDE and network estimates carry sampling noise at v = 0, where the exact
// derivative of a density with a critical point vanishes. Fed into p'(v)/v
// raw, that offset becomes a c/v tail whose sample mean has unbounded
// variance under the small rejection radius — one near-zero draw can swamp
// the whole estimate. Subtracting the source's own value at zero restores
// the continuous extension the rejection rule assumes. The analytic source
// is exact and stays raw (its ratio genuinely extends, or — Rayleigh at
// 0+ — genuinely diverges and should be reported as such).
double ratio_offset(const DerivativeSource& src) {
    if (const auto* k = std::get_if<KdeSource>(&src)) return estimate_pdf_derivative(*k->kde, 0.0);
    if (const auto* g = std::get_if<GradnetSource>(&src)) return forward(*g->net, 0.0);
    return 0.0;
}

} // namespace

std::string source_name(const DerivativeSource& src) {
    if (std::holds_alternative<AnalyticSource>(src)) return "analytic-oracle";
    if (std::holds_alternative<KdeSource>(src)) return "kde";
    return "gradnet";
}

NoiseExpectations estimate_expectations(const NoiseModel& model, const DerivativeSource& source,
                                        long n_mc, std::uint64_t seed, unsigned threads) {
    if (n_mc < 1000) throw ParameterError("expectation estimate needs n_mc >= 1000");

    const long nchunks = (n_mc + kChunk - 1) / kChunk;
    const auto n_sums = static_cast<std::size_t>(nchunks);
    std::vector<double> ratio_sums(n_sums), ratio_sq_sums(n_sums), deriv_sq_sums(n_sums);
    const double offset = ratio_offset(source);

    parallel_for(std::size_t(nchunks), threads, [&](std::size_t cb, std::size_t ce) {
        std::vector<double> ratio(kChunk), ratio_sq(kChunk), deriv_sq(kChunk);
        for (std::size_t c = cb; c < ce; ++c) {
            const long begin = long(c) * kChunk;
            const long count = std::min(kChunk, n_mc - begin);
            Rng rng(derive_seed(seed, c));
            for (long i = 0; i < count; ++i) {
                double v = 0.0;
                do {
                    v = sample_one(model, rng);
                } while (std::abs(v) < kRatioCutoff);
                const double d = eval_derivative(model, source, v);
                const double r = (d - offset) / v;
                ratio[std::size_t(i)] = r;
                ratio_sq[std::size_t(i)] = r * r;
                deriv_sq[std::size_t(i)] = d * d;
            }
            auto part = [count](std::vector<double>& buf) {
                return pairwise_sum(std::span<const double>(buf.data(), std::size_t(count)));
            };
            ratio_sums[c] = part(ratio);
            ratio_sq_sums[c] = part(ratio_sq);
            deriv_sq_sums[c] = part(deriv_sq);
        }
    });

    NoiseExpectations out;
    out.e_ratio = pairwise_sum(ratio_sums) / double(n_mc);
    out.e_ratio_sq = pairwise_sum(ratio_sq_sums) / double(n_mc);
    out.e_deriv_sq = pairwise_sum(deriv_sq_sums) / double(n_mc);
    out.source = source_name(source);
    out.n_mc = n_mc;
    if (!std::isfinite(out.e_ratio) || !std::isfinite(out.e_ratio_sq) ||
        !std::isfinite(out.e_deriv_sq))
        throw EstimationError("non-finite expectation accumulation");
    return out;
}

double max_step_size(const NoiseExpectations& exp, double sigma_u_sq) {
    if (!(sigma_u_sq > 0.0)) throw ParameterError("sigma_u_sq must be positive");
    if (!(exp.e_ratio < 0.0))
        throw BoundUndefinedError(
            "step-size bound requires E[p'(v)/v] < 0 (got " + std::to_string(exp.e_ratio) +
            "); the mean-stability analysis does not apply to this noise/source");
    return 2.0 / (sigma_u_sq * -exp.e_ratio);
}

SteadyStatePrediction steady_state_msd(const NoiseExpectations& exp, double eta, int M,
                                       double sigma_u_sq) {
    if (!(eta > 0.0)) throw ParameterError("eta must be positive");
    if (M < 1) throw ParameterError("M must be >= 1");
    if (!(sigma_u_sq > 0.0)) throw ParameterError("sigma_u_sq must be positive");
    // 1 - E[(1 + eta·sigma^2·r)^2] = -2·eta·sigma^2·E[r] - eta^2·sigma^4·E[r^2]
    const double denom =
        -2.0 * eta * sigma_u_sq * exp.e_ratio - eta * eta * sigma_u_sq * sigma_u_sq * exp.e_ratio_sq;
    if (!(denom > 0.0))
        throw InstabilityPredictedError(
            "steady-state MSD denominator is nonpositive: mean-square instability predicted at "
            "eta = " + std::to_string(eta),
            denom);
    SteadyStatePrediction out;
    out.msd = eta * eta * double(M) * sigma_u_sq * exp.e_deriv_sq / denom;
    out.msd_db = 10.0 * std::log10(out.msd);
    return out;
}

} // namespace dnnaf
