#include "dnnaf/harness.hpp"

#include <cmath>
#include <limits>

#include "dnnaf/errors.hpp"
#include "dnnaf/math.hpp"
#include "dnnaf/rng.hpp"

namespace dnnaf {

namespace {

constexpr int kTrialChunk = 8; // fixed so reductions don't depend on threads

void validate(const ExperimentConfig& cfg) {
    if (cfg.M < 1) throw ParameterError("M must be >= 1");
    if (cfg.trials < 1) throw ParameterError("trials must be >= 1");
    if (cfg.iterations < 1) throw ParameterError("iterations must be >= 1");
    if (!(cfg.sigma_u > 0.0)) throw ParameterError("sigma_u must be positive");
    if (!cfg.w_o.empty() && cfg.w_o.size() != std::size_t(cfg.M))
        throw ParameterError("explicit w_o length must equal M");
    if (cfg.algorithms.empty()) throw ParameterError("experiment needs at least one algorithm");
    for (const auto& a : cfg.algorithms)
        if (a.algo == Algorithm::DNNAF && a.net == nullptr)
            throw ConfigError("DNN-AF algorithm spec has no trained network attached");
}

std::vector<double> unit_norm_vector(Rng& rng, int M) {
    std::vector<double> v(static_cast<std::size_t>(M));
    double norm_sq = 0.0;
    for (auto& x : v) {
        x = rng.normal();
        norm_sq += x * x;
    }
    const double norm = std::sqrt(norm_sq);
    if (norm > 0.0)
        for (auto& x : v) x /= norm;
    else
        v[0] = 1.0; // astronomically unlikely; keep it well-defined
    return v;
}

FilterState make_state(const AlgoSpec& spec, const std::vector<double>& w0) {
    const std::size_t M = w0.size();
    FilterState s = [&] {
        switch (spec.algo) {
            case Algorithm::LMS: return FilterState::lms(M, spec.eta);
            case Algorithm::LMF: return FilterState::lmf(M, spec.eta);
            case Algorithm::MCC: return FilterState::mcc(M, spec.eta, spec.mcc_kernel_width);
            case Algorithm::MEE:
                return FilterState::mee(M, spec.eta, spec.mee_window, spec.mee_kernel_width);
            case Algorithm::DNNAF:
                return FilterState::dnnaf(M, spec.eta, *spec.net, spec.pretrain_len,
                                          spec.eta_pretrain);
        }
        throw ParameterError("unhandled algorithm tag");
    }();
    s.w = w0;
    return s;
}

} // namespace

std::vector<double> resolve_w_o(const ExperimentConfig& cfg) {
    if (!cfg.w_o.empty()) return cfg.w_o;
    Rng rng(derive_seed(cfg.master_seed, 0));
    return unit_norm_vector(rng, cfg.M);
}

TrialResult run_trial(const ExperimentConfig& cfg, const AlgoSpec& spec, int trial) {
    validate(cfg);
    const std::vector<double> w_o = resolve_w_o(cfg);
    Rng u_rng(derive_seed(cfg.master_seed, 3 * std::uint64_t(trial) + 1));
    Rng v_rng(derive_seed(cfg.master_seed, 3 * std::uint64_t(trial) + 2));
    Rng w0_rng(derive_seed(cfg.master_seed, 3 * std::uint64_t(trial) + 3));

    FilterState state = make_state(spec, unit_norm_vector(w0_rng, cfg.M));

    TrialResult out;
    out.deviation_sq.reserve(std::size_t(cfg.iterations));
    RegressionStep step;
    step.input.resize(std::size_t(cfg.M));
    for (long i = 0; i < cfg.iterations; ++i) {
        double dot = 0.0;
        for (int m = 0; m < cfg.M; ++m) {
            step.input[std::size_t(m)] = cfg.sigma_u * u_rng.normal();
            dot += w_o[std::size_t(m)] * step.input[std::size_t(m)];
        }
        step.desired = dot + sample_one(cfg.noise, v_rng);
        const double e = update(state, step);
        if (cfg.record_residuals) out.residuals.push_back(e);
        double dev = 0.0;
        for (int m = 0; m < cfg.M; ++m) {
            const double d = w_o[std::size_t(m)] - state.w[std::size_t(m)];
            dev += d * d;
        }
        out.deviation_sq.push_back(dev);
        if (state.diverged || !(dev <= cfg.divergence_threshold)) {
            out.diverged = true;
            out.diverged_at = i;
            break;
        }
    }
    return out;
}

std::vector<MsdCurve> run_experiment(const ExperimentConfig& cfg) {
    validate(cfg);
    const std::size_t nalgo = cfg.algorithms.size();
    const std::size_t iters = std::size_t(cfg.iterations);
    const int nchunks = (cfg.trials + kTrialChunk - 1) / kTrialChunk;

    // Per chunk and algorithm: pointwise sums over the chunk's non-diverged
    // trials, plus the divergence count. Chunks combine in index order below.
    std::vector<std::vector<double>> chunk_sums(std::size_t(nchunks) * nalgo);
    std::vector<int> chunk_included(std::size_t(nchunks) * nalgo, 0);
    std::vector<int> chunk_diverged(std::size_t(nchunks) * nalgo, 0);

    parallel_for(std::size_t(nchunks), cfg.threads, [&](std::size_t cb, std::size_t ce) {
        for (std::size_t c = cb; c < ce; ++c) {
            const int t_begin = int(c) * kTrialChunk;
            const int t_end = std::min(cfg.trials, t_begin + kTrialChunk);
            for (std::size_t a = 0; a < nalgo; ++a) {
                auto& sums = chunk_sums[c * nalgo + a];
                sums.assign(iters, 0.0);
                for (int t = t_begin; t < t_end; ++t) {
                    TrialResult r = run_trial(cfg, cfg.algorithms[a], t);
                    if (r.diverged) {
                        ++chunk_diverged[c * nalgo + a];
                        continue;
                    }
                    for (std::size_t i = 0; i < iters; ++i) sums[i] += r.deviation_sq[i];
                    ++chunk_included[c * nalgo + a];
                }
            }
        }
    });

    std::vector<MsdCurve> curves(nalgo);
    for (std::size_t a = 0; a < nalgo; ++a) {
        MsdCurve& curve = curves[a];
        curve.algorithm_tag = cfg.algorithms[a].effective_label();
        int included = 0;
        for (int c = 0; c < nchunks; ++c) {
            included += chunk_included[std::size_t(c) * nalgo + a];
            curve.diverged_trials += chunk_diverged[std::size_t(c) * nalgo + a];
        }
        if (included == 0) continue; // all trials diverged: empty curve, count reported
        curve.msd_linear.assign(iters, 0.0);
        curve.msd_db.assign(iters, 0.0);
        for (std::size_t i = 0; i < iters; ++i) {
            double s = 0.0;
            for (int c = 0; c < nchunks; ++c) s += chunk_sums[std::size_t(c) * nalgo + a][i];
            curve.msd_linear[i] = s / double(included);
            curve.msd_db[i] = curve.msd_linear[i] > 0.0
                                  ? 10.0 * std::log10(curve.msd_linear[i])
                                  : -std::numeric_limits<double>::infinity();
        }
    }
    return curves;
}

bool has_plateau(const MsdCurve& curve) {
    const std::size_t n = curve.msd_db.size();
    if (n < 10) return false;
    // Block means over the final half, least-squares slope across blocks.
    const std::size_t half_begin = n / 2;
    const std::size_t block = n >= 1000 ? 100 : std::max<std::size_t>(1, n / 10);
    std::vector<double> means, centers;
    for (std::size_t b = half_begin; b + block <= n; b += block) {
        means.push_back(mean(std::span<const double>(curve.msd_db.data() + b, block)));
        centers.push_back(double(b) + 0.5 * double(block));
    }
    if (means.size() < 2) return true; // too short to measure a trend
    const double cbar = mean(centers);
    const double mbar = mean(means);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < means.size(); ++k) {
        num += (centers[k] - cbar) * (means[k] - mbar);
        den += (centers[k] - cbar) * (centers[k] - cbar);
    }
    const double slope_per_iter = den > 0.0 ? num / den : 0.0;
    return slope_per_iter * 100.0 < 0.01; // dB per 100 iterations, one-sided
}

double steady_state_of(const MsdCurve& curve) {
    const std::size_t n = curve.msd_db.size();
    if (n < 10) throw NotConvergedError("curve too short for a steady-state estimate");
    if (!has_plateau(curve))
        throw NotConvergedError("no plateau: MSD still rising over the final half of the curve");
    const std::size_t tail = std::max<std::size_t>(1, n / 10);
    return mean(std::span<const double>(curve.msd_db.data() + (n - tail), tail));
}

} // namespace dnnaf
