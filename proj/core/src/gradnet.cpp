#include "dnnaf/gradnet.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dnnaf/errors.hpp"
#include "dnnaf/math.hpp"
#include "dnnaf/rng.hpp"

namespace dnnaf {

namespace {

constexpr auto& D = GradientNet::kDims;

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Forward on an already-standardized input, no clamp. Activations are written
// into `act` (act[0] = input ... act[5] = output) for reuse by backprop.
double forward_std(const GradientNet& net, double x, std::array<std::vector<double>, 6>& act) {
    act[0].assign(1, x);
    for (int l = 0; l < GradientNet::kLayers; ++l) {
        const int in = D[l], out = D[l + 1];
        act[l + 1].assign(out, 0.0);
        for (int r = 0; r < out; ++r) {
            double z = net.biases[l][r];
            const double* wrow = net.weights[l].data() + std::size_t(r) * in;
            for (int c = 0; c < in; ++c) z += wrow[c] * act[l][c];
            act[l + 1][r] = l < GradientNet::kLayers - 1 ? std::tanh(z) : z;
        }
    }
    return act[GradientNet::kLayers][0];
}

double forward_std(const GradientNet& net, double x) {
    std::array<std::vector<double>, 6> act;
    return forward_std(net, x, act);
}

// Backprop of dLoss/dOutput = delta_out through the stack recorded in `act`,
// accumulating parameter gradients into gw/gb (same shapes as weights/biases).
void backprop(const GradientNet& net, const std::array<std::vector<double>, 6>& act,
              double delta_out, std::array<std::vector<double>, GradientNet::kLayers>& gw,
              std::array<std::vector<double>, GradientNet::kLayers>& gb) {
    std::vector<double> delta{delta_out};
    for (int l = GradientNet::kLayers - 1; l >= 0; --l) {
        const int in = D[l], out = D[l + 1];
        for (int r = 0; r < out; ++r) {
            gb[l][r] += delta[r];
            double* grow = gw[l].data() + std::size_t(r) * in;
            for (int c = 0; c < in; ++c) grow[c] += delta[r] * act[l][c];
        }
        if (l == 0) break;
        std::vector<double> next(in, 0.0);
        for (int c = 0; c < in; ++c) {
            double s = 0.0;
            for (int r = 0; r < out; ++r) s += net.weights[l][std::size_t(r) * in + c] * delta[r];
            // act[l] holds tanh(z) for hidden layers, so 1 - a^2 is tanh'.
            next[c] = s * (1.0 - act[l][c] * act[l][c]);
        }
        delta = std::move(next);
    }
}

double dataset_mse_std(const GradientNet& net, const std::vector<double>& x_std,
                       const std::vector<double>& y_std, const std::vector<std::size_t>& idx) {
    std::vector<double> sq(idx.size());
    std::array<std::vector<double>, 6> act;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        const double d = forward_std(net, x_std[idx[k]], act) - y_std[idx[k]];
        sq[k] = d * d;
    }
    return mean(sq);
}

void shuffle(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = std::size_t(rng.uniform01() * double(i));
        std::swap(idx[i - 1], idx[j < i ? j : i - 1]);
    }
}

} // namespace

GradientNet::GradientNet() {
    for (int l = 0; l < kLayers; ++l) {
        weights[l].assign(std::size_t(kDims[l + 1]) * kDims[l], 0.0);
        biases[l].assign(std::size_t(kDims[l + 1]), 0.0);
    }
}

GradientNet init_network(std::uint64_t init_seed) {
    GradientNet net;
    Rng rng(init_seed);
    constexpr double gain = 5.0 / 3.0; // tanh gain
    for (int l = 0; l < GradientNet::kLayers; ++l) {
        const double limit = gain * std::sqrt(6.0 / double(D[l] + D[l + 1]));
        for (auto& w : net.weights[l]) w = rng.uniform(-limit, limit);
    }
    return net;
}

double forward(const GradientNet& net, double residual) {
    if (!std::isfinite(residual))
        throw ParameterError("forward() requires a finite residual");
    const double x = (residual - net.input_scaler.mean) / net.input_scaler.std;
    double y = forward_std(net, x);
    y = y * net.target_scaler.std + net.target_scaler.mean;
    return std::clamp(y, -net.output_clamp, net.output_clamp);
}

TrainReport train(GradientNet& net, const GradientDataset& data, const TrainConfig& cfg) {
    const std::size_t n = data.inputs.size();
    if (n == 0) throw ParameterError("training dataset is empty");
    if (data.targets.size() != n) throw ParameterError("inputs/targets length mismatch");
    if (!(cfg.learning_rate > 0.0)) throw ParameterError("learning_rate must be positive");
    if (cfg.epochs < 1) throw ParameterError("epochs must be >= 1");
    if (cfg.batch_size < 1 || std::size_t(cfg.batch_size) > n)
        throw ParameterError("batch_size must lie in [1, dataset size]");

    Rng rng(cfg.shuffle_seed);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    shuffle(idx, rng);
    const std::size_t ntr = std::max<std::size_t>(1, std::size_t(0.9 * double(n)));
    std::vector<std::size_t> tr(idx.begin(), idx.begin() + ntr);
    std::vector<std::size_t> ho(idx.begin() + ntr, idx.end());

    auto fit_scaler = [&](const std::vector<double>& v) {
        std::vector<double> picked(tr.size());
        for (std::size_t k = 0; k < tr.size(); ++k) picked[k] = v[tr[k]];
        Scaler s;
        s.mean = mean(picked);
        for (auto& p : picked) {
            const double d = p - s.mean;
            p = d * d;
        }
        s.std = std::sqrt(mean(picked));
        if (!(s.std > 0.0))
            throw DegenerateSampleError("zero spread in training split: scaler undefined");
        return s;
    };
    net.input_scaler = fit_scaler(data.inputs);
    net.target_scaler = fit_scaler(data.targets);

    std::vector<double> x_std(n), y_std(n);
    for (std::size_t i = 0; i < n; ++i) {
        x_std[i] = (data.inputs[i] - net.input_scaler.mean) / net.input_scaler.std;
        y_std[i] = (data.targets[i] - net.target_scaler.mean) / net.target_scaler.std;
    }

    std::array<std::vector<double>, GradientNet::kLayers> gw, gb;
    for (int l = 0; l < GradientNet::kLayers; ++l) {
        gw[l].assign(net.weights[l].size(), 0.0);
        gb[l].assign(net.biases[l].size(), 0.0);
    }

    TrainReport report;
    std::array<std::vector<double>, 6> act;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(tr, rng);
        for (std::size_t start = 0; start < ntr; start += std::size_t(cfg.batch_size)) {
            const std::size_t stop = std::min(ntr, start + std::size_t(cfg.batch_size));
            for (int l = 0; l < GradientNet::kLayers; ++l) {
                std::fill(gw[l].begin(), gw[l].end(), 0.0);
                std::fill(gb[l].begin(), gb[l].end(), 0.0);
            }
            for (std::size_t k = start; k < stop; ++k) {
                const std::size_t i = tr[k];
                const double out = forward_std(net, x_std[i], act);
                backprop(net, act, 2.0 * (out - y_std[i]), gw, gb);
            }
            for (int l = 0; l < GradientNet::kLayers; ++l) {
                for (std::size_t p = 0; p < gw[l].size(); ++p)
                    net.weights[l][p] -= cfg.learning_rate * gw[l][p];
                for (std::size_t p = 0; p < gb[l].size(); ++p)
                    net.biases[l][p] -= cfg.learning_rate * gb[l][p];
            }
        }
        const double loss = dataset_mse_std(net, x_std, y_std, tr);
        if (!std::isfinite(loss))
            throw TrainingDivergedError("training loss became non-finite", epoch);
        report.per_epoch_loss.push_back(loss);
    }

    double max_abs_target = 0.0;
    for (std::size_t k : tr) max_abs_target = std::max(max_abs_target, std::abs(data.targets[k]));
    if (max_abs_target > 0.0) net.output_clamp = 3.0 * max_abs_target;

    if (!ho.empty()) {
        std::vector<double> y_ho(ho.size());
        for (std::size_t k = 0; k < ho.size(); ++k) y_ho[k] = data.targets[ho[k]];
        const double ybar = mean(y_ho);
        std::vector<double> sse(ho.size()), sst(ho.size());
        for (std::size_t k = 0; k < ho.size(); ++k) {
            const double pred =
                forward_std(net, x_std[ho[k]], act) * net.target_scaler.std + net.target_scaler.mean;
            sse[k] = (pred - y_ho[k]) * (pred - y_ho[k]);
            sst[k] = (y_ho[k] - ybar) * (y_ho[k] - ybar);
        }
        const double denom = pairwise_sum(sst);
        report.final_holdout_r2 = denom > 0.0 ? 1.0 - pairwise_sum(sse) / denom : 0.0;
    }
    return report;
}

double gradient_check(const GradientNet& net, const GradientDataset& data, int probes,
                      std::uint64_t probe_seed) {
    if (probes < 1) throw ParameterError("gradient_check needs probes >= 1");
    const std::size_t n = data.inputs.size();
    if (n == 0 || data.targets.size() != n)
        throw ParameterError("gradient_check needs a nonempty paired dataset");

    std::vector<double> x_std(n), y_std(n);
    for (std::size_t i = 0; i < n; ++i) {
        x_std[i] = (data.inputs[i] - net.input_scaler.mean) / net.input_scaler.std;
        y_std[i] = (data.targets[i] - net.target_scaler.mean) / net.target_scaler.std;
    }
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);

    // Analytic gradient of the dataset-mean squared error.
    GradientNet work = net;
    std::array<std::vector<double>, GradientNet::kLayers> gw, gb;
    for (int l = 0; l < GradientNet::kLayers; ++l) {
        gw[l].assign(work.weights[l].size(), 0.0);
        gb[l].assign(work.biases[l].size(), 0.0);
    }
    std::array<std::vector<double>, 6> act;
    for (std::size_t i = 0; i < n; ++i) {
        const double out = forward_std(work, x_std[i], act);
        backprop(work, act, 2.0 * (out - y_std[i]) / double(n), gw, gb);
    }

    struct Slot {
        bool is_weight;
        int layer;
        std::size_t pos;
    };
    std::vector<Slot> slots;
    for (int l = 0; l < GradientNet::kLayers; ++l) {
        for (std::size_t p = 0; p < work.weights[l].size(); ++p) slots.push_back({true, l, p});
        for (std::size_t p = 0; p < work.biases[l].size(); ++p) slots.push_back({false, l, p});
    }

    Rng rng(probe_seed);
    constexpr double step = 1e-6;
    double worst = 0.0;
    for (int k = 0; k < probes; ++k) {
        const Slot& s = slots[std::size_t(rng.uniform01() * double(slots.size())) % slots.size()];
        double& theta = s.is_weight ? work.weights[s.layer][s.pos] : work.biases[s.layer][s.pos];
        const double saved = theta;
        theta = saved + step;
        const double lp = dataset_mse_std(work, x_std, y_std, all);
        theta = saved - step;
        const double lm = dataset_mse_std(work, x_std, y_std, all);
        theta = saved;
        const double numeric = (lp - lm) / (2.0 * step);
        const double analytic = s.is_weight ? gw[s.layer][s.pos] : gb[s.layer][s.pos];
        const double rel =
            std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), 1.0);
        worst = std::max(worst, rel);
    }
    return worst;
}

void save_model(const GradientNet& net, const std::string& path) {
    std::ostringstream os;
    os << "dnnaf-model 1\n";
    os << "layers";
    for (int d : D) os << " " << d;
    os << "\nactivation tanh\n";
    os << "input_scaler " << fmt(net.input_scaler.mean) << " " << fmt(net.input_scaler.std) << "\n";
    os << "target_scaler " << fmt(net.target_scaler.mean) << " " << fmt(net.target_scaler.std)
       << "\n";
    os << "clamp " << fmt(net.output_clamp) << "\n";
    for (int l = 0; l < GradientNet::kLayers; ++l) {
        os << "layer " << l << " w";
        for (double w : net.weights[l]) os << " " << fmt(w);
        os << " b";
        for (double b : net.biases[l]) os << " " << fmt(b);
        os << "\n";
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open model file for writing: " + path);
    f << os.str();
    if (!f) throw IoError("short write to model file: " + path);
}

namespace {

// Tolerates ERANGE underflow like the CSV readers: a full-precision dump of a
// subnormal weight must load back.
double expect_number(std::istream& in, const char* field) {
    std::string tok;
    if (!(in >> tok)) throw FormatError(std::string("model file truncated at field '") + field + "'");
    const char* begin = tok.c_str();
    char* end = nullptr;
    errno = 0;
    const double x = std::strtod(begin, &end);
    const bool overflow = errno == ERANGE && std::abs(x) == HUGE_VAL;
    if (tok.empty() || end != begin + tok.size() || overflow)
        throw FormatError(std::string("bad number '") + tok + "' in field '" + field + "'");
    return x;
}

void expect_literal(std::istream& in, const std::string& want, const char* field) {
    std::string tok;
    if (!(in >> tok) || tok != want)
        throw FormatError(std::string("expected '") + want + "' in field '" + field + "', got '" +
                          tok + "'");
}

} // namespace

GradientNet load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open model file: " + path);
    expect_literal(f, "dnnaf-model", "magic");
    expect_literal(f, "1", "format version");
    expect_literal(f, "layers", "layers");
    for (int d : D) {
        const double got = expect_number(f, "layers");
        if (int(got) != d)
            throw FormatError("unsupported layer_dims (expected 1 32 16 8 4 1)");
    }
    expect_literal(f, "activation", "activation");
    expect_literal(f, "tanh", "activation");
    GradientNet net;
    expect_literal(f, "input_scaler", "input_scaler");
    net.input_scaler.mean = expect_number(f, "input_scaler.mean");
    net.input_scaler.std = expect_number(f, "input_scaler.std");
    expect_literal(f, "target_scaler", "target_scaler");
    net.target_scaler.mean = expect_number(f, "target_scaler.mean");
    net.target_scaler.std = expect_number(f, "target_scaler.std");
    expect_literal(f, "clamp", "clamp");
    net.output_clamp = expect_number(f, "clamp");
    for (int l = 0; l < GradientNet::kLayers; ++l) {
        expect_literal(f, "layer", "layer");
        if (int(expect_number(f, "layer index")) != l)
            throw FormatError("layer blocks out of order (expected layer " + std::to_string(l) + ")");
        expect_literal(f, "w", "layer weights");
        for (auto& w : net.weights[l]) w = expect_number(f, "weight");
        expect_literal(f, "b", "layer biases");
        for (auto& b : net.biases[l]) b = expect_number(f, "bias");
    }
    if (!(net.input_scaler.std > 0.0) || !(net.target_scaler.std > 0.0))
        throw FormatError("scaler std must be strictly positive");
    for (int l = 0; l < GradientNet::kLayers; ++l)
        for (double w : net.weights[l])
            if (!std::isfinite(w)) throw FormatError("non-finite weight in layer " + std::to_string(l));
    return net;
}

} // namespace dnnaf
