// dnnaf — command-line front end for the DNN-driven adaptive-filtering toolkit.
//
// Subcommands: noise-gen, kde-fit, train, theory, run, compare, fig2, fig3,
// fig4. Flags, config keys, file formats, and exit codes are documented in
// REFERENCE.md. Every subcommand is deterministic given its flags and seeds,
// byte-identical outputs included, for any --threads value.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "dnnaf/errors.hpp"
#include "dnnaf/filters.hpp"
#include "dnnaf/gradnet.hpp"
#include "dnnaf/harness.hpp"
#include "dnnaf/io.hpp"
#include "dnnaf/kde.hpp"
#include "dnnaf/math.hpp"
#include "dnnaf/noise.hpp"
#include "dnnaf/theory.hpp"
#include "parity.hpp"

namespace fs = std::filesystem;
using namespace dnnaf;

namespace {

// Exit codes (documented in REFERENCE.md).
constexpr int kOk = 0;
constexpr int kInternal = 1;
constexpr int kUsage = 2;
constexpr int kConfig = 3;
constexpr int kDiverged = 4;
constexpr int kIo = 5;
constexpr int kData = 6;

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct Common {
    unsigned threads = default_threads();
    bool verbose = false;
};

void note(const Common& c, const std::string& msg) {
    if (c.verbose) std::cerr << msg << "\n";
}

NoiseModel model_from_flags(const std::string& preset, const std::string& descriptor) {
    if (!preset.empty() && !descriptor.empty())
        throw ParameterError("--preset and --noise are mutually exclusive");
    if (!preset.empty()) return NoiseModel::preset(preset);
    if (!descriptor.empty()) {
        try {
            return NoiseModel::parse(descriptor);
        } catch (const FormatError& e) {
            throw ParameterError(e.what()); // bad flag value = usage error
        }
    }
    throw ParameterError("one of --preset or --noise is required");
}

std::vector<double> parse_eta_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ParameterError("bad eta value '" + tok + "'");
        }
        if (out.back() <= 0.0) throw ParameterError("eta values must be positive");
    }
    if (out.empty()) throw ParameterError("empty eta list");
    return out;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
}

// Train a preset's gradient network exactly like `fig2`/`fig4` do, caching
// the model file under `dir` so repeated figure runs reuse it.
struct TrainedModel {
    GradientNet net;
    double holdout_r2 = 0.0;
    double bandwidth = 0.0;
    bool from_cache = false;
};

TrainedModel train_preset_model(const std::string& preset, const std::string& dir,
                                std::uint64_t noise_seed, std::size_t n, unsigned threads,
                                bool use_cache) {
    TrainedModel out;
    const fs::path cache = fs::path(dir) / (preset + ".model");
    if (use_cache && fs::exists(cache)) {
        out.net = load_model(cache.string());
        out.from_cache = true;
        return out;
    }
    const NoiseModel model = NoiseModel::preset(preset);
    const NoiseSampleSet samples = sample(model, n, noise_seed);
    const GradientDataset data = build_gradient_dataset(samples, std::nullopt, threads);
    out.bandwidth = data.bandwidth_used;
    out.net = init_network(24);
    TrainConfig cfg;
    cfg.init_seed = 24;
    cfg.shuffle_seed = 2;
    const TrainReport report = train(out.net, data, cfg);
    out.holdout_r2 = report.final_holdout_r2;
    ensure_dir(dir);
    save_model(out.net, cache.string());
    return out;
}

std::vector<std::string> experiment_header(const ExperimentConfig& cfg) {
    std::vector<std::string> h;
    h.push_back("model=" + cfg.noise.describe());
    h.push_back("M=" + std::to_string(cfg.M) + " sigma_u=" + fmt(cfg.sigma_u) +
                " iterations=" + std::to_string(cfg.iterations) +
                " trials=" + std::to_string(cfg.trials));
    h.push_back("master_seed=" + std::to_string(cfg.master_seed) +
                " divergence_threshold=" + fmt(cfg.divergence_threshold));
    for (const auto& a : cfg.algorithms) {
        std::string line = "algorithm=" + a.effective_label() + " eta=" + fmt(a.eta);
        if (a.algo == Algorithm::MCC) line += " sigma=" + fmt(a.mcc_kernel_width);
        if (a.algo == Algorithm::MEE)
            line += " window=" + std::to_string(a.mee_window) + " sigma=" + fmt(a.mee_kernel_width);
        if (a.algo == Algorithm::DNNAF)
            line += " pretrain_len=" + std::to_string(a.pretrain_len) +
                    " eta_pretrain=" + fmt(a.eta_pretrain);
        h.push_back(line);
    }
    return h;
}

void report_steady_states(const std::vector<MsdCurve>& curves) {
    for (const auto& c : curves) {
        std::cout << c.algorithm_tag << ": ";
        if (c.msd_db.empty()) {
            std::cout << "all " << c.diverged_trials << " trials diverged\n";
            continue;
        }
        try {
            std::cout << "steady-state MSD " << fmt(steady_state_of(c)) << " dB";
        } catch (const NotConvergedError&) {
            std::cout << "no plateau (final-10% mean "
                      << fmt(mean(std::span<const double>(
                             c.msd_db.data() + c.msd_db.size() - c.msd_db.size() / 10,
                             c.msd_db.size() / 10)))
                      << " dB)";
        }
        if (c.diverged_trials > 0) std::cout << " [" << c.diverged_trials << " diverged]";
        std::cout << "\n";
    }
}

// ---------------------------------------------------------------- noise-gen
int cmd_noise_gen(const Common& common, const std::string& preset, const std::string& descriptor,
                  std::size_t n, std::uint64_t seed, const std::string& out) {
    (void)common;
    const NoiseModel model = model_from_flags(preset, descriptor);
    if (n < 1) throw ParameterError("--n must be >= 1");
    const NoiseSampleSet set = sample(model, n, seed);
    write_noise_csv(out, set);
    std::cout << "wrote " << n << " samples (" << model.describe() << ") to " << out << "\n";
    return kOk;
}

// ------------------------------------------------------------------ kde-fit
int cmd_kde_fit(const Common& common, const std::string& in, std::optional<double> bandwidth,
                const std::string& out) {
    const NoiseSampleSet set = read_noise_csv(in);
    const GradientDataset data = build_gradient_dataset(set, bandwidth, common.threads);
    write_dataset_csv(out, data, set.model_tag);
    std::cout << "bandwidth " << fmt(data.bandwidth_used) << ", " << data.inputs.size()
              << " pairs to " << out << "\n";
    return kOk;
}

// -------------------------------------------------------------------- train
int cmd_train(const Common& common, const std::string& in, const std::string& out_model,
              const TrainConfig& cfg) {
    (void)common;
    const GradientDataset data = read_dataset_csv(in);
    GradientNet net = init_network(cfg.init_seed);
    const TrainReport report = train(net, data, cfg);
    save_model(net, out_model);
    std::cout << "final holdout R2 = " << fmt(report.final_holdout_r2) << "\n";
    std::cout << "final epoch loss = " << fmt(report.per_epoch_loss.back()) << " (standardized)\n";
    std::cout << "model written to " << out_model << "\n";
    return kOk;
}

// ------------------------------------------------------------------- theory
int cmd_theory(const Common& common, const std::string& preset, const std::string& descriptor,
               const std::string& source_name_flag, const std::string& model_path,
               const std::string& samples_path, const std::string& etas_csv, int M,
               double sigma_u, long n_mc, std::uint64_t seed, const std::string& out) {
    const NoiseModel model = model_from_flags(preset, descriptor);
    const std::vector<double> etas = parse_eta_list(etas_csv);

    std::unique_ptr<KdeModel> kde;
    std::unique_ptr<GradientNet> net;
    DerivativeSource source = AnalyticSource{};
    if (source_name_flag == "analytic") {
        // default
    } else if (source_name_flag == "kde") {
        if (samples_path.empty())
            throw ConfigError("--source kde needs --samples <noise CSV>");
        const NoiseSampleSet set = read_noise_csv(samples_path);
        kde = std::make_unique<KdeModel>(set.samples, silverman_bandwidth(set.samples));
        source = KdeSource{kde.get()};
    } else if (source_name_flag == "gradnet") {
        if (model_path.empty())
            throw ConfigError("--source gradnet needs --model <model file>");
        net = std::make_unique<GradientNet>(load_model(model_path));
        source = GradnetSource{net.get()};
    } else {
        throw ParameterError("--source must be one of analytic, kde, gradnet");
    }

    const NoiseExpectations exp =
        estimate_expectations(model, source, n_mc, seed, common.threads);
    note(common, "E[p'(v)/v] = " + fmt(exp.e_ratio) + ", E[(p'(v)/v)^2] = " + fmt(exp.e_ratio_sq) +
                     ", E[(p'(v))^2] = " + fmt(exp.e_deriv_sq));

    double eta_max = std::numeric_limits<double>::quiet_NaN();
    try {
        eta_max = max_step_size(exp, sigma_u * sigma_u);
        std::cout << "eta_max = " << fmt(eta_max) << "\n";
    } catch (const BoundUndefinedError& e) {
        std::cout << "eta_max withheld: " << e.what() << "\n";
    }

    std::vector<TheoryRow> rows;
    for (double eta : etas) {
        TheoryRow row{model.describe(), exp.source,       eta,
                      M,                sigma_u * sigma_u, 0.0,
                      0.0,              eta_max};
        const SteadyStatePrediction p = steady_state_msd(exp, eta, M, sigma_u * sigma_u);
        row.predicted_msd = p.msd;
        row.predicted_msd_db = p.msd_db;
        std::cout << "eta = " << fmt(eta) << ": predicted steady-state MSD " << fmt(p.msd_db)
                  << " dB\n";
        rows.push_back(row);
    }
    write_theory_csv(out, rows);
    std::cout << "theory rows written to " << out << "\n";
    return kOk;
}

// --------------------------------------------------------------------- run
int cmd_run(const Common& common, const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed_override, std::optional<int> dump_trial) {
    const ExperimentFile file = parse_experiment_file(config_path);

    // Load every referenced model once, keyed by path.
    std::map<std::string, std::unique_ptr<GradientNet>> nets;
    for (const auto& a : file.algorithms) {
        if (a.algo != Algorithm::DNNAF) continue;
        if (a.model_path.empty())
            throw ConfigError(config_path + ": dnnaf algorithm entry needs model=<path>");
        if (!nets.count(a.model_path)) {
            if (!fs::exists(a.model_path))
                throw ConfigError("model file not found: " + a.model_path);
            nets[a.model_path] = std::make_unique<GradientNet>(load_model(a.model_path));
        }
    }

    ExperimentConfig cfg(file.noise);
    cfg.M = file.M;
    cfg.sigma_u = file.sigma_u;
    cfg.w_o = file.w_o;
    cfg.iterations = file.iterations;
    cfg.trials = file.trials;
    cfg.master_seed = seed_override.value_or(file.master_seed);
    cfg.divergence_threshold = file.divergence_threshold;
    cfg.threads = common.threads;
    for (const auto& a : file.algorithms) {
        AlgoSpec s;
        s.algo = a.algo;
        s.label = a.label;
        s.eta = a.eta;
        s.mcc_kernel_width = a.mcc_kernel_width;
        s.mee_window = a.mee_window;
        s.mee_kernel_width = a.mee_kernel_width;
        s.pretrain_len = a.pretrain_len;
        s.eta_pretrain = a.eta_pretrain.value_or(a.eta);
        if (a.algo == Algorithm::DNNAF) s.net = nets[a.model_path].get();
        cfg.algorithms.push_back(s);
    }

    ensure_dir(out_dir);
    const std::vector<MsdCurve> curves = run_experiment(cfg);
    const fs::path csv = fs::path(out_dir) / "curves.csv";
    write_curves_csv(csv.string(), curves, experiment_header(cfg));
    std::vector<std::string> labels;
    for (const auto& c : curves) labels.push_back(c.algorithm_tag);
    write_gnuplot_script((fs::path(out_dir) / "curves.gp").string(), "curves.csv",
                         cfg.noise.describe(), labels);
    report_steady_states(curves);
    std::cout << "curves written to " << csv.string() << "\n";

    if (dump_trial) {
        // Debug trajectories: one (iteration, e_i, deviation^2) CSV per algorithm.
        if (*dump_trial < 0 || *dump_trial >= cfg.trials)
            throw ParameterError("--dump-trial index out of range");
        cfg.record_residuals = true;
        for (const auto& spec : cfg.algorithms) {
            const TrialResult r = run_trial(cfg, spec, *dump_trial);
            const fs::path p = fs::path(out_dir) / ("trial" + std::to_string(*dump_trial) + "_" +
                                                    spec.effective_label() + ".csv");
            write_trial_csv(p.string(), r, spec.effective_label());
            note(common, "trajectory dump: " + p.string());
        }
    }
    return kOk;
}

// ------------------------------------------------------------------ compare
int cmd_compare(const Common& common, const std::string& preset, const std::string& algos_csv,
                const std::string& etas_csv, long iterations, int trials, std::uint64_t seed,
                const std::string& out_dir, const std::string& model_path) {
    const tuned::EnvDefaults defaults = tuned::for_preset(preset);

    std::vector<Algorithm> algos;
    {
        std::stringstream ss(algos_csv);
        std::string tok;
        while (std::getline(ss, tok, ',')) algos.push_back(algorithm_from_name(tok));
    }
    if (algos.empty()) throw ParameterError("--algorithms list is empty");

    std::vector<double> etas;
    if (!etas_csv.empty()) {
        etas = parse_eta_list(etas_csv);
        if (etas.size() != algos.size())
            throw ParameterError("--etas must list one value per --algorithms entry");
    }

    ensure_dir(out_dir);
    TrainedModel trained;
    const bool needs_net =
        std::any_of(algos.begin(), algos.end(), [](Algorithm a) { return a == Algorithm::DNNAF; });
    std::unique_ptr<GradientNet> loaded;
    const GradientNet* net = nullptr;
    if (needs_net) {
        if (!model_path.empty()) {
            if (!fs::exists(model_path)) throw ConfigError("model file not found: " + model_path);
            loaded = std::make_unique<GradientNet>(load_model(model_path));
            net = loaded.get();
        } else {
            trained = train_preset_model(preset, out_dir, 1, 5000, common.threads, true);
            net = &trained.net;
            if (!trained.from_cache)
                std::cout << "trained " << preset << " model (holdout R2 "
                          << fmt(trained.holdout_r2) << ")\n";
        }
    }

    ExperimentConfig cfg(NoiseModel::preset(preset));
    cfg.iterations = iterations > 0 ? iterations : defaults.iterations;
    cfg.trials = trials;
    cfg.master_seed = seed;
    cfg.threads = common.threads;
    for (std::size_t k = 0; k < algos.size(); ++k) {
        AlgoSpec s = tuned::spec_for(algos[k], defaults, net);
        if (!etas.empty()) s.eta = etas[k];
        cfg.algorithms.push_back(s);
    }

    const std::vector<MsdCurve> curves = run_experiment(cfg);
    const fs::path csv = fs::path(out_dir) / ("compare_" + preset + ".csv");
    write_curves_csv(csv.string(), curves, experiment_header(cfg));
    std::vector<std::string> labels;
    for (const auto& c : curves) labels.push_back(c.algorithm_tag);
    write_gnuplot_script((fs::path(out_dir) / ("compare_" + preset + ".gp")).string(),
                         csv.filename().string(), preset, labels);
    report_steady_states(curves);
    std::cout << "curves written to " << csv.string() << "\n";
    return kOk;
}

// --------------------------------------------------------------------- fig2
int cmd_fig2(const Common& common, const std::string& preset_flag, std::size_t n,
             std::uint64_t seed, const std::string& out_dir) {
    std::vector<std::string> presets;
    if (preset_flag == "all") {
        presets = NoiseModel::preset_names();
    } else {
        NoiseModel::preset(preset_flag); // validates the name
        presets.push_back(preset_flag);
    }
    ensure_dir(out_dir);
    for (const auto& preset : presets) {
        const NoiseModel model = NoiseModel::preset(preset);
        const NoiseSampleSet samples = sample(model, n, seed);
        const GradientDataset data = build_gradient_dataset(samples, std::nullopt, common.threads);
        GradientNet net = init_network(24);
        TrainConfig tcfg;
        tcfg.init_seed = 24;
        tcfg.shuffle_seed = 2;
        const TrainReport report = train(net, data, tcfg);
        save_model(net, (fs::path(out_dir) / (preset + ".model")).string());

        double lo = samples.samples[0], hi = samples.samples[0];
        for (double v : samples.samples) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const int npts = 401;
        std::vector<double> grid(npts);
        for (int i = 0; i < npts; ++i)
            grid[i] = lo + (hi - lo) * double(i) / double(npts - 1);
        KdeModel kde(samples.samples, data.bandwidth_used);
        const std::vector<double> kde_d = evaluate_derivative_on_grid(kde, grid, common.threads);

        const fs::path csv = fs::path(out_dir) / ("fig2_" + preset + ".csv");
        std::ofstream f(csv, std::ios::binary);
        if (!f) throw IoError("cannot open for writing: " + csv.string());
        f << "# model=" << model.describe() << " n=" << n << " h=" << fmt(data.bandwidth_used)
          << " seed=" << seed << " holdout_r2=" << fmt(report.final_holdout_r2) << "\n";
        f << "v,kde_derivative,net_derivative\n";
        for (int i = 0; i < npts; ++i)
            f << fmt(grid[i]) << "," << fmt(kde_d[std::size_t(i)]) << ","
              << fmt(forward(net, grid[i])) << "\n";
        if (!f) throw IoError("short write: " + csv.string());
        std::cout << preset << ": holdout R2 = " << fmt(report.final_holdout_r2) << ", "
                  << csv.string() << "\n";
    }
    return kOk;
}

// --------------------------------------------------------------------- fig3
int cmd_fig3(const Common& common, const std::string& preset, const std::string& etas_csv,
             long iterations, int trials, std::uint64_t seed, long n_mc,
             const std::string& out_dir) {
    const std::vector<double> etas = parse_eta_list(etas_csv);
    ensure_dir(out_dir);
    const TrainedModel trained = train_preset_model(preset, out_dir, 1, 5000, common.threads, true);
    if (!trained.from_cache)
        std::cout << "trained " << preset << " model (holdout R2 " << fmt(trained.holdout_r2)
                  << ")\n";
    const NoiseModel model = NoiseModel::preset(preset);

    // Theory rows from both the analytic closed form and the net itself.
    std::vector<TheoryRow> rows;
    for (const char* src_name : {"analytic", "gradnet"}) {
        DerivativeSource src = AnalyticSource{};
        if (std::string(src_name) == "gradnet") src = GradnetSource{&trained.net};
        NoiseExpectations exp;
        try {
            exp = estimate_expectations(model, src, n_mc, seed, common.threads);
        } catch (const UndefinedPointError&) {
            continue; // e.g. a uniform preset draw on a kink under the analytic source
        }
        double eta_max = std::numeric_limits<double>::quiet_NaN();
        try {
            eta_max = max_step_size(exp, 1.0);
        } catch (const BoundUndefinedError&) {}
        for (double eta : etas) {
            TheoryRow row{model.describe(), exp.source, eta, 5, 1.0, 0.0, 0.0, eta_max};
            const SteadyStatePrediction p = steady_state_msd(exp, eta, 5, 1.0);
            row.predicted_msd = p.msd;
            row.predicted_msd_db = p.msd_db;
            rows.push_back(row);
        }
    }
    const fs::path theory_csv = fs::path(out_dir) / ("fig3_" + preset + "_theory.csv");
    write_theory_csv(theory_csv.string(), rows);

    // One DNN-AF run per step size, same trials/streams for each.
    ExperimentConfig cfg(model);
    cfg.iterations = iterations;
    cfg.trials = trials;
    cfg.master_seed = seed;
    cfg.threads = common.threads;
    const double eta_pre = tuned::for_preset(preset).lms_eta;
    for (double eta : etas) {
        AlgoSpec s;
        s.algo = Algorithm::DNNAF;
        s.eta = eta;
        s.net = &trained.net;
        s.pretrain_len = 500;
        s.eta_pretrain = eta_pre;
        s.label = "dnnaf_eta" + fmt(eta);
        cfg.algorithms.push_back(s);
    }
    const std::vector<MsdCurve> curves = run_experiment(cfg);
    auto header = experiment_header(cfg);
    for (const auto& r : rows)
        header.push_back("theory " + r.source + " eta=" + fmt(r.eta) +
                         " predicted_msd_db=" + fmt(r.predicted_msd_db));
    const fs::path csv = fs::path(out_dir) / ("fig3_" + preset + ".csv");
    write_curves_csv(csv.string(), curves, header);
    std::vector<std::string> labels;
    for (const auto& c : curves) labels.push_back(c.algorithm_tag);
    write_gnuplot_script((fs::path(out_dir) / ("fig3_" + preset + ".gp")).string(),
                         csv.filename().string(), preset + " (theory overlay in CSV header)",
                         labels);
    report_steady_states(curves);
    std::cout << "curves written to " << csv.string() << ", theory to " << theory_csv.string()
              << "\n";
    return kOk;
}

// --------------------------------------------------------------------- fig4
int cmd_fig4(const Common& common, int trials, std::uint64_t seed, const std::string& out_dir) {
    ensure_dir(out_dir);
    for (const auto& preset : NoiseModel::preset_names()) {
        const tuned::EnvDefaults defaults = tuned::for_preset(preset);
        const TrainedModel trained =
            train_preset_model(preset, out_dir, 1, 5000, common.threads, true);
        if (!trained.from_cache)
            std::cout << "trained " << preset << " model (holdout R2 " << fmt(trained.holdout_r2)
                      << ")\n";

        ExperimentConfig cfg(NoiseModel::preset(preset));
        cfg.iterations = defaults.iterations;
        cfg.trials = trials;
        cfg.master_seed = seed;
        cfg.threads = common.threads;
        for (Algorithm a : {Algorithm::DNNAF, Algorithm::LMS, Algorithm::LMF, Algorithm::MCC,
                            Algorithm::MEE})
            cfg.algorithms.push_back(tuned::spec_for(a, defaults, &trained.net));

        const std::vector<MsdCurve> curves = run_experiment(cfg);
        const fs::path csv = fs::path(out_dir) / ("fig4_" + preset + ".csv");
        write_curves_csv(csv.string(), curves, experiment_header(cfg));
        std::vector<std::string> labels;
        for (const auto& c : curves) labels.push_back(c.algorithm_tag);
        write_gnuplot_script((fs::path(out_dir) / ("fig4_" + preset + ".gp")).string(),
                             csv.filename().string(), preset, labels);
        std::cout << "== " << preset << " ==\n";
        report_steady_states(curves);
    }
    std::cout << "fig4 outputs in " << out_dir << "\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DNN-driven adaptive filtering toolkit"};
    app.require_subcommand(1);
    Common common;
    app.add_option("--threads", common.threads, "worker threads (default: machine parallelism)");
    app.add_flag("--verbose", common.verbose, "extra progress output on stderr");

    // noise-gen
    std::string ng_preset, ng_noise, ng_out = "noise.csv";
    std::size_t ng_n = 5000;
    std::uint64_t ng_seed = 1;
    auto* ng = app.add_subcommand("noise-gen", "draw noise samples to a CSV");
    ng->add_option("--preset", ng_preset, "impulse|uniform|skewed|multipeak");
    ng->add_option("--noise", ng_noise, "explicit model descriptor");
    ng->add_option("--n", ng_n, "sample count")->capture_default_str();
    ng->add_option("--seed", ng_seed, "generator seed")->capture_default_str();
    ng->add_option("--out", ng_out, "output CSV path")->capture_default_str();

    // kde-fit
    std::string kf_in, kf_out = "dataset.csv";
    double kf_bandwidth = 0.0;
    auto* kf = app.add_subcommand("kde-fit", "build the PDF-derivative dataset from samples");
    kf->add_option("--in", kf_in, "noise sample CSV")->required();
    kf->add_option("--bandwidth", kf_bandwidth, "override Silverman bandwidth");
    kf->add_option("--out", kf_out, "output dataset CSV")->capture_default_str();

    // train
    std::string tr_in, tr_out = "gradnet.model";
    TrainConfig tr_cfg;
    tr_cfg.init_seed = 24;
    tr_cfg.shuffle_seed = 2;
    auto* tr = app.add_subcommand("train", "train the gradient network on a dataset CSV");
    tr->add_option("--in", tr_in, "dataset CSV")->required();
    tr->add_option("--out", tr_out, "output model file")->capture_default_str();
    tr->add_option("--lr", tr_cfg.learning_rate, "learning rate")->capture_default_str();
    tr->add_option("--epochs", tr_cfg.epochs, "epochs")->capture_default_str();
    tr->add_option("--batch", tr_cfg.batch_size, "batch size")->capture_default_str();
    tr->add_option("--init-seed", tr_cfg.init_seed, "init seed")->capture_default_str();
    tr->add_option("--shuffle-seed", tr_cfg.shuffle_seed, "shuffle seed")->capture_default_str();

    // theory
    std::string th_preset, th_noise, th_source = "analytic", th_model, th_samples,
                th_etas = "0.0001,0.0002", th_out = "theory.csv";
    int th_M = 5;
    double th_sigma_u = 1.0;
    long th_nmc = 1000000;
    std::uint64_t th_seed = 1;
    auto* th = app.add_subcommand("theory", "step-size bound and steady-state MSD predictions");
    th->add_option("--preset", th_preset, "impulse|uniform|skewed|multipeak");
    th->add_option("--noise", th_noise, "explicit model descriptor");
    th->add_option("--source", th_source, "analytic|kde|gradnet")->capture_default_str();
    th->add_option("--model", th_model, "model file (gradnet source)");
    th->add_option("--samples", th_samples, "noise CSV (kde source)");
    th->add_option("--etas", th_etas, "comma-separated step sizes")->capture_default_str();
    th->add_option("--M", th_M, "filter length")->capture_default_str();
    th->add_option("--sigma-u", th_sigma_u, "input std")->capture_default_str();
    th->add_option("--n-mc", th_nmc, "Monte Carlo draws")->capture_default_str();
    th->add_option("--seed", th_seed, "Monte Carlo seed")->capture_default_str();
    th->add_option("--out", th_out, "output CSV")->capture_default_str();

    // run
    std::string run_config, run_out = ".";
    std::uint64_t run_seed = 0;
    bool run_seed_set = false;
    int run_dump_trial = -1;
    auto* rn = app.add_subcommand("run", "run an experiment config file");
    rn->add_option("--config", run_config, "experiment config file")->required();
    rn->add_option("--out", run_out, "output directory")->capture_default_str();
    rn->add_option("--seed", run_seed, "override master_seed")
        ->each([&](const std::string&) { run_seed_set = true; });
    rn->add_option("--dump-trial", run_dump_trial,
                   "debug: also write per-iteration (residual, deviation^2) for this trial index")
        ->check(CLI::NonNegativeNumber);

    // compare
    std::string cp_preset = "impulse", cp_algos = "dnnaf,lms,lmf,mcc,mee", cp_etas, cp_out = ".",
                cp_model;
    long cp_iters = 0;
    int cp_trials = 100;
    std::uint64_t cp_seed = 42;
    auto* cp = app.add_subcommand("compare", "tuned-default comparison in one environment");
    cp->add_option("--preset", cp_preset, "noise environment")->capture_default_str();
    cp->add_option("--algorithms", cp_algos, "comma-separated list")->capture_default_str();
    cp->add_option("--etas", cp_etas, "per-algorithm step sizes (default: tuned)");
    cp->add_option("--iterations", cp_iters, "iterations (default: per-environment)");
    cp->add_option("--trials", cp_trials, "trials")->capture_default_str();
    cp->add_option("--seed", cp_seed, "master seed")->capture_default_str();
    cp->add_option("--model", cp_model, "model file for dnnaf (default: auto-train)");
    cp->add_option("--out", cp_out, "output directory")->capture_default_str();

    // fig2
    std::string f2_preset = "all", f2_out = "fig2";
    std::size_t f2_n = 5000;
    std::uint64_t f2_seed = 1;
    auto* f2 = app.add_subcommand("fig2", "KDE vs net derivative fits per preset");
    f2->add_option("--preset", f2_preset, "preset name or 'all'")->capture_default_str();
    f2->add_option("--n", f2_n, "samples per preset")->capture_default_str();
    f2->add_option("--seed", f2_seed, "noise seed")->capture_default_str();
    f2->add_option("--out", f2_out, "output directory")->capture_default_str();

    // fig3
    std::string f3_preset = "impulse", f3_etas = "0.0001,0.0002", f3_out = "fig3";
    long f3_iters = 5000, f3_nmc = 1000000;
    int f3_trials = 100;
    std::uint64_t f3_seed = 42;
    auto* f3 = app.add_subcommand("fig3", "DNN-AF step-size sweep with theory overlay");
    f3->add_option("--preset", f3_preset, "noise environment")->capture_default_str();
    f3->add_option("--etas", f3_etas, "comma-separated step sizes")->capture_default_str();
    f3->add_option("--iterations", f3_iters, "iterations")->capture_default_str();
    f3->add_option("--trials", f3_trials, "trials")->capture_default_str();
    f3->add_option("--seed", f3_seed, "master seed")->capture_default_str();
    f3->add_option("--n-mc", f3_nmc, "Monte Carlo draws for theory rows")->capture_default_str();
    f3->add_option("--out", f3_out, "output directory")->capture_default_str();

    // fig4
    std::string f4_out = "fig4";
    int f4_trials = 100;
    std::uint64_t f4_seed = 42;
    auto* f4 = app.add_subcommand("fig4", "four-environment algorithm comparison");
    f4->add_option("--trials", f4_trials, "trials")->capture_default_str();
    f4->add_option("--seed", f4_seed, "master seed")->capture_default_str();
    f4->add_option("--out", f4_out, "output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return kUsage;
    }

    try {
        if (*ng) return cmd_noise_gen(common, ng_preset, ng_noise, ng_n, ng_seed, ng_out);
        if (*kf)
            return cmd_kde_fit(common, kf_in,
                               kf->count("--bandwidth") ? std::optional<double>(kf_bandwidth)
                                                        : std::nullopt,
                               kf_out);
        if (*tr) return cmd_train(common, tr_in, tr_out, tr_cfg);
        if (*th)
            return cmd_theory(common, th_preset, th_noise, th_source, th_model, th_samples,
                              th_etas, th_M, th_sigma_u, th_nmc, th_seed, th_out);
        if (*rn)
            return cmd_run(common, run_config, run_out,
                           run_seed_set ? std::optional<std::uint64_t>(run_seed) : std::nullopt,
                           run_dump_trial >= 0 ? std::optional<int>(run_dump_trial) : std::nullopt);
        if (*cp)
            return cmd_compare(common, cp_preset, cp_algos, cp_etas, cp_iters, cp_trials, cp_seed,
                               cp_out, cp_model);
        if (*f2) return cmd_fig2(common, f2_preset, f2_n, f2_seed, f2_out);
        if (*f3)
            return cmd_fig3(common, f3_preset, f3_etas, f3_iters, f3_trials, f3_seed, f3_nmc,
                            f3_out);
        if (*f4) return cmd_fig4(common, f4_trials, f4_seed, f4_out);
        std::cerr << "no subcommand\n";
        return kUsage;
    } catch (const TrainingDivergedError& e) {
        std::cerr << "error: " << e.what() << " (epoch " << e.epoch << ")\n";
        return kDiverged;
    } catch (const InstabilityPredictedError& e) {
        std::cerr << "error: " << e.what() << " (denominator " << e.denominator << ")\n";
        return kDiverged;
    } catch (const BoundUndefinedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDiverged;
    } catch (const NotConvergedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDiverged;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfig;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    } catch (const DegenerateSampleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const UndefinedPointError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInternal;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
}
