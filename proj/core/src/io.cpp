#include "dnnaf/io.hpp"

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "dnnaf/errors.hpp"

namespace dnnaf {

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// RFC-4180 quoting for cells that would otherwise break the column count
// (model descriptors contain commas).
std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    q += '"';
    return q;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);
    return f;
}

// strtod rather than std::stod: stod throws on ERANGE, which glibc also sets
// for subnormal results, and our own full-precision writers can emit those.
// Underflow keeps the (denormal or zero) value; only syntax errors and
// overflow are rejected.
double parse_double(const std::string& s, const std::string& where) {
    const char* begin = s.c_str();
    char* end = nullptr;
    errno = 0;
    const double x = std::strtod(begin, &end);
    const bool overflow = errno == ERANGE && std::abs(x) == HUGE_VAL;
    if (s.empty() || end != begin + s.size() || overflow)
        throw FormatError("bad number '" + s + "' in " + where);
    return x;
}

long parse_long(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        const long x = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return x;
    } catch (const std::exception&) {
        throw FormatError("bad integer '" + s + "' in " + where);
    }
}

std::uint64_t parse_u64(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        const unsigned long long x = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return x;
    } catch (const std::exception&) {
        throw FormatError("bad seed '" + s + "' in " + where);
    }
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

// Header comments look like "# key=value ..." — pull one key out.
std::string header_value(const std::string& line, const std::string& key) {
    const std::string want = key + "=";
    std::size_t pos = line.find(want);
    if (pos == std::string::npos) return {};
    pos += want.size();
    std::size_t end = pos;
    // model descriptors contain no spaces; everything else is a single token
    while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
    return line.substr(pos, end - pos);
}

} // namespace

void write_noise_csv(const std::string& path, const NoiseSampleSet& set) {
    auto f = open_out(path);
    f << "# model=" << set.model_tag << " seed=" << set.seed << " n=" << set.samples.size()
      << "\n";
    f << "index,value\n";
    for (std::size_t i = 0; i < set.samples.size(); ++i)
        f << i << "," << fmt(set.samples[i]) << "\n";
    if (!f) throw IoError("short write: " + path);
}

NoiseSampleSet read_noise_csv(const std::string& path) {
    auto f = open_in(path);
    NoiseSampleSet out;
    out.seed = 0;
    std::string line;
    bool saw_header = false;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string model = header_value(line, "model");
            if (!model.empty()) out.model_tag = model;
            const std::string seed = header_value(line, "seed");
            if (!seed.empty()) out.seed = parse_u64(seed, path);
            continue;
        }
        if (!saw_header) {
            if (trim(line) != "index,value")
                throw FormatError(path + ": expected 'index,value' header, got '" + line + "'");
            saw_header = true;
            continue;
        }
        const auto cells = split(line, ',');
        if (cells.size() != 2)
            throw FormatError(path + ":" + std::to_string(lineno) + ": expected 2 columns");
        out.samples.push_back(parse_double(cells[1], path));
    }
    if (!saw_header) throw FormatError(path + ": missing 'index,value' header");
    return out;
}

void write_dataset_csv(const std::string& path, const GradientDataset& data,
                       const std::string& model_tag) {
    auto f = open_out(path);
    f << "# model=" << model_tag << " n=" << data.inputs.size() << " h="
      << fmt(data.bandwidth_used) << "\n";
    f << "input,target\n";
    for (std::size_t i = 0; i < data.inputs.size(); ++i)
        f << fmt(data.inputs[i]) << "," << fmt(data.targets[i]) << "\n";
    if (!f) throw IoError("short write: " + path);
}

GradientDataset read_dataset_csv(const std::string& path) {
    auto f = open_in(path);
    GradientDataset out;
    out.bandwidth_used = 0.0;
    std::string line;
    bool saw_header = false;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string h = header_value(line, "h");
            if (!h.empty()) out.bandwidth_used = parse_double(h, path);
            continue;
        }
        if (!saw_header) {
            if (trim(line) != "input,target")
                throw FormatError(path + ": expected 'input,target' header, got '" + line + "'");
            saw_header = true;
            continue;
        }
        const auto cells = split(line, ',');
        if (cells.size() != 2)
            throw FormatError(path + ":" + std::to_string(lineno) + ": expected 2 columns");
        out.inputs.push_back(parse_double(cells[0], path));
        out.targets.push_back(parse_double(cells[1], path));
    }
    if (!saw_header) throw FormatError(path + ": missing 'input,target' header");
    return out;
}

void write_curves_csv(const std::string& path, const std::vector<MsdCurve>& curves,
                      const std::vector<std::string>& header_comments) {
    if (curves.empty()) throw ParameterError("no curves to write");
    auto f = open_out(path);
    for (const auto& c : header_comments) f << "# " << c << "\n";
    std::size_t iters = 0;
    for (const auto& c : curves) iters = std::max(iters, c.msd_db.size());
    std::ostringstream head;
    head << "iteration";
    for (const auto& c : curves) {
        head << "," << c.algorithm_tag;
        if (c.diverged_trials > 0)
            f << "# diverged_trials " << c.algorithm_tag << "=" << c.diverged_trials << "\n";
    }
    f << head.str() << "\n";
    for (std::size_t i = 0; i < iters; ++i) {
        f << (i + 1);
        for (const auto& c : curves)
            f << "," << (i < c.msd_db.size() ? fmt(c.msd_db[i]) : "nan");
        f << "\n";
    }
    if (!f) throw IoError("short write: " + path);
}

CurvesFile read_curves_csv(const std::string& path) {
    auto f = open_in(path);
    CurvesFile out;
    std::string line;
    bool saw_header = false;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto cells = split(line, ',');
        if (!saw_header) {
            if (cells.size() < 2 || cells[0] != "iteration")
                throw FormatError(path + ": expected 'iteration,<label>...' header");
            out.labels.assign(cells.begin() + 1, cells.end());
            out.columns.assign(out.labels.size(), {});
            saw_header = true;
            continue;
        }
        if (cells.size() != out.labels.size() + 1)
            throw FormatError(path + ":" + std::to_string(lineno) + ": column count mismatch");
        out.iterations.push_back(parse_long(cells[0], path));
        for (std::size_t k = 0; k < out.labels.size(); ++k)
            out.columns[k].push_back(parse_double(cells[k + 1], path));
    }
    if (!saw_header) throw FormatError(path + ": no header row");
    return out;
}

MsdCurve curve_from_file(const CurvesFile& file, const std::string& label) {
    for (std::size_t k = 0; k < file.labels.size(); ++k) {
        if (file.labels[k] != label) continue;
        MsdCurve c;
        c.algorithm_tag = label;
        c.msd_db = file.columns[k];
        c.msd_linear.resize(c.msd_db.size());
        for (std::size_t i = 0; i < c.msd_db.size(); ++i)
            c.msd_linear[i] = std::pow(10.0, c.msd_db[i] / 10.0);
        return c;
    }
    throw ParameterError("no curve labeled '" + label + "' in file");
}

void write_trial_csv(const std::string& path, const TrialResult& trial,
                     const std::string& label) {
    if (trial.residuals.size() != trial.deviation_sq.size())
        throw ParameterError("trial has no recorded residuals (record_residuals was off)");
    auto f = open_out(path);
    f << "# algorithm=" << label << " diverged=" << (trial.diverged ? 1 : 0);
    if (trial.diverged) f << " diverged_at=" << trial.diverged_at;
    f << "\n";
    f << "iteration,residual,deviation_sq\n";
    for (std::size_t i = 0; i < trial.deviation_sq.size(); ++i)
        f << (i + 1) << "," << fmt(trial.residuals[i]) << "," << fmt(trial.deviation_sq[i]) << "\n";
    if (!f) throw IoError("short write: " + path);
}

void write_theory_csv(const std::string& path, const std::vector<TheoryRow>& rows) {
    auto f = open_out(path);
    f << "model,source,eta,M,sigma_u_sq,predicted_msd,predicted_msd_db,eta_max\n";
    for (const auto& r : rows) {
        f << csv_cell(r.model) << "," << csv_cell(r.source) << "," << fmt(r.eta) << "," << r.M << ","
          << fmt(r.sigma_u_sq) << "," << fmt(r.predicted_msd) << "," << fmt(r.predicted_msd_db)
          << "," << fmt(r.eta_max) << "\n";
    }
    if (!f) throw IoError("short write: " + path);
}

void write_gnuplot_script(const std::string& script_path, const std::string& csv_name,
                          const std::string& title, const std::vector<std::string>& labels) {
    auto f = open_out(script_path);
    f << "set datafile separator \",\"\n";
    f << "set title \"" << title << "\"\n";
    f << "set xlabel \"iteration\"\nset ylabel \"MSD (dB)\"\nset key top right\nset grid\n";
    f << "plot";
    for (std::size_t k = 0; k < labels.size(); ++k) {
        f << (k ? ", " : " ") << "\"" << csv_name << "\" using 1:" << (k + 2)
          << " with lines title \"" << labels[k] << "\"";
    }
    f << "\npause -1\n";
    if (!f) throw IoError("short write: " + script_path);
}

namespace {

AlgoFileEntry parse_algorithm_line(const std::string& value, const std::string& path) {
    const auto toks = split_ws(value);
    if (toks.empty()) throw ConfigError(path + ": empty algorithm entry");
    AlgoFileEntry e;
    try {
        e.algo = algorithm_from_name(toks[0]);
    } catch (const ParameterError& pe) {
        throw ConfigError(path + ": " + pe.what());
    }
    for (std::size_t k = 1; k < toks.size(); ++k) {
        const auto eq = toks[k].find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ": algorithm option '" + toks[k] + "' is not name=value");
        const std::string name = toks[k].substr(0, eq);
        const std::string val = toks[k].substr(eq + 1);
        if (name == "eta") e.eta = parse_double(val, path);
        else if (name == "eta_pretrain") e.eta_pretrain = parse_double(val, path);
        else if (name == "sigma") {
            if (e.algo == Algorithm::MCC) e.mcc_kernel_width = parse_double(val, path);
            else if (e.algo == Algorithm::MEE) e.mee_kernel_width = parse_double(val, path);
            else throw ConfigError(path + ": 'sigma' only applies to mcc/mee");
        } else if (name == "window") {
            if (e.algo != Algorithm::MEE) throw ConfigError(path + ": 'window' only applies to mee");
            e.mee_window = int(parse_long(val, path));
        } else if (name == "pretrain_len") e.pretrain_len = parse_long(val, path);
        else if (name == "model") e.model_path = val;
        else if (name == "label") e.label = val;
        else throw ConfigError(path + ": unknown algorithm option '" + name + "'");
    }
    return e;
}

} // namespace

ExperimentFile parse_experiment_file(const std::string& path) {
    auto f = open_in(path);
    ExperimentFile out;
    bool noise_set = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string where = path + ":" + std::to_string(lineno);
        try {
            if (key == "preset") {
                out.noise = NoiseModel::preset(value);
                noise_set = true;
            } else if (key == "noise") {
                out.noise = NoiseModel::parse(value);
                noise_set = true;
            } else if (key == "M") out.M = int(parse_long(value, where));
            else if (key == "sigma_u") out.sigma_u = parse_double(value, where);
            else if (key == "iterations") out.iterations = parse_long(value, where);
            else if (key == "trials") out.trials = int(parse_long(value, where));
            else if (key == "master_seed") out.master_seed = parse_u64(value, where);
            else if (key == "divergence_threshold")
                out.divergence_threshold = parse_double(value, where);
            else if (key == "w_o") {
                out.w_o.clear();
                for (const auto& tok : split_ws(value)) out.w_o.push_back(parse_double(tok, where));
            } else if (key == "algorithm") {
                out.algorithms.push_back(parse_algorithm_line(value, where));
            } else {
                throw ConfigError(where + ": unknown key '" + key + "'");
            }
        } catch (const FormatError& fe) {
            throw ConfigError(fe.what());
        } catch (const ParameterError& pe) {
            throw ConfigError(where + ": " + pe.what());
        }
    }
    if (!noise_set)
        throw ConfigError(path + ": missing noise environment ('preset' or 'noise' key)");
    if (out.algorithms.empty()) throw ConfigError(path + ": no 'algorithm' entries");
    return out;
}

} // namespace dnnaf
