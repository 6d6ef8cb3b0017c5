#include "dnnaf/noise.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "dnnaf/errors.hpp"
#include "dnnaf/rng.hpp"

namespace dnnaf {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794; // 1/sqrt(2*pi)

double normal_pdf(double v, double mean, double std) {
    const double z = (v - mean) / std;
    return kInvSqrt2Pi / std * std::exp(-0.5 * z * z);
}

double normal_cdf(double v, double mean, double std) {
    return 0.5 * std::erfc(-(v - mean) / (std * 1.41421356237309504880));
}

void validate(const GaussianMixture& m) {
    if (m.components.empty())
        throw ParameterError("gaussian mixture needs at least one component");
    double wsum = 0.0;
    for (const auto& c : m.components) {
        if (!(c.weight > 0.0) || c.weight > 1.0)
            throw ParameterError("mixture weight must lie in (0,1]");
        if (!(c.std > 0.0))
            throw ParameterError("mixture component std must be positive");
        wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-12)
        throw ParameterError("mixture weights must sum to 1 (got " + std::to_string(wsum) + ")");
}

void validate(const UniformNoise& u) {
    if (!(u.lower < u.upper))
        throw ParameterError("uniform noise needs lower < upper");
}

void validate(const RayleighNoise& r) {
    if (!(r.scale > 0.0))
        throw ParameterError("rayleigh scale must be positive");
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace

NoiseModel::NoiseModel(GaussianMixture m) : v_(std::move(m)) {
    validate(std::get<GaussianMixture>(v_));
}
NoiseModel::NoiseModel(UniformNoise u) : v_(u) { validate(u); }
NoiseModel::NoiseModel(RayleighNoise r) : v_(r) { validate(r); }

NoiseModel NoiseModel::impulse() {
    return NoiseModel(GaussianMixture{{{0.9, 0.0, 0.1}, {0.1, 0.0, 5.0}}});
}
NoiseModel NoiseModel::uniform() { return NoiseModel(UniformNoise{-2.0, 2.0}); }
NoiseModel NoiseModel::skewed() { return NoiseModel(RayleighNoise{8.0}); }
NoiseModel NoiseModel::multipeak() {
    return NoiseModel(GaussianMixture{{{0.5, -3.0, 2.0}, {0.5, 3.0, 2.0}}});
}

const std::vector<std::string>& NoiseModel::preset_names() {
    static const std::vector<std::string> names = {"impulse", "uniform", "skewed", "multipeak"};
    return names;
}

NoiseModel NoiseModel::preset(const std::string& name) {
    if (name == "impulse") return impulse();
    if (name == "uniform") return uniform();
    if (name == "skewed") return skewed();
    if (name == "multipeak") return multipeak();
    std::string valid;
    for (const auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ParameterError("unknown noise preset '" + name + "' (valid: " + valid + ")");
}

std::string NoiseModel::describe() const {
    std::ostringstream os;
    if (const auto* m = std::get_if<GaussianMixture>(&v_)) {
        os << "gaussian-mixture[";
        for (std::size_t i = 0; i < m->components.size(); ++i) {
            const auto& c = m->components[i];
            os << (i ? ";" : "") << "(" << fmt(c.weight) << "," << fmt(c.mean) << ","
               << fmt(c.std) << ")";
        }
        os << "]";
    } else if (const auto* u = std::get_if<UniformNoise>(&v_)) {
        os << "uniform[" << fmt(u->lower) << "," << fmt(u->upper) << "]";
    } else {
        os << "rayleigh[" << fmt(std::get<RayleighNoise>(v_).scale) << "]";
    }
    return os.str();
}

NoiseModel NoiseModel::parse(const std::string& descriptor) {
    const auto lb = descriptor.find('[');
    const auto rb = descriptor.rfind(']');
    if (lb == std::string::npos || rb == std::string::npos || rb < lb)
        throw FormatError("malformed noise descriptor: " + descriptor);
    const std::string kind = descriptor.substr(0, lb);
    const std::string body = descriptor.substr(lb + 1, rb - lb - 1);
    auto parse_num = [&](const std::string& s) {
        std::size_t pos = 0;
        double x = 0;
        try {
            x = std::stod(s, &pos);
        } catch (const std::exception&) {
            throw FormatError("bad number '" + s + "' in noise descriptor");
        }
        if (pos != s.size())
            throw FormatError("bad number '" + s + "' in noise descriptor");
        return x;
    };
    if (kind == "uniform") {
        const auto comma = body.find(',');
        if (comma == std::string::npos)
            throw FormatError("uniform descriptor needs two bounds: " + descriptor);
        return NoiseModel(UniformNoise{parse_num(body.substr(0, comma)),
                                       parse_num(body.substr(comma + 1))});
    }
    if (kind == "rayleigh") return NoiseModel(RayleighNoise{parse_num(body)});
    if (kind == "gaussian-mixture") {
        GaussianMixture m;
        std::size_t pos = 0;
        while (pos < body.size()) {
            if (body[pos] != '(')
                throw FormatError("malformed mixture component in: " + descriptor);
            const auto close = body.find(')', pos);
            if (close == std::string::npos)
                throw FormatError("unterminated mixture component in: " + descriptor);
            std::string triple = body.substr(pos + 1, close - pos - 1);
            const auto c1 = triple.find(',');
            const auto c2 = triple.find(',', c1 == std::string::npos ? 0 : c1 + 1);
            if (c1 == std::string::npos || c2 == std::string::npos)
                throw FormatError("mixture component needs (weight,mean,std): " + descriptor);
            m.components.push_back({parse_num(triple.substr(0, c1)),
                                    parse_num(triple.substr(c1 + 1, c2 - c1 - 1)),
                                    parse_num(triple.substr(c2 + 1))});
            pos = close + 1;
            if (pos < body.size() && body[pos] == ';') ++pos;
        }
        return NoiseModel(std::move(m));
    }
    throw FormatError("unknown noise kind '" + kind + "'");
}

double sample_one(const NoiseModel& model, Rng& rng) {
    if (const auto* m = std::get_if<GaussianMixture>(&model.variant())) {
        const double u = rng.uniform01();
        double acc = 0.0;
        const MixtureComponent* pick = &m->components.back();
        for (const auto& c : m->components) {
            acc += c.weight;
            if (u < acc) {
                pick = &c;
                break;
            }
        }
        return rng.normal(pick->mean, pick->std);
    }
    if (const auto* u = std::get_if<UniformNoise>(&model.variant()))
        return rng.uniform(u->lower, u->upper);
    const double scale = std::get<RayleighNoise>(model.variant()).scale;
    return scale * std::sqrt(-2.0 * std::log1p(-rng.uniform01()));
}

NoiseSampleSet sample(const NoiseModel& model, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw ParameterError("sample count must be >= 1");
    Rng rng(seed);
    NoiseSampleSet out;
    out.samples.resize(n);
    out.model_tag = model.describe();
    out.seed = seed;
    for (auto& v : out.samples) v = sample_one(model, rng);
    return out;
}

double analytic_pdf(const NoiseModel& model, double v) {
    if (const auto* m = std::get_if<GaussianMixture>(&model.variant())) {
        double p = 0.0;
        for (const auto& c : m->components) p += c.weight * normal_pdf(v, c.mean, c.std);
        return p;
    }
    if (const auto* u = std::get_if<UniformNoise>(&model.variant())) {
        return (v >= u->lower && v <= u->upper) ? 1.0 / (u->upper - u->lower) : 0.0;
    }
    const double s = std::get<RayleighNoise>(model.variant()).scale;
    if (v < 0.0) return 0.0;
    return v / (s * s) * std::exp(-0.5 * v * v / (s * s));
}

double analytic_pdf_derivative(const NoiseModel& model, double v) {
    if (const auto* m = std::get_if<GaussianMixture>(&model.variant())) {
        double d = 0.0;
        for (const auto& c : m->components)
            d += c.weight * (-(v - c.mean) / (c.std * c.std)) * normal_pdf(v, c.mean, c.std);
        return d;
    }
    if (const auto* u = std::get_if<UniformNoise>(&model.variant())) {
        if (v == u->lower || v == u->upper)
            throw UndefinedPointError("uniform density is not differentiable at its boundary");
        return 0.0;
    }
    const double s = std::get<RayleighNoise>(model.variant()).scale;
    if (v == 0.0)
        throw UndefinedPointError("rayleigh density has a kink at 0");
    if (v < 0.0) return 0.0;
    const double s2 = s * s;
    return std::exp(-0.5 * v * v / s2) / s2 * (1.0 - v * v / s2);
}

double analytic_cdf(const NoiseModel& model, double v) {
    if (const auto* m = std::get_if<GaussianMixture>(&model.variant())) {
        double p = 0.0;
        for (const auto& c : m->components) p += c.weight * normal_cdf(v, c.mean, c.std);
        return p;
    }
    if (const auto* u = std::get_if<UniformNoise>(&model.variant())) {
        if (v <= u->lower) return 0.0;
        if (v >= u->upper) return 1.0;
        return (v - u->lower) / (u->upper - u->lower);
    }
    const double s = std::get<RayleighNoise>(model.variant()).scale;
    if (v <= 0.0) return 0.0;
    return -std::expm1(-0.5 * v * v / (s * s));
}

double analytic_mean(const NoiseModel& model) {
    if (const auto* m = std::get_if<GaussianMixture>(&model.variant())) {
        double mu = 0.0;
        for (const auto& c : m->components) mu += c.weight * c.mean;
        return mu;
    }
    if (const auto* u = std::get_if<UniformNoise>(&model.variant()))
        return 0.5 * (u->lower + u->upper);
    const double s = std::get<RayleighNoise>(model.variant()).scale;
    return s * std::sqrt(3.141592653589793238462643383279502884 / 2.0);
}

double analytic_variance(const NoiseModel& model) {
    if (const auto* m = std::get_if<GaussianMixture>(&model.variant())) {
        const double mu = analytic_mean(model);
        double second = 0.0;
        for (const auto& c : m->components)
            second += c.weight * (c.std * c.std + c.mean * c.mean);
        return second - mu * mu;
    }
    if (const auto* u = std::get_if<UniformNoise>(&model.variant())) {
        const double w = u->upper - u->lower;
        return w * w / 12.0;
    }
    const double s = std::get<RayleighNoise>(model.variant()).scale;
    return (2.0 - 3.141592653589793238462643383279502884 / 2.0) * s * s;
}

} // namespace dnnaf
