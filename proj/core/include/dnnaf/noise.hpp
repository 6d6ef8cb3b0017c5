#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace dnnaf {

struct MixtureComponent {
    double weight;
    double mean;
    double std;
};

struct GaussianMixture {
    std::vector<MixtureComponent> components;
};

struct UniformNoise {
    double lower;
    double upper;
};

// Density (v/scale^2)·exp(-v^2/2·scale^2) on v >= 0. Not centered: the mean
// is scale·sqrt(pi/2), and the harness documents that the zero-mean premise
// of the mean-square analysis does not hold in this environment.
struct RayleighNoise {
    double scale;
};

class NoiseModel {
public:
    using Variant = std::variant<GaussianMixture, UniformNoise, RayleighNoise>;

    NoiseModel(GaussianMixture m);   // validates invariants, throws ParameterError
    NoiseModel(UniformNoise u);
    NoiseModel(RayleighNoise r);

    const Variant& variant() const { return v_; }

    // The four canonical test environments.
    static NoiseModel impulse();     // 0.9·N(0,0.1^2) + 0.1·N(0,5^2)
    static NoiseModel uniform();     // U(-2,2)
    static NoiseModel skewed();      // Rayleigh, scale 8
    static NoiseModel multipeak();   // 0.5·N(-3,2^2) + 0.5·N(3,2^2)

    // Preset lookup by name {impulse, uniform, skewed, multipeak};
    // unknown name -> ParameterError listing the valid names.
    static NoiseModel preset(const std::string& name);
    static const std::vector<std::string>& preset_names();

    // Canonical descriptor, stable across runs; used in CSV headers and
    // parseable back via NoiseModel::parse.
    std::string describe() const;
    static NoiseModel parse(const std::string& descriptor);

private:
    Variant v_;
};

struct NoiseSampleSet {
    std::vector<double> samples;
    std::string model_tag;   // NoiseModel::describe() of the source
    std::uint64_t seed;
};

// One draw from the model, advancing the given generator. Draw order
// (normative for reproducibility): mixture takes one uniform (component
// select by cumulative weight) then one normal (two uniforms); uniform takes
// one uniform; Rayleigh takes one uniform through the inverse CDF
// scale·sqrt(-2·ln(1-u)).
class Rng;
double sample_one(const NoiseModel& model, Rng& rng);

// n i.i.d. draws from a fresh generator seeded with `seed`.
NoiseSampleSet sample(const NoiseModel& model, std::size_t n, std::uint64_t seed);

// Exact closed forms, used as test oracles and as the analytic expectation
// source in the theory module.
double analytic_pdf(const NoiseModel& model, double v);

// Derivative of the density. Uniform: 0 off the boundary, UndefinedPointError
// exactly at a boundary. Rayleigh: kink at 0 -> UndefinedPointError there.
double analytic_pdf_derivative(const NoiseModel& model, double v);

double analytic_cdf(const NoiseModel& model, double v);

// E[v] and Var[v] in closed form (test oracles).
double analytic_mean(const NoiseModel& model);
double analytic_variance(const NoiseModel& model);

} // namespace dnnaf
