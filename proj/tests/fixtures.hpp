#pragma once

// Trained-net fixtures shared across test files. Training a preset net takes
// a couple of seconds, so each is built once per test binary and cached.

#include <map>
#include <string>

#include "dnnaf/gradnet.hpp"
#include "dnnaf/kde.hpp"
#include "dnnaf/math.hpp"
#include "dnnaf/noise.hpp"

namespace dnnaf_test {

struct PresetFixture {
    dnnaf::NoiseSampleSet set;
    dnnaf::GradientDataset data;
    dnnaf::GradientNet net;
    dnnaf::TrainReport report;
};

// Default pipeline: 5000 samples (noise seed 1), Silverman bandwidth,
// init seed 1, shuffle seed 2 — the same recipe the CLI uses by default.
inline const PresetFixture& preset_fixture(const std::string& name) {
    static std::map<std::string, PresetFixture> cache;
    auto it = cache.find(name);
    if (it == cache.end()) {
        PresetFixture f;
        f.set = dnnaf::sample(dnnaf::NoiseModel::preset(name), 5000, 1);
        f.data = dnnaf::build_gradient_dataset(f.set, std::nullopt, dnnaf::default_threads());
        f.net = dnnaf::init_network(24);
        dnnaf::TrainConfig cfg;
        cfg.shuffle_seed = 2;
        cfg.init_seed = 24;
        f.report = dnnaf::train(f.net, f.data, cfg);
        it = cache.emplace(name, std::move(f)).first;
    }
    return it->second;
}

// Smaller standard-Gaussian fixture for update-direction statistics.
inline const PresetFixture& gaussian_fixture() {
    static PresetFixture* f = [] {
        auto* p = new PresetFixture;
        dnnaf::NoiseModel gauss{dnnaf::GaussianMixture{{{1.0, 0.0, 1.0}}}};
        p->set = dnnaf::sample(gauss, 2000, 3);
        p->data = dnnaf::build_gradient_dataset(p->set, std::nullopt, dnnaf::default_threads());
        p->net = dnnaf::init_network(24);
        dnnaf::TrainConfig cfg;
        cfg.shuffle_seed = 2;
        cfg.init_seed = 24;
        p->report = dnnaf::train(p->net, p->data, cfg);
        return p;
    }();
    return *f;
}

}  // namespace dnnaf_test
