#pragma once

// Shared builders for tests that drive the library end to end.

#include "pulselabel/activity.hpp"
#include "pulselabel/service.hpp"
#include "pulselabel/simulator.hpp"

#include <memory>

namespace fixture {

// Small, quickly trained activity model; good enough for sit/walk windows.
inline std::shared_ptr<const pulselabel::activity::ActivityModel> small_model() {
    static const auto model = [] {
        pulselabel::sim::DatasetOptions o;
        o.subjects = 2;
        o.days = 1.0;
        o.seed = 3;
        pulselabel::forest::ForestParams p;
        p.n_trees = 12;
        return std::make_shared<const pulselabel::activity::ActivityModel>(
            pulselabel::activity::train_activity_model(
                pulselabel::activity::simulated_corpus(pulselabel::sim::make_cohort(o), 2), p, 3));
    }();
    return model;
}

// One region and no quota: every usable sample after the initial phase
// triggers.
inline pulselabel::ServiceConfig always_trigger(std::size_t n_initial = 10) {
    pulselabel::ServiceConfig c;
    c.engine.n_initial = n_initial;
    c.engine.k_regions = 1;
    c.engine.quota = 0;
    return c;
}

inline pulselabel::SamplePayload sit_window(const pulselabel::sim::SubjectProfile& p,
                                            std::size_t slot) {
    pulselabel::sim::WindowOverrides ov;
    ov.activity = pulselabel::Context::Sit;
    ov.noise_scale = 0.02;
    return pulselabel::sim::generate_window(p, slot, ov).payload;
}

}  // namespace fixture
