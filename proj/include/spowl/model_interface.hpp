#pragma once

#include "spowl/common.hpp"

namespace spowl {

/// Read-only model surface the planner and decision rule work against.
/// Implemented by the learned WorldModel and by hand-built exact models
/// in oracle tests. All batch arguments are column-per-candidate.
class DynamicsModel {
public:
    virtual ~DynamicsModel() = default;
    virtual int latent_dim() const = 0;
    virtual int action_dim() const = 0;
    virtual Vec encode_obs(const Vec& obs) const = 0;
    virtual Mat next(const Mat& z, const Mat& a) const = 0;
    virtual Vec reward(const Mat& z, const Mat& a) const = 0;
    // Per-step cost estimate: max over the cost-head ensemble.
    virtual Vec cost_max(const Mat& z, const Mat& a) const = 0;
    // Ensemble-average value heads used by planning and switching.
    virtual Vec value_avg(const Mat& z, const Mat& a) const = 0;
    virtual Vec cost_value_avg(const Mat& z, const Mat& a) const = 0;
    virtual double gamma() const = 0;
    virtual double gamma_c() const = 0;
};

/// Action source the planner rolls out for its policy prior.
class ActionSampler {
public:
    virtual ~ActionSampler() = default;
    virtual Mat sample(const Mat& z, Rng& rng) const = 0;
    virtual Mat mean_action(const Mat& z) const = 0;
};

}  // namespace spowl
