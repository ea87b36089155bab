#pragma once

#include "spowl/common.hpp"

namespace spowl {

struct StepResult {
    Vec obs;
    double reward = 0.0;
    double cost = 0.0;
    bool done = false;
};

class Env {
public:
    virtual ~Env() = default;
    virtual Vec reset(std::uint64_t seed) = 0;
    virtual StepResult step(const Vec& action) = 0;
    virtual int obs_dim() const = 0;
    virtual int action_dim() const = 0;
    virtual int episode_limit() const = 0;
};

}  // namespace spowl
