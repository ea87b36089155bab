#pragma once

#include "spowl/model_interface.hpp"

namespace spowl {

enum class ActionSource { Plan, Policy };

struct Decision {
    Vec action;
    ActionSource source = ActionSource::Policy;
    double q_plan = 0.0, q_policy = 0.0;
    double qc_plan = 0.0, qc_policy = 0.0;
};

/// Value-comparison switch between the planner's action and the
/// policy's deterministic action: the plan wins iff it is at least as
/// good on reward value and at most as costly on cost value (ties favor
/// the plan).
Decision choose(const Vec& z, const Vec& a_plan, const ActionSampler& policy,
                const DynamicsModel& model);

}  // namespace spowl
