#include "spowl/decision.hpp"

namespace spowl {

Decision choose(const Vec& z, const Vec& a_plan, const ActionSampler& policy,
                const DynamicsModel& model) {
    Decision d;
    Vec a_policy = policy.mean_action(Mat(z)).col(0);
    Mat zz(z.size(), 2);
    zz.col(0) = z;
    zz.col(1) = z;
    Mat aa(a_plan.size(), 2);
    aa.col(0) = a_plan;
    aa.col(1) = a_policy;
    Vec q = model.value_avg(zz, aa);
    Vec qc = model.cost_value_avg(zz, aa);
    d.q_plan = q(0);
    d.q_policy = q(1);
    d.qc_plan = qc(0);
    d.qc_policy = qc(1);
    if (d.q_plan >= d.q_policy && d.qc_plan <= d.qc_policy) {
        d.source = ActionSource::Plan;
        d.action = a_plan;
    } else {
        d.source = ActionSource::Policy;
        d.action = a_policy;
    }
    return d;
}

}  // namespace spowl
