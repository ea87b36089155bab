#include "spowl/world_model.hpp"

#include <istream>
#include <ostream>

namespace spowl {

void WorldModelConfig::validate() const {
    if (obs_dim < 1 || action_dim < 1) throw ConfigError("WorldModel: obs/action dims required");
    if (latent_dim < 2 || simnorm_group < 2 || latent_dim % simnorm_group != 0)
        throw ConfigError("WorldModel: simnorm group must divide the latent width");
    if (num_q < 1 || num_cost < 1 || num_qc < 1) throw ConfigError("WorldModel: empty ensemble");
    if (gamma < 0.0 || gamma >= 1.0 || gamma_c < 0.0 || gamma_c >= 1.0)
        throw ConfigError("WorldModel: discounts must lie in [0,1)");
    if (lambda <= 0.0 || lambda > 1.0) throw ConfigError("WorldModel: lambda in (0,1]");
    if (horizon < 0) throw ConfigError("WorldModel: horizon must be >= 0");
    if (tau <= 0.0 || tau > 1.0) throw ConfigError("WorldModel: tau in (0,1]");
    bins.validate();
}

WorldModel::WorldModel(WorldModelConfig cfg, std::uint64_t init_seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(init_seed);
    int za = cfg_.latent_dim + cfg_.action_dim;
    encoder_ = DenseNet({cfg_.obs_dim, cfg_.hidden, cfg_.latent_dim}, Activation::Mish,
                        Activation::SimNorm, rng, cfg_.simnorm_group);
    dynamics_ = DenseNet({za, cfg_.hidden, cfg_.latent_dim}, Activation::Mish,
                         Activation::SimNorm, rng, cfg_.simnorm_group);
    // Head logits start near zero so untrained predictions decode to ~0.
    reward_ = DenseNet({za, cfg_.hidden, cfg_.bins.count}, Activation::Mish,
                       Activation::Linear, rng, 0, 0.01);
    auto make_heads = [&](int n) {
        std::vector<DenseNet> heads;
        for (int i = 0; i < n; ++i)
            heads.emplace_back(std::vector<int>{za, cfg_.hidden, cfg_.bins.count},
                               Activation::Mish, Activation::Linear, rng, 0, 0.01);
        return heads;
    };
    q_ = make_heads(cfg_.num_q);
    cost_ = make_heads(cfg_.num_cost);
    qc_ = make_heads(cfg_.num_qc);
    q_target_ = q_;
    qc_target_ = qc_;
    if (cfg_.decoder_enabled)
        decoder_ = DenseNet({cfg_.latent_dim, cfg_.hidden, cfg_.obs_dim}, Activation::Mish,
                            Activation::Linear, rng);
}

Mat WorldModel::encode(const Mat& obs) const { return encoder_.forward(obs); }
Vec WorldModel::encode(const Vec& obs) const { return encoder_.forward(obs); }

Mat WorldModel::head_input(const Mat& z, const Mat& a) const {
    Mat za(z.rows() + a.rows(), z.cols());
    za.topRows(z.rows()) = z;
    za.bottomRows(a.rows()) = a;
    return za;
}

Vec WorldModel::predict_next(const Vec& z, const Vec& a) const {
    return dynamics_.forward(Vec(head_input(Mat(z), Mat(a)).col(0)));
}

Mat WorldModel::next(const Mat& z, const Mat& a) const {
    return dynamics_.forward(head_input(z, a));
}

double WorldModel::predict_reward(const Vec& z, const Vec& a) const {
    return reward(Mat(z), Mat(a))(0);
}

Vec WorldModel::reward(const Mat& z, const Mat& a) const {
    return decode_head(reward_.forward(head_input(z, a)), cfg_.bins);
}

Vec WorldModel::predict_cost_heads(const Vec& z, const Vec& a) const {
    Mat za = head_input(Mat(z), Mat(a));
    Vec out(cfg_.num_cost);
    for (int i = 0; i < cfg_.num_cost; ++i)
        out(i) = decode_head(cost_[static_cast<size_t>(i)].forward(za), cfg_.bins)(0);
    return out;
}

Vec WorldModel::decode_scalar_heads(const std::vector<DenseNet>& heads, const Mat& z,
                                    const Mat& a, bool average) const {
    Mat za = head_input(z, a);
    Vec acc;
    for (size_t i = 0; i < heads.size(); ++i) {
        Vec v = decode_head(heads[i].forward(za), cfg_.bins);
        if (i == 0)
            acc = v;
        else if (average)
            acc += v;
        else
            acc = acc.cwiseMax(v);
    }
    if (average) acc /= static_cast<double>(heads.size());
    return acc;
}

Vec WorldModel::cost_max(const Mat& z, const Mat& a) const {
    return decode_scalar_heads(cost_, z, a, /*average=*/false);
}

Vec WorldModel::value_avg(const Mat& z, const Mat& a) const {
    return decode_scalar_heads(q_, z, a, /*average=*/true);
}

Vec WorldModel::cost_value_avg(const Mat& z, const Mat& a) const {
    return decode_scalar_heads(qc_, z, a, /*average=*/true);
}

Vec WorldModel::value_min2(const Mat& z, const Mat& a, Rng& rng) const {
    if (cfg_.num_q < 2) throw ConfigError("value_min2 needs at least 2 value heads");
    std::uniform_int_distribution<int> pick(0, cfg_.num_q - 1);
    int i = pick(rng);
    int j = pick(rng);
    while (j == i) j = pick(rng);
    Mat za = head_input(z, a);
    Vec vi = decode_head(q_[static_cast<size_t>(i)].forward(za), cfg_.bins);
    Vec vj = decode_head(q_[static_cast<size_t>(j)].forward(za), cfg_.bins);
    return vi.cwiseMin(vj);
}

double WorldModel::value_reward(const Vec& z, const Vec& a, ValueMode mode, Rng& rng) const {
    if (mode == ValueMode::Avg) return value_avg(Mat(z), Mat(a))(0);
    return value_min2(Mat(z), Mat(a), rng)(0);
}

double WorldModel::value_cost(const Vec& z, const Vec& a) const {
    return cost_value_avg(Mat(z), Mat(a))(0);
}

std::pair<Mat, Mat> WorldModel::td_targets(const SegmentBatch& batch,
                                           const ActionSampler& policy, Rng& rng) const {
    int H = batch.horizon();
    int B = batch.batch;
    Mat q_t(H + 1, B), qc_t(H + 1, B);

    // Latent rollout with the online nets; targets themselves come from
    // the EMA copies, so nothing here carries gradient.
    Mat z = encode(batch.obs[0]);
    std::uniform_int_distribution<int> pick(0, cfg_.num_q - 1);
    for (int t = 0; t <= H; ++t) {
        Mat z_next = next(z, batch.actions[static_cast<size_t>(t)]);
        Mat a_next = policy.sample(z_next, rng);
        Mat za = head_input(z_next, a_next);

        // Reward bootstrap: min of two subsampled EMA heads.
        int i = pick(rng);
        int j = pick(rng);
        while (j == i) j = pick(rng);
        Vec qv = decode_head(q_target_[static_cast<size_t>(i)].forward(za), cfg_.bins)
                     .cwiseMin(decode_head(q_target_[static_cast<size_t>(j)].forward(za),
                                           cfg_.bins));

        // Cost bootstrap: configurable aggregation over all EMA heads.
        Vec qcv;
        for (size_t h = 0; h < qc_target_.size(); ++h) {
            Vec v = decode_head(qc_target_[h].forward(za), cfg_.bins);
            if (h == 0)
                qcv = v;
            else if (cfg_.cost_target_agg == CostAgg::Avg)
                qcv += v;
            else if (cfg_.cost_target_agg == CostAgg::Min)
                qcv = qcv.cwiseMin(v);
            else
                qcv = qcv.cwiseMax(v);
        }
        if (cfg_.cost_target_agg == CostAgg::Avg)
            qcv /= static_cast<double>(qc_target_.size());

        const Vec& done = batch.done[static_cast<size_t>(t)];
        Vec live = (1.0 - done.array()).matrix();
        q_t.row(t) = batch.rewards[static_cast<size_t>(t)].transpose() +
                     cfg_.gamma * qv.cwiseProduct(live).transpose();
        qc_t.row(t) = batch.costs[static_cast<size_t>(t)].transpose() +
                      cfg_.gamma_c * qcv.cwiseProduct(live).transpose();
        z = z_next;
    }
    return {q_t, qc_t};
}

namespace {

Mat twohot_targets(const Vec& values, const BinSpec& bins) {
    Mat t(bins.count, values.size());
    for (Eigen::Index j = 0; j < values.size(); ++j) t.col(j) = twohot_encode(values(j), bins);
    return t;
}

}  // namespace

WorldModel::FrozenTargets WorldModel::compute_targets(const SegmentBatch& batch,
                                                      const ActionSampler& policy,
                                                      Rng& rng) const {
    FrozenTargets f;
    std::tie(f.q, f.qc) = td_targets(batch, policy, rng);
    if (cfg_.consistency_enabled)
        for (const Mat& next_obs : batch.next_obs) f.consistency.push_back(encode(next_obs));
    return f;
}

ModelLossStats WorldModel::model_loss_backward(const SegmentBatch& batch,
                                               const ActionSampler& policy, Rng& rng,
                                               const FrozenTargets* frozen) {
    int H = batch.horizon();
    if (H != cfg_.horizon)
        throw ConfigError("model_loss: segment horizon " + std::to_string(H) +
                          " != configured " + std::to_string(cfg_.horizon));
    int B = batch.batch;
    double invB = 1.0 / static_cast<double>(B);

    FrozenTargets local;
    if (!frozen) {
        local = compute_targets(batch, policy, rng);
        frozen = &local;
    }
    const Mat& q_tgt = frozen->q;
    const Mat& qc_tgt = frozen->qc;

    Tape tape;
    Tape::Var z = encoder_.forward(tape, tape.constant(batch.obs[0]), true);
    Tape::Var total = tape.constant(Mat::Zero(1, 1));
    ModelLossStats stats;
    double w = 1.0;

    for (int t = 0; t <= H; ++t) {
        auto st = static_cast<size_t>(t);
        Tape::Var za = tape.concat_rows(z, tape.constant(batch.actions[st]));

        Tape::Var step = tape.constant(Mat::Zero(1, 1));

        Mat r_tgt = twohot_targets(batch.rewards[st], cfg_.bins);
        Tape::Var r_ce = tape.scale(
            discrete_ce(tape, reward_.forward(tape, za, true), r_tgt), invB);
        stats.reward_ce += w * tape.value(r_ce)(0, 0);
        step = tape.add(step, r_ce);

        auto head_ce = [&](std::vector<DenseNet>& heads, const Mat& targets) {
            Tape::Var acc = tape.constant(Mat::Zero(1, 1));
            for (DenseNet& h : heads)
                acc = tape.add(acc, discrete_ce(tape, h.forward(tape, za, true), targets));
            return tape.scale(acc, invB / static_cast<double>(heads.size()));
        };

        Mat v_tgt = twohot_targets(q_tgt.row(t).transpose(), cfg_.bins);
        Tape::Var v_ce = head_ce(q_, v_tgt);
        stats.value_ce += w * tape.value(v_ce)(0, 0);
        step = tape.add(step, v_ce);

        Mat c_tgt = twohot_targets(batch.costs[st], cfg_.bins);
        Tape::Var c_ce = head_ce(cost_, c_tgt);
        stats.cost_ce += w * tape.value(c_ce)(0, 0);
        step = tape.add(step, c_ce);

        Mat cv_tgt = twohot_targets(qc_tgt.row(t).transpose(), cfg_.bins);
        Tape::Var cv_ce = head_ce(qc_, cv_tgt);
        stats.cost_value_ce += w * tape.value(cv_ce)(0, 0);
        step = tape.add(step, cv_ce);

        if (decoder_) {
            Tape::Var rec = decoder_->forward(tape, z, true);
            Tape::Var err = tape.sub(rec, tape.constant(batch.obs[st]));
            Tape::Var dl = tape.scale(tape.sum(tape.square(err)),
                                      cfg_.decoder_weight * invB);
            stats.decoder += w * tape.value(dl)(0, 0);
            step = tape.add(step, dl);
        }

        // One-step latent prediction + consistency against the detached
        // encoding of the observed next state.
        z = dynamics_.forward(tape, za, true);
        if (cfg_.consistency_enabled) {
            const Mat& target = frozen->consistency[st];
            Tape::Var diff = tape.sub(z, tape.constant(target));
            Tape::Var cons = tape.scale(tape.sum(tape.square(diff)),
                                        cfg_.consistency_coef * invB);
            stats.consistency += w * tape.value(cons)(0, 0);
            step = tape.add(step, cons);
        }

        total = tape.add(total, tape.scale(step, w));
        w *= cfg_.lambda;
    }

    stats.total = tape.value(total)(0, 0);
    check_finite(stats.total, "model loss");
    tape.backward(total);
    return stats;
}

double WorldModel::decoder_loss(const SegmentBatch& batch) const {
    if (!decoder_) throw ConfigError("decoder_loss: decoder head is disabled");
    double acc = 0.0;
    double w = 1.0;
    Mat z = encode(batch.obs[0]);
    for (int t = 0; t <= batch.horizon(); ++t) {
        auto st = static_cast<size_t>(t);
        Mat rec = decoder_->forward(z);
        acc += w * cfg_.decoder_weight * (rec - batch.obs[st]).squaredNorm() /
               static_cast<double>(batch.batch);
        z = next(z, batch.actions[st]);
        w *= cfg_.lambda;
    }
    return acc;
}

void WorldModel::ema_update(double tau) {
    if (tau <= 0.0 || tau > 1.0) throw ConfigError("ema_update: tau in (0,1]");
    for (int i = 0; i < cfg_.num_q; ++i)
        q_target_[static_cast<size_t>(i)].track(q_[static_cast<size_t>(i)], tau);
    for (int i = 0; i < cfg_.num_qc; ++i)
        qc_target_[static_cast<size_t>(i)].track(qc_[static_cast<size_t>(i)], tau);
}

void WorldModel::zero_grad() {
    for (DenseNet* n : trainable_nets()) n->zero_grad();
}

std::vector<DenseNet*> WorldModel::trainable_nets() {
    std::vector<DenseNet*> nets{&encoder_, &dynamics_, &reward_};
    for (DenseNet& n : q_) nets.push_back(&n);
    for (DenseNet& n : cost_) nets.push_back(&n);
    for (DenseNet& n : qc_) nets.push_back(&n);
    if (decoder_) nets.push_back(&*decoder_);
    return nets;
}

Tape::Var WorldModel::q_head_value(Tape& t, Tape::Var za, int head) {
    Tape::Var logits = q_[static_cast<size_t>(head)].forward(t, za, false);
    return decode_head(t, logits, cfg_.bins);
}

Tape::Var WorldModel::qc_head_value(Tape& t, Tape::Var za, int head) {
    Tape::Var logits = qc_[static_cast<size_t>(head)].forward(t, za, false);
    return decode_head(t, logits, cfg_.bins);
}

void WorldModel::save(std::ostream& os) const {
    encoder_.save(os);
    dynamics_.save(os);
    reward_.save(os);
    for (const DenseNet& n : q_) n.save(os);
    for (const DenseNet& n : cost_) n.save(os);
    for (const DenseNet& n : qc_) n.save(os);
    for (const DenseNet& n : q_target_) n.save(os);
    for (const DenseNet& n : qc_target_) n.save(os);
    if (decoder_) decoder_->save(os);
}

void WorldModel::load(std::istream& is) {
    encoder_.load(is);
    dynamics_.load(is);
    reward_.load(is);
    for (DenseNet& n : q_) n.load(is);
    for (DenseNet& n : cost_) n.load(is);
    for (DenseNet& n : qc_) n.load(is);
    for (DenseNet& n : q_target_) n.load(is);
    for (DenseNet& n : qc_target_) n.load(is);
    if (decoder_) decoder_->load(is);
}

}  // namespace spowl
