#include "spowl/harness/replay_buffer.hpp"

namespace spowl {

void ReplayBuffer::add(Transition t) {
    t.episode = episode_;
    bool is_done = t.done;
    data_.push_back(std::move(t));
    if (data_.size() > capacity_) data_.pop_front();
    if (is_done) ++episode_;
}

bool ReplayBuffer::valid_start(size_t i, int horizon) const {
    size_t end = i + static_cast<size_t>(horizon);
    if (end >= data_.size()) return false;
    std::uint64_t ep = data_[i].episode;
    for (size_t j = i; j <= end; ++j) {
        if (data_[j].episode != ep) return false;
        if (data_[j].done && j != end) return false;
    }
    return true;
}

bool ReplayBuffer::warm(int horizon, int batch) const {
    int found = 0;
    for (size_t i = 0; i < data_.size(); ++i) {
        if (valid_start(i, horizon) && ++found >= batch) return true;
    }
    return false;
}

SegmentBatch ReplayBuffer::sample_segments(int batch, int horizon, Rng& rng) const {
    if (data_.empty()) throw ConfigError("sample_segments: empty buffer");
    SegmentBatch out;
    out.batch = batch;
    int od = static_cast<int>(data_.front().obs.size());
    int ad = static_cast<int>(data_.front().action.size());
    int steps = horizon + 1;
    out.obs.assign(static_cast<size_t>(steps), Mat(od, batch));
    out.next_obs.assign(static_cast<size_t>(steps), Mat(od, batch));
    out.actions.assign(static_cast<size_t>(steps), Mat(ad, batch));
    out.rewards.assign(static_cast<size_t>(steps), Vec(batch));
    out.costs.assign(static_cast<size_t>(steps), Vec(batch));
    out.done.assign(static_cast<size_t>(steps), Vec(batch));

    std::uniform_int_distribution<size_t> pick(0, data_.size() - 1);
    for (int b = 0; b < batch; ++b) {
        size_t start;
        int guard = 0;
        do {
            start = pick(rng);
            if (++guard > 1000000)
                throw ConfigError("sample_segments: no valid segment of requested length");
        } while (!valid_start(start, horizon));
        for (int t = 0; t < steps; ++t) {
            const Transition& tr = data_[start + static_cast<size_t>(t)];
            out.obs[static_cast<size_t>(t)].col(b) = tr.obs;
            out.next_obs[static_cast<size_t>(t)].col(b) = tr.next_obs;
            out.actions[static_cast<size_t>(t)].col(b) = tr.action;
            out.rewards[static_cast<size_t>(t)](b) = tr.reward;
            out.costs[static_cast<size_t>(t)](b) = tr.cost;
            out.done[static_cast<size_t>(t)](b) = tr.done ? 1.0 : 0.0;
        }
    }
    return out;
}

}  // namespace spowl
