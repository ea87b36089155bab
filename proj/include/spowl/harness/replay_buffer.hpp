#pragma once

#include "spowl/world_model.hpp"

#include <deque>

namespace spowl {

/// Ring buffer of transitions with episode bookkeeping. Segment
/// sampling draws uniform start indices and rejects any window that
/// crosses an episode boundary (a done flag is allowed only at the last
/// slot of a segment).
class ReplayBuffer {
public:
    struct Transition {
        Vec obs, action, next_obs;
        double reward = 0.0, cost = 0.0;
        bool done = false;
        std::uint64_t episode = 0;
    };

    explicit ReplayBuffer(size_t capacity) : capacity_(capacity) {
        if (capacity_ < 1) throw ConfigError("ReplayBuffer: capacity must be positive");
    }

    void add(Transition t);
    size_t size() const { return data_.size(); }
    // Segments of length horizon+1 exist once this returns true.
    bool warm(int horizon, int batch) const;

    SegmentBatch sample_segments(int batch, int horizon, Rng& rng) const;
    const Transition& at(size_t i) const { return data_[i]; }

    // Marks the current episode finished even without a done flag
    // (training cut mid-episode).
    void end_episode() { ++episode_; }

private:
    bool valid_start(size_t i, int horizon) const;

    size_t capacity_;
    std::deque<Transition> data_;
    std::uint64_t episode_ = 0;
};

}  // namespace spowl
