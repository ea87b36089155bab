#pragma once

#include "spowl/autodiff.hpp"
#include "spowl/common.hpp"

#include <cmath>

namespace spowl {

struct SimNormSpec {
    int latent_width = 64;
    int group = 8;

    void validate() const {
        if (group < 2 || latent_width % group != 0)
            throw ConfigError("SimNormSpec: group must be >= 2 and divide the latent width");
    }
};

/// Per-group softmax: every consecutive group of `spec.group` entries
/// becomes a probability simplex.
Vec simnorm(const Vec& v, const SimNormSpec& spec);
Mat simnorm(const Mat& v, const SimNormSpec& spec);

inline double symlog(double x) { return std::copysign(std::log1p(std::abs(x)), x); }
inline double symexp(double y) { return std::copysign(std::expm1(std::abs(y)), y); }

/// Uniform bins in symlog space, symmetric about 0, odd count so one
/// center sits exactly at 0.
struct BinSpec {
    int count = 101;
    double low = -10.0;   // symlog-domain lower bound
    double high = 10.0;

    void validate() const {
        if (count < 3 || count % 2 == 0) throw ConfigError("BinSpec: count must be odd, >= 3");
        if (!(low < 0.0 && 0.0 < high)) throw ConfigError("BinSpec: need low < 0 < high");
    }
    double center(int i) const {
        return low + (high - low) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    Vec centers() const {
        Vec c(count);
        for (int i = 0; i < count; ++i) c(i) = center(i);
        return c;
    }
};

/// Mass on at most two adjacent bins, linearly interpolated in symlog
/// space; out-of-range targets clamp to the edge bin.
Vec twohot_encode(double x, const BinSpec& bins);
double twohot_decode(const Vec& probs, const BinSpec& bins);

/// Cross-entropy between softmax(logits) and twohot_encode(target).
double discrete_ce(const Vec& logits, double target, const BinSpec& bins);

/// Tape version, summed over columns; `targets` holds one two-hot
/// column per batch entry.
Tape::Var discrete_ce(Tape& tape, Tape::Var logits, const Mat& targets);

/// Expected-value decode of head logits on the tape: symexp(centers .
/// softmax(logits)) per column, result is 1xB.
Tape::Var decode_head(Tape& tape, Tape::Var logits, const BinSpec& bins);

/// Inference decode for a batch of logit columns.
Vec decode_head(const Mat& logits, const BinSpec& bins);

}  // namespace spowl
