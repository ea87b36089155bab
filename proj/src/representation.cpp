#include "spowl/representation.hpp"

namespace spowl {

Mat simnorm(const Mat& v, const SimNormSpec& spec) {
    spec.validate();
    if (v.rows() != spec.latent_width)
        throw ConfigError("simnorm: input width " + std::to_string(v.rows()) +
                          " != " + std::to_string(spec.latent_width));
    Mat y(v.rows(), v.cols());
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        for (int g = 0; g < spec.latent_width; g += spec.group) {
            Eigen::ArrayXd seg = v.col(j).segment(g, spec.group).array();
            seg -= seg.maxCoeff();
            Eigen::ArrayXd e = seg.exp();
            y.col(j).segment(g, spec.group) = e / e.sum();
        }
    }
    return y;
}

Vec simnorm(const Vec& v, const SimNormSpec& spec) {
    return simnorm(Mat(v), spec).col(0);
}

Vec twohot_encode(double x, const BinSpec& bins) {
    bins.validate();
    Vec p = Vec::Zero(bins.count);
    double y = std::clamp(symlog(x), bins.low, bins.high);
    double pos = (y - bins.low) / (bins.high - bins.low) * static_cast<double>(bins.count - 1);
    int lo = std::clamp(static_cast<int>(std::floor(pos)), 0, bins.count - 1);
    int hi = std::min(lo + 1, bins.count - 1);
    double frac = pos - static_cast<double>(lo);
    p(lo) += 1.0 - frac;
    if (hi != lo) p(hi) += frac;
    return p;
}

double twohot_decode(const Vec& probs, const BinSpec& bins) {
    bins.validate();
    if (probs.size() != bins.count) throw ConfigError("twohot_decode: width mismatch");
    return symexp(probs.dot(bins.centers()));
}

double discrete_ce(const Vec& logits, double target, const BinSpec& bins) {
    if (logits.size() != bins.count) throw ConfigError("discrete_ce: width mismatch");
    Vec t = twohot_encode(target, bins);
    double m = logits.maxCoeff();
    double lse = m + std::log((logits.array() - m).exp().sum());
    return -(t.array() * (logits.array() - lse)).sum();
}

Tape::Var discrete_ce(Tape& tape, Tape::Var logits, const Mat& targets) {
    Tape::Var lsm = tape.log_softmax(logits);
    return tape.scale(tape.dot_const(lsm, targets), -1.0);
}

Tape::Var decode_head(Tape& tape, Tape::Var logits, const BinSpec& bins) {
    Tape::Var p = tape.group_softmax(logits, bins.count);
    return tape.symexp_(tape.colsum_weighted(p, bins.centers()));
}

Vec decode_head(const Mat& logits, const BinSpec& bins) {
    Vec out(logits.cols());
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
        Eigen::ArrayXd l = logits.col(j).array();
        l -= l.maxCoeff();
        Eigen::ArrayXd e = l.exp();
        out(j) = symexp((e / e.sum() * bins.centers().array()).sum());
    }
    return out;
}

}  // namespace spowl
