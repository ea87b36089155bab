#pragma once

#include "spowl/autodiff.hpp"
#include "spowl/common.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace spowl {

enum class Activation { Linear, Mish, Tanh, SimNorm };

/// Plain fully connected network. Hidden layers use a smooth rectifier
/// (Mish); the output activation is per-net (SimNorm output needs a
/// group size). Parameters and their gradient accumulators live here.
class DenseNet {
public:
    struct Layer {
        Mat W;
        Vec b;
        Activation act = Activation::Linear;
        Mat gW;
        Vec gb;
    };

    DenseNet() = default;
    // widths = {in, hidden..., out}; hidden layers get `hidden_act`,
    // the last layer `out_act`. `simnorm_group` only matters for SimNorm.
    DenseNet(const std::vector<int>& widths, Activation hidden_act, Activation out_act,
             Rng& rng, int simnorm_group = 0, double out_weight_scale = 1.0);

    int input_width() const { return static_cast<int>(layers_.front().W.cols()); }
    int output_width() const { return static_cast<int>(layers_.back().W.rows()); }

    // Inference path, no tape. Columns are batch entries.
    Mat forward(const Mat& x) const;
    Vec forward(const Vec& x) const;

    // Training path. With accumulate_grads=false the parameters act as
    // constants; gradients still flow to the input.
    Tape::Var forward(Tape& tape, Tape::Var x, bool accumulate_grads = true);

    void zero_grad();
    // Visits every parameter tensor flattened, paired with its gradient.
    using ParamVisitor =
        std::function<void(Eigen::Map<Eigen::ArrayXd>, Eigen::Map<Eigen::ArrayXd>)>;
    void for_each_param(const ParamVisitor& fn);
    size_t param_count() const;
    void check_finite_params(const std::string& who) const;

    // Soft update: this <- (1 - tau) * this + tau * other. Architectures
    // must match.
    void track(const DenseNet& other, double tau);

    void save(std::ostream& os) const;
    void load(std::istream& is);

    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }
    int simnorm_group() const { return simnorm_group_; }

private:
    std::vector<Layer> layers_;
    int simnorm_group_ = 0;
};

/// Adam. Moment buffers are keyed by visiting order of the net's
/// parameters, so one AdamOptimizer instance is tied to one net (or any
/// fixed parameter collection).
class AdamOptimizer {
public:
    explicit AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999,
                           double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(DenseNet& net);
    void step(const std::vector<DenseNet*>& nets);

    long step_count() const { return t_; }
    double lr() const { return lr_; }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Eigen::ArrayXd> m_, v_;
};

}  // namespace spowl
