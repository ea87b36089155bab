#include "spowl/net.hpp"

#include <cmath>
#include <istream>
#include <ostream>

namespace spowl {

namespace {

Mat apply_activation(const Mat& x, Activation act, int group) {
    switch (act) {
        case Activation::Linear:
            return x;
        case Activation::Tanh:
            return x.array().tanh();
        case Activation::Mish: {
            Eigen::ArrayXXd sp = (1.0 + x.array().exp()).log();
            sp = (x.array() > 30.0).select(x.array(), sp);
            return x.array() * sp.tanh();
        }
        case Activation::SimNorm: {
            Mat y(x.rows(), x.cols());
            for (Eigen::Index j = 0; j < x.cols(); ++j) {
                for (Eigen::Index g = 0; g < x.rows(); g += group) {
                    Eigen::ArrayXd seg = x.col(j).segment(g, group).array();
                    seg -= seg.maxCoeff();
                    Eigen::ArrayXd e = seg.exp();
                    y.col(j).segment(g, group) = e / e.sum();
                }
            }
            return y;
        }
    }
    return x;
}

}  // namespace

DenseNet::DenseNet(const std::vector<int>& widths, Activation hidden_act, Activation out_act,
                   Rng& rng, int simnorm_group, double out_weight_scale)
    : simnorm_group_(simnorm_group) {
    if (widths.size() < 2) throw ConfigError("DenseNet needs at least one layer");
    if (out_act == Activation::SimNorm &&
        (simnorm_group < 2 || widths.back() % simnorm_group != 0))
        throw ConfigError("SimNorm output needs a group size dividing the output width");
    for (size_t i = 0; i + 1 < widths.size(); ++i) {
        Layer l;
        int fan_in = widths[i];
        int fan_out = widths[i + 1];
        double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        l.W = Mat::NullaryExpr(fan_out, fan_in, [&]() { return dist(rng); });
        l.b = Vec::NullaryExpr(fan_out, [&]() { return dist(rng); });
        bool last = (i + 2 == widths.size());
        l.act = last ? out_act : hidden_act;
        if (last && out_weight_scale != 1.0) {
            l.W *= out_weight_scale;
            l.b *= out_weight_scale;
        }
        l.gW = Mat::Zero(fan_out, fan_in);
        l.gb = Vec::Zero(fan_out);
        layers_.push_back(std::move(l));
    }
}

Mat DenseNet::forward(const Mat& x) const {
    if (x.rows() != input_width())
        throw ConfigError("forward: input width " + std::to_string(x.rows()) +
                          " != " + std::to_string(input_width()));
    Mat h = x;
    for (const Layer& l : layers_)
        h = apply_activation((l.W * h).colwise() + l.b, l.act, simnorm_group_);
    return h;
}

Vec DenseNet::forward(const Vec& x) const {
    return forward(Mat(x)).col(0);
}

Tape::Var DenseNet::forward(Tape& tape, Tape::Var x, bool accumulate_grads) {
    Tape::Var h = x;
    for (Layer& l : layers_) {
        h = tape.affine(l.W, l.b, h, accumulate_grads ? &l.gW : nullptr,
                        accumulate_grads ? &l.gb : nullptr);
        switch (l.act) {
            case Activation::Linear: break;
            case Activation::Tanh: h = tape.tanh_(h); break;
            case Activation::Mish: h = tape.mish(h); break;
            case Activation::SimNorm: h = tape.group_softmax(h, simnorm_group_); break;
        }
    }
    return h;
}

void DenseNet::zero_grad() {
    for (Layer& l : layers_) {
        l.gW.setZero();
        l.gb.setZero();
    }
}

void DenseNet::for_each_param(const ParamVisitor& fn) {
    for (Layer& l : layers_) {
        fn(Eigen::Map<Eigen::ArrayXd>(l.W.data(), l.W.size()),
           Eigen::Map<Eigen::ArrayXd>(l.gW.data(), l.gW.size()));
        fn(Eigen::Map<Eigen::ArrayXd>(l.b.data(), l.b.size()),
           Eigen::Map<Eigen::ArrayXd>(l.gb.data(), l.gb.size()));
    }
}

size_t DenseNet::param_count() const {
    size_t n = 0;
    for (const Layer& l : layers_) n += static_cast<size_t>(l.W.size() + l.b.size());
    return n;
}

void DenseNet::check_finite_params(const std::string& who) const {
    for (const Layer& l : layers_) {
        if (!l.W.allFinite() || !l.b.allFinite())
            throw TrainingError("non-finite parameters in " + who);
    }
}

void DenseNet::track(const DenseNet& other, double tau) {
    if (other.layers_.size() != layers_.size())
        throw ConfigError("track: architecture mismatch");
    for (size_t i = 0; i < layers_.size(); ++i) {
        layers_[i].W = (1.0 - tau) * layers_[i].W + tau * other.layers_[i].W;
        layers_[i].b = (1.0 - tau) * layers_[i].b + tau * other.layers_[i].b;
    }
}

void DenseNet::save(std::ostream& os) const {
    auto put = [&os](const double* p, Eigen::Index n) {
        os.write(reinterpret_cast<const char*>(p),
                 static_cast<std::streamsize>(n * sizeof(double)));
    };
    std::uint32_t nl = static_cast<std::uint32_t>(layers_.size());
    os.write(reinterpret_cast<const char*>(&nl), sizeof(nl));
    for (const Layer& l : layers_) {
        std::uint32_t dims[3] = {static_cast<std::uint32_t>(l.W.rows()),
                                 static_cast<std::uint32_t>(l.W.cols()),
                                 static_cast<std::uint32_t>(l.act)};
        os.write(reinterpret_cast<const char*>(dims), sizeof(dims));
        put(l.W.data(), l.W.size());
        put(l.b.data(), l.b.size());
    }
}

void DenseNet::load(std::istream& is) {
    auto get = [&is](double* p, Eigen::Index n) {
        is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    };
    std::uint32_t nl = 0;
    is.read(reinterpret_cast<char*>(&nl), sizeof(nl));
    layers_.resize(nl);
    for (Layer& l : layers_) {
        std::uint32_t dims[3];
        is.read(reinterpret_cast<char*>(dims), sizeof(dims));
        l.W.resize(dims[0], dims[1]);
        l.b.resize(dims[0]);
        l.act = static_cast<Activation>(dims[2]);
        get(l.W.data(), l.W.size());
        get(l.b.data(), l.b.size());
        l.gW = Mat::Zero(dims[0], dims[1]);
        l.gb = Vec::Zero(dims[0]);
    }
    if (!is) throw ConfigError("DenseNet::load: truncated stream");
}

void AdamOptimizer::step(DenseNet& net) {
    step(std::vector<DenseNet*>{&net});
}

void AdamOptimizer::step(const std::vector<DenseNet*>& nets) {
    ++t_;
    double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    size_t slot = 0;
    for (DenseNet* net : nets) {
        net->for_each_param([&](Eigen::Map<Eigen::ArrayXd> p, Eigen::Map<Eigen::ArrayXd> g) {
            if (slot >= m_.size()) {
                m_.push_back(Eigen::ArrayXd::Zero(p.size()));
                v_.push_back(Eigen::ArrayXd::Zero(p.size()));
            }
            if (m_[slot].size() != p.size())
                throw ConfigError("AdamOptimizer: parameter shape changed between steps");
            if (!g.isFinite().all()) throw TrainingError("non-finite gradient in optimizer");
            m_[slot] = beta1_ * m_[slot] + (1.0 - beta1_) * g;
            v_[slot] = beta2_ * v_[slot] + (1.0 - beta2_) * g.square();
            p -= lr_ * (m_[slot] / c1) / ((v_[slot] / c2).sqrt() + eps_);
            ++slot;
        });
    }
}

}  // namespace spowl
