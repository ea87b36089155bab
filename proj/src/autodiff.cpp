#include "spowl/autodiff.hpp"

#include <cmath>

namespace spowl {

Tape::Var Tape::push(Mat val, std::function<void(Tape&, Node&)> back) {
    nodes_.push_back(Node{std::move(val), Mat(), std::move(back)});
    return static_cast<Var>(nodes_.size() - 1);
}

Mat& Tape::grad_of(Var v) {
    Node& n = nodes_[static_cast<size_t>(v)];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.val.rows(), n.val.cols());
    return n.grad;
}

Tape::Var Tape::constant(Mat v) {
    return push(std::move(v), nullptr);
}

Tape::Var Tape::affine(const Mat& W, const Vec& b, Var x, Mat* gW, Vec* gb) {
    const Mat& xv = value(x);
    if (xv.rows() != W.cols())
        throw ConfigError("affine: input width " + std::to_string(xv.rows()) +
                          " does not match weight width " + std::to_string(W.cols()));
    Mat y = (W * xv).colwise() + b;
    const Mat* Wp = &W;
    return push(std::move(y), [Wp, gW, gb, x](Tape& t, Node& n) {
        const Mat& g = n.grad;
        if (gW) gW->noalias() += g * t.value(x).transpose();
        if (gb) *gb += g.rowwise().sum();
        t.grad_of(x).noalias() += Wp->transpose() * g;
    });
}

Tape::Var Tape::add(Var a, Var b) {
    return push(value(a) + value(b), [a, b](Tape& t, Node& n) {
        t.grad_of(a) += n.grad;
        t.grad_of(b) += n.grad;
    });
}

Tape::Var Tape::sub(Var a, Var b) {
    return push(value(a) - value(b), [a, b](Tape& t, Node& n) {
        t.grad_of(a) += n.grad;
        t.grad_of(b) -= n.grad;
    });
}

Tape::Var Tape::mul(Var a, Var b) {
    return push(value(a).cwiseProduct(value(b)), [a, b](Tape& t, Node& n) {
        t.grad_of(a) += n.grad.cwiseProduct(t.value(b));
        t.grad_of(b) += n.grad.cwiseProduct(t.value(a));
    });
}

Tape::Var Tape::scale(Var a, double c) {
    return push(value(a) * c, [a, c](Tape& t, Node& n) { t.grad_of(a) += c * n.grad; });
}

Tape::Var Tape::add_scalar(Var a, double c) {
    return push(value(a).array() + c, [a](Tape& t, Node& n) { t.grad_of(a) += n.grad; });
}

Tape::Var Tape::tanh_(Var a) {
    Mat y = value(a).array().tanh();
    Var out = push(std::move(y), [a](Tape& t, Node& n) {
        t.grad_of(a).array() += n.grad.array() * (1.0 - n.val.array().square());
    });
    return out;
}

Tape::Var Tape::mish(Var a) {
    // y = x * tanh(softplus(x))
    const Mat& x = value(a);
    Mat sp = (1.0 + x.array().exp()).log();
    // guard against overflow for large x: softplus(x) ~ x
    for (Eigen::Index j = 0; j < x.cols(); ++j)
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            if (x(i, j) > 30.0) sp(i, j) = x(i, j);
    Mat tsp = sp.array().tanh();
    Mat y = x.cwiseProduct(tsp);
    return push(std::move(y), [a, tsp](Tape& t, Node& n) {
        const Mat& x = t.value(a);
        Eigen::ArrayXXd sig = 1.0 / (1.0 + (-x.array()).exp());
        Eigen::ArrayXXd d = tsp.array() + x.array() * sig * (1.0 - tsp.array().square());
        t.grad_of(a).array() += n.grad.array() * d;
    });
}

Tape::Var Tape::exp_(Var a) {
    Mat y = value(a).array().exp();
    return push(std::move(y), [a](Tape& t, Node& n) {
        t.grad_of(a).array() += n.grad.array() * n.val.array();
    });
}

Tape::Var Tape::log_(Var a) {
    Mat y = value(a).array().log();
    return push(std::move(y), [a](Tape& t, Node& n) {
        t.grad_of(a).array() += n.grad.array() / t.value(a).array();
    });
}

Tape::Var Tape::square(Var a) {
    Mat y = value(a).array().square();
    return push(std::move(y), [a](Tape& t, Node& n) {
        t.grad_of(a).array() += 2.0 * n.grad.array() * t.value(a).array();
    });
}

Tape::Var Tape::min2(Var a, Var b) {
    Mat y = value(a).cwiseMin(value(b));
    return push(std::move(y), [a, b](Tape& t, Node& n) {
        const Mat& av = t.value(a);
        const Mat& bv = t.value(b);
        Mat& ga = t.grad_of(a);
        Mat& gb = t.grad_of(b);
        for (Eigen::Index j = 0; j < av.cols(); ++j)
            for (Eigen::Index i = 0; i < av.rows(); ++i)
                (av(i, j) <= bv(i, j) ? ga(i, j) : gb(i, j)) += n.grad(i, j);
    });
}

Tape::Var Tape::symexp_(Var a) {
    const Mat& x = value(a);
    Mat y = x.array().sign() * (x.array().abs().exp() - 1.0);
    return push(std::move(y), [a](Tape& t, Node& n) {
        t.grad_of(a).array() += n.grad.array() * t.value(a).array().abs().exp();
    });
}

Tape::Var Tape::group_softmax(Var a, int group) {
    const Mat& x = value(a);
    if (group < 2 || x.rows() % group != 0)
        throw ConfigError("group_softmax: group size " + std::to_string(group) +
                          " does not divide width " + std::to_string(x.rows()));
    Mat y(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        for (Eigen::Index g = 0; g < x.rows(); g += group) {
            Eigen::ArrayXd seg = x.col(j).segment(g, group).array();
            seg -= seg.maxCoeff();
            Eigen::ArrayXd e = seg.exp();
            y.col(j).segment(g, group) = e / e.sum();
        }
    }
    return push(std::move(y), [a, group](Tape& t, Node& n) {
        Mat& ga = t.grad_of(a);
        for (Eigen::Index j = 0; j < n.val.cols(); ++j) {
            for (Eigen::Index g = 0; g < n.val.rows(); g += group) {
                auto y = n.val.col(j).segment(g, group).array();
                auto gy = n.grad.col(j).segment(g, group).array();
                double dot = (y * gy).sum();
                ga.col(j).segment(g, group).array() += y * (gy - dot);
            }
        }
    });
}

Tape::Var Tape::log_softmax(Var a) {
    const Mat& x = value(a);
    Mat y(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        double m = x.col(j).maxCoeff();
        double lse = m + std::log((x.col(j).array() - m).exp().sum());
        y.col(j) = x.col(j).array() - lse;
    }
    return push(std::move(y), [a](Tape& t, Node& n) {
        Mat& ga = t.grad_of(a);
        for (Eigen::Index j = 0; j < n.val.cols(); ++j) {
            double gsum = n.grad.col(j).sum();
            ga.col(j).array() += n.grad.col(j).array() - n.val.col(j).array().exp() * gsum;
        }
    });
}

Tape::Var Tape::concat_rows(Var a, Var b) {
    const Mat& av = value(a);
    const Mat& bv = value(b);
    Mat y(av.rows() + bv.rows(), av.cols());
    y.topRows(av.rows()) = av;
    y.bottomRows(bv.rows()) = bv;
    Eigen::Index na = av.rows();
    return push(std::move(y), [a, b, na](Tape& t, Node& n) {
        t.grad_of(a) += n.grad.topRows(na);
        t.grad_of(b) += n.grad.bottomRows(n.grad.rows() - na);
    });
}

Tape::Var Tape::rows(Var a, int first, int count) {
    Mat y = value(a).middleRows(first, count);
    return push(std::move(y), [a, first, count](Tape& t, Node& n) {
        t.grad_of(a).middleRows(first, count) += n.grad;
    });
}

Tape::Var Tape::sum(Var a) {
    Mat y(1, 1);
    y(0, 0) = value(a).sum();
    return push(std::move(y), [a](Tape& t, Node& n) {
        t.grad_of(a).array() += n.grad(0, 0);
    });
}

Tape::Var Tape::dot_const(Var a, Mat c) {
    Mat y(1, 1);
    y(0, 0) = value(a).cwiseProduct(c).sum();
    return push(std::move(y), [a, c = std::move(c)](Tape& t, Node& n) {
        t.grad_of(a) += n.grad(0, 0) * c;
    });
}

Tape::Var Tape::colsum_weighted(Var a, Vec w) {
    Mat y = w.transpose() * value(a);
    return push(std::move(y), [a, w = std::move(w)](Tape& t, Node& n) {
        t.grad_of(a).noalias() += w * n.grad;
    });
}

Tape::Var Tape::stop_gradient(Var a) {
    return push(value(a), nullptr);
}

void Tape::backward(Var loss) {
    Node& ln = nodes_[static_cast<size_t>(loss)];
    if (ln.val.size() != 1) throw ConfigError("backward: loss must be scalar");
    grad_of(loss)(0, 0) = 1.0;
    for (size_t i = nodes_.size(); i-- > 0;) {
        Node& n = nodes_[i];
        if (n.back && n.grad.size() != 0) n.back(*this, n);
    }
}

}  // namespace spowl
