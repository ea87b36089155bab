#pragma once

#include "spowl/common.hpp"

#include <functional>
#include <vector>

namespace spowl {

/// Reverse-mode gradient tape over dense matrices. Columns are batch
/// entries; a scalar is a 1x1 matrix. Parameters (weights/biases) live
/// outside the tape: affine() captures pointers to their gradient
/// accumulators, so one backward() pass fills per-parameter gradients
/// in place.
class Tape {
public:
    using Var = int;

    Var constant(Mat v);

    // y = W*x + b (b broadcast over columns). gW/gb may be null to treat
    // the parameters as constants; input gradients still flow.
    Var affine(const Mat& W, const Vec& b, Var x, Mat* gW = nullptr, Vec* gb = nullptr);

    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);  // elementwise
    Var scale(Var a, double c);
    Var add_scalar(Var a, double c);
    Var tanh_(Var a);
    Var mish(Var a);
    Var exp_(Var a);
    Var log_(Var a);  // natural log, caller keeps the argument positive
    Var square(Var a);
    Var min2(Var a, Var b);  // elementwise min, ties flow to a
    Var symexp_(Var a);      // sign(y)*(exp(|y|)-1)

    // Per-column softmax over consecutive groups of `group` rows.
    Var group_softmax(Var a, int group);
    // Per-column log-softmax over all rows.
    Var log_softmax(Var a);

    Var concat_rows(Var a, Var b);
    Var rows(Var a, int first, int count);

    Var sum(Var a);                          // all entries -> 1x1
    Var dot_const(Var a, Mat c);             // sum(c .* a) -> 1x1
    Var colsum_weighted(Var a, Vec w);       // 1xB, row j -> sum_i w_i * a(i,j)
    Var stop_gradient(Var a);

    const Mat& value(Var v) const { return nodes_[static_cast<size_t>(v)].val; }
    const Mat& gradient(Var v) const { return nodes_[static_cast<size_t>(v)].grad; }

    // Seeds d(loss)/d(loss)=1 and propagates to every node and every
    // captured parameter accumulator. `loss` must be 1x1.
    void backward(Var loss);

    size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Mat val;
        Mat grad;  // allocated lazily in backward()
        std::function<void(Tape&, Node&)> back;
    };

    Var push(Mat val, std::function<void(Tape&, Node&)> back);
    Mat& grad_of(Var v);

    std::vector<Node> nodes_;
};

}  // namespace spowl
