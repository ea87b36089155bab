#include "doctest.h"

#include "spowl/autodiff.hpp"
#include "spowl/net.hpp"

#include <cmath>

using namespace spowl;

namespace {

DenseNet identity_layer() {
    Rng rng(1);
    DenseNet net({2, 2}, Activation::Linear, Activation::Linear, rng);
    net.layers()[0].W = Mat::Identity(2, 2);
    net.layers()[0].b = Vec::Zero(2);
    return net;
}

}  // namespace

TEST_CASE("identity linear layer passes input through") {
    DenseNet net = identity_layer();
    Vec x(2);
    x << 1.0, 2.0;
    Vec y = net.forward(x);
    CHECK(y(0) == 1.0);
    CHECK(y(1) == 2.0);
}

TEST_CASE("zero weights reduce to the bias") {
    Rng rng(2);
    DenseNet net({3, 1}, Activation::Linear, Activation::Linear, rng);
    net.layers()[0].W.setZero();
    net.layers()[0].b = Vec::Constant(1, 3.0);
    Vec x(3);
    x << -7.0, 0.25, 100.0;
    CHECK(net.forward(x)(0) == 3.0);
}

TEST_CASE("two-layer forward matches a hand-rolled matrix oracle") {
    Rng rng(37);
    DenseNet net({2, 3, 2}, Activation::Mish, Activation::Linear, rng);
    Vec x(2);
    x << 0.5, -0.5;

    // Independent loop-based evaluation of W2 * mish(W1 x + b1) + b2.
    auto mish = [](double v) { return v * std::tanh(std::log1p(std::exp(v))); };
    const auto& l1 = net.layers()[0];
    const auto& l2 = net.layers()[1];
    Vec h(3);
    for (int i = 0; i < 3; ++i) {
        double acc = l1.b(i);
        for (int j = 0; j < 2; ++j) acc += l1.W(i, j) * x(j);
        h(i) = mish(acc);
    }
    Vec want(2);
    for (int i = 0; i < 2; ++i) {
        double acc = l2.b(i);
        for (int j = 0; j < 3; ++j) acc += l2.W(i, j) * h(j);
        want(i) = acc;
    }

    Vec got = net.forward(x);
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forward is pure: identical calls give bitwise-identical output") {
    Rng rng(5);
    DenseNet net({4, 8, 3}, Activation::Mish, Activation::Tanh, rng);
    Vec x(4);
    x << 0.1, -2.0, 3.5, 0.0;
    Vec a = net.forward(x), b = net.forward(x);
    for (int i = 0; i < 3; ++i) CHECK(a(i) == b(i));
}

TEST_CASE("sum-of-outputs loss on an identity layer gives outer-product gradients") {
    DenseNet net = identity_layer();
    Mat x(2, 1);
    x << 3.0, -4.0;
    Tape tape;
    Tape::Var out = net.forward(tape, tape.constant(x), true);
    tape.backward(tape.sum(out));
    // d(sum Wx+b)/dW = ones * x^T, d/db = ones.
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) CHECK(net.layers()[0].gW(i, j) == doctest::Approx(x(j, 0)));
        CHECK(net.layers()[0].gb(i) == doctest::Approx(1.0));
    }
}

TEST_CASE("stop_gradient blocks all flow upstream") {
    Rng rng(9);
    DenseNet net({2, 4, 2}, Activation::Mish, Activation::Linear, rng);
    Mat x(2, 3);
    x << 1.0, -1.0, 0.5, 2.0, 0.0, -0.25;
    Tape tape;
    Tape::Var out = net.forward(tape, tape.constant(x), true);
    Tape::Var blocked = tape.stop_gradient(out);
    tape.backward(tape.sum(tape.square(blocked)));
    for (const auto& layer : net.layers()) {
        CHECK(layer.gW.cwiseAbs().maxCoeff() == 0.0);
        CHECK(layer.gb.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("tape gradients match central finite differences on a small net") {
    Rng rng(21);
    DenseNet net({3, 5, 2}, Activation::Mish, Activation::SimNorm, rng, 2);
    Mat x(3, 2);
    x << 0.3, -1.2, 0.7, 0.1, -0.5, 0.9;

    auto loss = [&] {
        Tape tape;
        Tape::Var out = net.forward(tape, tape.constant(x), true);
        Tape::Var l = tape.sum(tape.square(tape.add_scalar(out, -0.2)));
        return tape.value(l)(0, 0);
    };

    net.zero_grad();
    {
        Tape tape;
        Tape::Var out = net.forward(tape, tape.constant(x), true);
        tape.backward(tape.sum(tape.square(tape.add_scalar(out, -0.2))));
    }

    const double h = 1e-5;
    net.for_each_param([&](Eigen::Map<Eigen::ArrayXd> p, Eigen::Map<Eigen::ArrayXd> g) {
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            double saved = p(i);
            p(i) = saved + h;
            double up = loss();
            p(i) = saved - h;
            double dn = loss();
            p(i) = saved;
            double fd = (up - dn) / (2 * h);
            CHECK(std::abs(g(i) - fd) <= 1e-3 * std::max({std::abs(g(i)), std::abs(fd), 1e-2}));
        }
    });
}

TEST_CASE("min2 resolves exact ties toward the first argument's gradient") {
    Tape tape;
    Mat v = Mat::Constant(1, 1, 0.7);
    Tape::Var a = tape.constant(v);
    Tape::Var b = tape.constant(v);
    Tape::Var m = tape.min2(a, b);
    tape.backward(tape.sum(m));
    CHECK(tape.gradient(a)(0, 0) == 1.0);
    const Mat& gb = tape.gradient(b);
    CHECK((gb.size() == 0 || gb(0, 0) == 0.0));
}

TEST_CASE("elementwise primitives match closed forms") {
    Tape tape;
    Mat x(1, 3);
    x << 0.5, -1.0, 2.0;
    Tape::Var v = tape.constant(x);
    CHECK(tape.value(tape.exp_(v))(0, 1) == doctest::Approx(std::exp(-1.0)));
    CHECK(tape.value(tape.tanh_(v))(0, 2) == doctest::Approx(std::tanh(2.0)));
    CHECK(tape.value(tape.square(v))(0, 0) == doctest::Approx(0.25));
    CHECK(tape.value(tape.symexp_(v))(0, 2) == doctest::Approx(std::expm1(2.0)));
}
