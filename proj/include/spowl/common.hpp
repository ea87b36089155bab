#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace spowl {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Rng = std::mt19937_64;

// Misconfiguration: wrong widths, bad hyperparameters, unknown config keys.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure during optimization (NaN/Inf loss or parameters).
class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

inline void check_finite(const Mat& m, const std::string& what) {
    if (!m.allFinite()) throw TrainingError("non-finite values in " + what);
}

inline void check_finite(double x, const std::string& what) {
    if (!std::isfinite(x)) throw TrainingError("non-finite value in " + what);
}

}  // namespace spowl
