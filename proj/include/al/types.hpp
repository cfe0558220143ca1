#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

namespace al {

// Row-major so that a sample is a contiguous span.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline std::span<const double> row_span(const Matrix& m, Eigen::Index i) {
    return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

inline std::span<const double> as_span(const Vector& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Rows of `m` selected by `idx`, in the given order.
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> idx);

/// Bad user input or violated precondition (CLI exit code 2).
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical or data failure at run time (CLI exit code 3).
class RuntimeFailure : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ConvergenceError : public RuntimeFailure {
  public:
    using RuntimeFailure::RuntimeFailure;
};

}  // namespace al
