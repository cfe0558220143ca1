#pragma once

#include <array>
#include <span>

namespace al {

/// p(+1 | f) = 1 / (1 + exp(A f + B)).
struct PlattSigmoid {
    double a_slope = -1.0;
    double b_offset = 0.0;

    double probability(double decision) const noexcept;
};

/// Platt's smoothed targets: (N+ + 1) / (N+ + 2) for positives, 1 / (N- + 2) for negatives.
std::array<double, 2> platt_targets(std::span<const int> signs);

/// Negative log-likelihood of the sigmoid against the smoothed targets.
double platt_nll(const PlattSigmoid& s, std::span<const double> decisions, std::span<const int> signs);

/// Analytic gradient (d/dA, d/dB) of platt_nll.
std::array<double, 2> platt_gradient(const PlattSigmoid& s, std::span<const double> decisions,
                                     std::span<const int> signs);

/// Newton's method with backtracking line search on the regularized objective.
/// Requires at least two samples and both signs.
PlattSigmoid fit_platt(std::span<const double> decisions, std::span<const int> signs);

}  // namespace al
