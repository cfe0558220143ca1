#pragma once

#include "al/classifier.hpp"
#include "al/kernels.hpp"
#include "al/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace al {

/// Fold id per sample. Each class is shuffled independently and dealt round-robin,
/// so fold sizes per class differ by at most one.
std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed);

struct CvResult {
    KernelConfig kernel;
    double c = 1.0;
    double accuracy = 0.0;  // mean fold accuracy of the winner
    int folds_used = 0;     // may be below the request when a class is small
};

/// Default search grid for standardized features: C in {1, 10, 100, 1000},
/// gamma in {0.1, 0.3, 1, 3}.
std::vector<double> default_c_grid();
std::vector<double> default_gamma_grid();

/// Grid search for the one-against-all SVM by k-fold accuracy. Ties go to the
/// smaller C, then the smaller gamma. Folds are reduced to the smallest class
/// size (never below 2).
CvResult cross_validate(const Matrix& x, std::span<const int> y, int n_classes,
                        std::span<const KernelConfig> kernel_grid, std::span<const double> c_grid,
                        int folds, std::uint64_t seed, const SmoOptions& smo = {});

}  // namespace al
