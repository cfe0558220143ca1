#pragma once

#include "al/kernels.hpp"
#include "al/rng.hpp"
#include "al/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace al {

struct ClusterAssignment {
    std::vector<int> labels;  // cluster id per sample
    int k = 0;
    double objective = 0.0;  // sum of squared feature-space distances to cluster means
    /// Objective after initialization and after every Lloyd iteration.
    std::vector<double> objective_trace;
};

/// Sum over clusters of the feature-space scatter, from Gram entries only.
double kernel_kmeans_objective(const Matrix& gram, std::span<const int> labels, int k);

/// k distinct sample indices: the first uniform, the rest with probability
/// proportional to the squared feature-space distance to the nearest chosen center.
/// When all remaining distances are zero the lowest unchosen index is taken.
std::vector<std::size_t> kmeanspp_centers(const Matrix& gram, int k, Rng& rng);

/// Lloyd iterations in feature space starting from the given center samples.
/// Distances ||phi(x) - mu_c||^2 = K(x,x) - 2/|c| sum_j K(x,x_j) + 1/|c|^2 sum_jl K(x_j,x_l);
/// the initial assignment breaks ties toward the lowest center, later steps keep a
/// sample in its current cluster on ties. An empty cluster is repaired by moving the
/// sample farthest from its centroid into it; a fourth repair is an error.
ClusterAssignment kernel_kmeans_from(const Matrix& gram, std::span<const std::size_t> initial_centers,
                                     int max_iter);

ClusterAssignment kernel_kmeans(const Matrix& samples, const KernelConfig& kernel, int k,
                                std::uint64_t seed, int max_iter = 100);

/// Splits the largest cluster (ties to the lowest id) in two with kernel k-means;
/// the second half gets id k. Other clusters keep their ids.
ClusterAssignment binary_split_largest(const ClusterAssignment& partition, const Matrix& samples,
                                       const KernelConfig& kernel, std::uint64_t seed);

}  // namespace al
