#include "al/clustering.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace al {

namespace {

struct ClusterStats {
    std::vector<std::size_t> size;
    std::vector<double> self_term;  // 1/|c|^2 sum_{j,l in c} K(j,l)
    Matrix cross;                   // n x k, sum_{j in c} K(x,j)
};

ClusterStats cluster_stats(const Matrix& gram, std::span<const int> labels, int k) {
    const auto n = gram.rows();
    ClusterStats st{std::vector<std::size_t>(static_cast<std::size_t>(k), 0),
                    std::vector<double>(static_cast<std::size_t>(k), 0.0), Matrix::Zero(n, k)};
    for (int c : labels) ++st.size[static_cast<std::size_t>(c)];
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) st.cross(i, labels[static_cast<std::size_t>(j)]) += gram(i, j);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const int c = labels[static_cast<std::size_t>(i)];
        st.self_term[static_cast<std::size_t>(c)] += st.cross(i, c);
    }
    for (int c = 0; c < k; ++c) {
        const auto sz = static_cast<double>(st.size[static_cast<std::size_t>(c)]);
        if (sz > 0) st.self_term[static_cast<std::size_t>(c)] /= sz * sz;
    }
    return st;
}

double distance_to_mean(const Matrix& gram, const ClusterStats& st, Eigen::Index i, int c) {
    const auto sz = static_cast<double>(st.size[static_cast<std::size_t>(c)]);
    return gram(i, i) - 2.0 * st.cross(i, c) / sz + st.self_term[static_cast<std::size_t>(c)];
}

double pair_distance(const Matrix& gram, Eigen::Index a, Eigen::Index b) {
    return std::max(0.0, gram(a, a) - 2.0 * gram(a, b) + gram(b, b));
}

}  // namespace

double kernel_kmeans_objective(const Matrix& gram, std::span<const int> labels, int k) {
    const auto st = cluster_stats(gram, labels, k);
    double total = 0.0;
    for (Eigen::Index i = 0; i < gram.rows(); ++i) {
        total += std::max(0.0, distance_to_mean(gram, st, i, labels[static_cast<std::size_t>(i)]));
    }
    return total;
}

std::vector<std::size_t> kmeanspp_centers(const Matrix& gram, int k, Rng& rng) {
    const auto n = static_cast<std::size_t>(gram.rows());
    if (k < 1 || static_cast<std::size_t>(k) > n) throw ConfigError("kmeans++: need 1 <= k <= sample count");
    std::vector<std::size_t> centers{rng.uniform_index(n)};
    std::vector<char> chosen(n, 0);
    chosen[centers.front()] = 1;
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) {
        d2[i] = pair_distance(gram, static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(centers.front()));
    }
    while (centers.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += chosen[i] ? 0.0 : d2[i];
        std::size_t pick = n;
        if (total > 0.0) {
            const double r = rng.uniform() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (chosen[i] || d2[i] <= 0.0) continue;
                acc += d2[i];
                pick = i;
                if (acc > r) break;
            }
        } else {
            for (std::size_t i = 0; i < n && pick == n; ++i) {
                if (!chosen[i]) pick = i;
            }
        }
        centers.push_back(pick);
        chosen[pick] = 1;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], pair_distance(gram, static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(pick)));
        }
    }
    return centers;
}

ClusterAssignment kernel_kmeans_from(const Matrix& gram, std::span<const std::size_t> initial_centers,
                                     int max_iter) {
    const auto n = gram.rows();
    const int k = static_cast<int>(initial_centers.size());
    if (k < 1 || k > n) throw ConfigError("kernel_kmeans: need 1 <= k <= sample count");
    if (max_iter < 1) throw ConfigError("kernel_kmeans: max_iter must be >= 1");

    ClusterAssignment out;
    out.k = k;
    out.labels.assign(static_cast<std::size_t>(n), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            const double d = pair_distance(gram, i, static_cast<Eigen::Index>(initial_centers[static_cast<std::size_t>(c)]));
            if (d < best) {
                best = d;
                out.labels[static_cast<std::size_t>(i)] = c;
            }
        }
    }

    int repairs = 0;
    // Moves the sample farthest from its own centroid into each empty cluster.
    auto repair_empty = [&]() {
        while (true) {
            auto st = cluster_stats(gram, out.labels, k);
            const auto empty = std::find(st.size.begin(), st.size.end(), std::size_t{0});
            if (empty == st.size.end()) return;
            if (++repairs > 3) throw RuntimeFailure("kernel_kmeans: empty cluster after 3 repairs");
            Eigen::Index far = -1;
            double far_d = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const int c = out.labels[static_cast<std::size_t>(i)];
                if (st.size[static_cast<std::size_t>(c)] < 2) continue;
                const double d = distance_to_mean(gram, st, i, c);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far < 0) throw RuntimeFailure("kernel_kmeans: cannot repair empty cluster");
            out.labels[static_cast<std::size_t>(far)] = static_cast<int>(empty - st.size.begin());
        }
    };

    repair_empty();
    out.objective_trace.push_back(kernel_kmeans_objective(gram, out.labels, k));
    std::vector<int> next(out.labels.size());
    for (int iter = 0; iter < max_iter; ++iter) {
        const auto st = cluster_stats(gram, out.labels, k);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int cur = out.labels[static_cast<std::size_t>(i)];
            double best = distance_to_mean(gram, st, i, cur);
            int best_c = cur;
            for (int c = 0; c < k; ++c) {
                const double d = distance_to_mean(gram, st, i, c);
                // ties keep the current cluster, otherwise the lowest id wins
                if (d < best) {
                    best = d;
                    best_c = c;
                }
            }
            next[static_cast<std::size_t>(i)] = best_c;
        }
        if (next == out.labels) break;
        out.labels = next;
        repair_empty();
        out.objective_trace.push_back(kernel_kmeans_objective(gram, out.labels, k));
    }
    out.objective = out.objective_trace.back();
    return out;
}

ClusterAssignment kernel_kmeans(const Matrix& samples, const KernelConfig& kernel, int k,
                                std::uint64_t seed, int max_iter) {
    kernel.validate();
    if (k < 1 || k > samples.rows()) throw ConfigError("kernel_kmeans: k exceeds the sample count");
    if (max_iter < 1) throw ConfigError("kernel_kmeans: max_iter must be >= 1");
    const Matrix gram = gram_matrix(kernel, samples);
    Rng rng(seed);
    const auto centers = kmeanspp_centers(gram, k, rng);
    return kernel_kmeans_from(gram, centers, max_iter);
}

ClusterAssignment binary_split_largest(const ClusterAssignment& partition, const Matrix& samples,
                                       const KernelConfig& kernel, std::uint64_t seed) {
    if (partition.labels.size() != static_cast<std::size_t>(samples.rows())) {
        throw ConfigError("binary_split_largest: partition does not match the samples");
    }
    std::vector<std::size_t> size(static_cast<std::size_t>(partition.k), 0);
    for (int c : partition.labels) ++size[static_cast<std::size_t>(c)];
    const auto largest = static_cast<int>(std::max_element(size.begin(), size.end()) - size.begin());
    if (size[static_cast<std::size_t>(largest)] < 2) {
        throw ConfigError("binary_split_largest: all clusters are singletons");
    }

    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < partition.labels.size(); ++i) {
        if (partition.labels[i] == largest) members.push_back(i);
    }
    const auto halves = kernel_kmeans(gather_rows(samples, members), kernel, 2, seed);

    ClusterAssignment out;
    out.k = partition.k + 1;
    out.labels = partition.labels;
    for (std::size_t m = 0; m < members.size(); ++m) {
        if (halves.labels[m] == 1) out.labels[members[m]] = partition.k;
    }
    out.objective = kernel_kmeans_objective(gram_matrix(kernel, samples), out.labels, out.k);
    out.objective_trace = {out.objective};
    return out;
}

}  // namespace al
