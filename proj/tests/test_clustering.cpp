#include "al/clustering.hpp"

#include <doctest.h>

#include "oracles.hpp"

#include <algorithm>
#include <set>
#include <vector>

using namespace al;

namespace {

Matrix planar(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(static_cast<Eigen::Index>(n), 2);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double cx = (i % 3) * 4.0;
        m(i, 0) = cx + rng.normal();
        m(i, 1) = rng.normal();
    }
    return m;
}

}  // namespace

TEST_CASE("k = 1 gives total scatter") {
    const Matrix x = planar(9, 1);
    const auto lin = kernel_kmeans(x, KernelConfig::linear(), 1, 3);
    CHECK(std::all_of(lin.labels.begin(), lin.labels.end(), [](int c) { return c == 0; }));
    CHECK(lin.objective == doctest::Approx(oracle::euclidean_scatter(x)));

    // For rbf the scatter is n - (1/n) sum_ij K_ij.
    const auto cfg = KernelConfig::rbf(0.5);
    const Matrix g = gram_matrix(cfg, x);
    const auto rbf = kernel_kmeans(x, cfg, 1, 3);
    CHECK(rbf.objective == doctest::Approx(9.0 - g.sum() / 9.0));
}

TEST_CASE("k = n gives singletons") {
    const Matrix x = planar(7, 2);
    const auto a = kernel_kmeans(x, KernelConfig::rbf(1.0), 7, 5);
    CHECK(std::set<int>(a.labels.begin(), a.labels.end()).size() == 7);
    CHECK(a.objective == doctest::Approx(0.0));
    CHECK_THROWS_AS(kernel_kmeans(x, KernelConfig::rbf(1.0), 8, 5), ConfigError);
    CHECK_THROWS_AS(kernel_kmeans(x, KernelConfig::rbf(1.0), 2, 5, 0), ConfigError);
}

TEST_CASE("linear kernel k-means equals Euclidean Lloyd") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Matrix x = planar(8, seed + 20);
        const Matrix g = gram_matrix(KernelConfig::linear(), x);
        Rng rng(seed);
        const auto centers = kmeanspp_centers(g, 3, rng);
        const auto got = kernel_kmeans_from(g, centers, 100);
        CHECK(got.labels == oracle::euclidean_lloyd(x, centers, 100));

        double expected = 0.0;
        for (int c = 0; c < 3; ++c) {
            std::vector<std::size_t> rows;
            for (std::size_t i = 0; i < got.labels.size(); ++i)
                if (got.labels[i] == c) rows.push_back(i);
            expected += oracle::euclidean_scatter(gather_rows(x, rows));
        }
        CHECK(got.objective == doctest::Approx(expected));
    }
}

TEST_CASE("objective is non-increasing and runs are seeded") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Matrix x = planar(40, seed);
        const auto a = kernel_kmeans(x, KernelConfig::rbf(0.3), 4, seed);
        for (std::size_t t = 1; t < a.objective_trace.size(); ++t) {
            CHECK(a.objective_trace[t] <= a.objective_trace[t - 1] * (1.0 + 1e-12) + 1e-12);
        }
        std::vector<std::size_t> size(4, 0);
        for (int c : a.labels) ++size[static_cast<std::size_t>(c)];
        CHECK(std::count(size.begin(), size.end(), std::size_t{0}) == 0);
        const auto b = kernel_kmeans(x, KernelConfig::rbf(0.3), 4, seed);
        CHECK(a.labels == b.labels);
        CHECK(a.objective_trace == b.objective_trace);
    }
}

TEST_CASE("kmeans++ seeding picks distinct centers") {
    Matrix x(5, 1);
    x << 0, 0, 0, 0, 1;  // only two distinct points
    const Matrix g = gram_matrix(KernelConfig::linear(), x);
    Rng rng(3);
    const auto centers = kmeanspp_centers(g, 4, rng);
    CHECK(std::set<std::size_t>(centers.begin(), centers.end()).size() == 4);
}

TEST_CASE("binary split of the largest cluster") {
    const Matrix x = planar(10, 4);
    ClusterAssignment one;
    one.k = 1;
    one.labels.assign(10, 0);
    const auto two = binary_split_largest(one, x, KernelConfig::rbf(0.5), 1);
    CHECK(two.k == 2);
    CHECK(two.labels.size() == 10);
    CHECK(std::count(two.labels.begin(), two.labels.end(), 0) > 0);
    CHECK(std::count(two.labels.begin(), two.labels.end(), 1) > 0);

    // Sizes 4/3/3: only cluster 0 is split.
    ClusterAssignment tied;
    tied.k = 3;
    tied.labels = {0, 0, 0, 1, 1, 1, 2, 2, 2, 0};
    const auto split = binary_split_largest(tied, x, KernelConfig::rbf(0.5), 2);
    CHECK(split.k == 4);
    for (std::size_t i = 0; i < 10; ++i) {
        if (tied.labels[i] != 0) CHECK(split.labels[i] == tied.labels[i]);
        else CHECK((split.labels[i] == 0 || split.labels[i] == 3));
    }
}

TEST_CASE("binary split ties go to the lowest cluster id") {
    const Matrix x = planar(9, 6);
    ClusterAssignment p;
    p.k = 3;
    p.labels = {2, 2, 2, 1, 1, 1, 0, 0, 0};
    const auto s = binary_split_largest(p, x, KernelConfig::rbf(0.5), 1);
    for (std::size_t i = 0; i < 6; ++i) CHECK(s.labels[i] == p.labels[i]);
    CHECK(std::count(s.labels.begin(), s.labels.end(), 3) > 0);
    CHECK(std::count(s.labels.begin(), s.labels.end(), 0) > 0);
}

TEST_CASE("n - 1 splits reach singletons") {
    const Matrix x = planar(6, 8);
    ClusterAssignment p;
    p.k = 1;
    p.labels.assign(6, 0);
    for (int s = 0; s < 5; ++s) p = binary_split_largest(p, x, KernelConfig::rbf(0.7), static_cast<std::uint64_t>(s));
    CHECK(p.k == 6);
    CHECK(std::set<int>(p.labels.begin(), p.labels.end()).size() == 6);
    CHECK(p.objective == doctest::Approx(0.0));
    CHECK_THROWS_AS(binary_split_largest(p, x, KernelConfig::rbf(0.7), 9), ConfigError);
}
