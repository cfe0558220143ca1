#include "al/clustering.hpp"
#include "al/heuristics.hpp"
#include "al/lda.hpp"
#include "al/rng.hpp"

#include <doctest.h>

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <vector>

using namespace al;
using namespace al::heuristics;

namespace {

Matrix blobs(std::size_t per_class, const std::vector<std::array<double, 2>>& centers, double sd,
             std::uint64_t seed, std::vector<int>& labels) {
    Rng rng(seed);
    Matrix x(static_cast<Eigen::Index>(per_class * centers.size()), 2);
    labels.clear();
    Eigen::Index r = 0;
    for (std::size_t c = 0; c < centers.size(); ++c) {
        for (std::size_t i = 0; i < per_class; ++i, ++r) {
            x(r, 0) = centers[c][0] + sd * rng.normal();
            x(r, 1) = centers[c][1] + sd * rng.normal();
            labels.push_back(static_cast<int>(c));
        }
    }
    return x;
}

struct Problem {
    Matrix labeled, pool;
    std::vector<int> labels, pool_labels;
};

Problem three_class(std::uint64_t seed, std::size_t labeled_per_class = 8, std::size_t pool_per_class = 20) {
    const std::vector<std::array<double, 2>> centers{{{0.0, 0.0}}, {{2.5, 0.0}}, {{1.25, 2.2}}};
    Problem p;
    p.labeled = blobs(labeled_per_class, centers, 0.9, seed, p.labels);
    p.pool = blobs(pool_per_class, centers, 0.9, seed + 1000, p.pool_labels);
    return p;
}

MulticlassSvm fit(const Problem& p, double c = 10.0, double gamma = 0.5) {
    SvmParams params;
    params.kernel = KernelConfig::rbf(gamma);
    params.c = c;
    return train_multiclass_svm(p.labeled, p.labels, 3, params);
}

void check_batch(const std::vector<std::size_t>& batch, std::size_t q, std::size_t pool_size) {
    CHECK(batch.size() == q);
    CHECK(std::set<std::size_t>(batch.begin(), batch.end()).size() == q);
    for (std::size_t b : batch) CHECK(b < pool_size);
}

class FixedPosterior final : public Classifier {
  public:
    explicit FixedPosterior(Eigen::RowVectorXd p) : p_(std::move(p)) {}
    int class_count() const noexcept override { return static_cast<int>(p_.size()); }
    std::vector<int> predict(const Matrix& x) const override {
        return std::vector<int>(static_cast<std::size_t>(x.rows()), argmax_lowest(std::span<const double>(p_.data(), p_.size())));
    }
    Matrix posterior(const Matrix& x) const override { return p_.replicate(x.rows(), 1); }

  private:
    Eigen::RowVectorXd p_;
};

}  // namespace

TEST_CASE("ranking, top-q and uncertain subsets") {
    ScoreVector up{{0.2, kExcluded, 0.9, 0.2, 0.5}, Orientation::maximize};
    CHECK(rank_candidates(up) == std::vector<std::size_t>{2, 4, 0, 3, 1});
    CHECK(top_q(up, 2) == std::vector<std::size_t>{2, 4});
    CHECK(top_q(up, 10).size() == 5);
    ScoreVector down{{0.2, kExcluded, 0.9, 0.2, 0.5}, Orientation::minimize};
    CHECK(rank_candidates(down) == std::vector<std::size_t>{0, 3, 4, 2, 1});
    const auto s = uncertain_subset(down, 10);
    CHECK(s.candidates == std::vector<std::size_t>{0, 3, 4, 2});
    CHECK(s.uncertainty == std::vector<double>{0.2, 0.2, 0.5, 0.9});
    CHECK_THROWS_AS(uncertain_subset(up, 2), ConfigError);
}

TEST_CASE("normalized entropy query-by-bagging") {
    const std::vector<int> agree(7, 2);
    CHECK(normalized_vote_entropy(agree, 3) == 0.0);
    const std::vector<int> even{0, 0, 0, 0, 1, 1, 1, 1};
    CHECK(normalized_vote_entropy(even, 2) == doctest::Approx(1.0));
    const std::vector<int> six_two{0, 0, 0, 0, 0, 0, 1, 1};
    // -(0.75 ln 0.75 + 0.25 ln 0.25) / ln 2
    CHECK(normalized_vote_entropy(six_two, 2) == doctest::Approx(0.8113).epsilon(1e-4));
    CHECK(normalized_vote_entropy(six_two, 2) ==
          doctest::Approx(-(0.75 * std::log(0.75) + 0.25 * std::log(0.25)) / std::log(2.0)));

    const std::vector<std::vector<int>> votes{{0, 1, 2}, {0, 1, 0}, {0, 2, 1}};
    const auto sv = neqb_from_votes(votes, 3);
    CHECK(sv.orientation == Orientation::maximize);
    CHECK(sv.scores[0] == 0.0);
    CHECK(sv.scores[2] == doctest::Approx(1.0));

    // Scores stay in [0, 1] for any committee shape.
    const auto p = three_class(3);
    LearnerConfig lc;
    lc.kind = ClassifierKind::lda;
    const auto trainer = make_trainer(lc);
    for (int members : {2, 5, 12}) {
        for (double frac : {0.3, 0.85, 1.0}) {
            CommitteeConfig cc{members, frac, 17};
            const auto s = score_neqb(p.labeled, p.labels, 3, p.pool, cc, trainer);
            REQUIRE(s.scores.size() == static_cast<std::size_t>(p.pool.rows()));
            for (double v : s.scores) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
            CHECK(score_neqb(p.labeled, p.labels, 3, p.pool, cc, trainer).scores == s.scores);
        }
    }
    CHECK_THROWS_AS(CommitteeConfig({1, 0.5, 0}).validate(), ConfigError);
    CHECK_THROWS_AS(CommitteeConfig({3, 0.0, 0}).validate(), ConfigError);
}

TEST_CASE("multiview entropy and adaptive maximum disagreement") {
    const auto uniform = ViewWeights::uniform(2, 2);
    const std::vector<int> agree{1, 1}, split{0, 1};
    CHECK(multiview_entropy(agree, uniform) == 0.0);
    CHECK(multiview_entropy(split, uniform) == doctest::Approx(std::log(2.0)));

    // Class 0 listens only to view 0, class 1 only to view 1.
    ViewWeights diag{Matrix::Identity(2, 2)};
    const std::vector<int> crossed{1, 0};
    CHECK(multiview_entropy(crossed, diag) == 0.0);
    CHECK(multiview_entropy(split, diag) == doctest::Approx(std::log(2.0)));

    const std::vector<std::vector<int>> per_view{{0, 1, 0, 2}, {0, 0, 1, 2}, {0, 1, 2, 2}};
    const auto sv = amd_from_predictions(per_view, ViewWeights::uniform(3, 3));
    CHECK(sv.scores[0] == kExcluded);
    CHECK(sv.scores[1] == kExcluded);
    CHECK(sv.scores[3] == kExcluded);
    CHECK(std::isfinite(sv.scores[2]));
    CHECK(rank_candidates(sv).front() == 2);
}

TEST_CASE("amd weight updates") {
    const auto w0 = ViewWeights::uniform(3, 2);
    const std::vector<int> truth{2};
    const auto none = update_amd_weights(w0, truth, {{0}, {1}});
    CHECK((none.w - w0.w).cwiseAbs().maxCoeff() < 1e-15);

    const auto one = update_amd_weights(w0, truth, {{2}, {1}});
    // Column 0 before normalization: (1/3, 1/3, 4/3).
    CHECK(one.w(2, 0) == doctest::Approx((4.0 / 3.0) / 2.0));
    CHECK(one.w(0, 0) == doctest::Approx((1.0 / 3.0) / 2.0));
    CHECK((one.w.col(1) - w0.w.col(1)).cwiseAbs().maxCoeff() < 1e-15);

    Rng rng(5);
    ViewWeights w = w0;
    for (int round = 0; round < 20; ++round) {
        std::vector<int> y(4);
        std::vector<std::vector<int>> pred(2, std::vector<int>(4));
        for (int s = 0; s < 4; ++s) {
            y[static_cast<std::size_t>(s)] = static_cast<int>(rng.uniform_index(3));
            for (auto& p : pred) p[static_cast<std::size_t>(s)] = static_cast<int>(rng.uniform_index(3));
        }
        w = update_amd_weights(w, y, pred);
        CHECK_NOTHROW(w.validate());
        for (Eigen::Index v = 0; v < 2; ++v) CHECK(w.w.col(v).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("view partitions") {
    const auto c = contiguous_views(5, 2);
    CHECK_NOTHROW(c.validate(5));
    CHECK(c.views.size() == 2);
    CHECK(c.views[0].front() == 0);
    CHECK(c.views[1].back() == 4);
    CHECK_THROWS_AS(contiguous_views(2, 3), ConfigError);

    Rng rng(2);
    Matrix data(200, 5);
    for (Eigen::Index i = 0; i < 200; ++i) {
        const double a = rng.normal(), b = rng.normal();
        data(i, 0) = a;
        data(i, 1) = a + 0.1 * rng.normal();
        data(i, 2) = b;
        data(i, 3) = -b + 0.1 * rng.normal();
        data(i, 4) = rng.normal();
    }
    const auto three = correlation_views(data, 3, 0.5);
    CHECK(three.views == std::vector<std::vector<std::size_t>>{{0, 1}, {2, 3}, {4}});
    const auto two = correlation_views(data, 2, 0.5);
    CHECK(two.views == std::vector<std::vector<std::size_t>>{{0, 1}, {2, 3, 4}});
    const auto four = correlation_views(data, 4, 0.5);
    CHECK_NOTHROW(four.validate(5));
    CHECK(four.views.size() == 4);

    ViewPartition bad{{{0, 1}, {1, 2}}};
    CHECK_THROWS_AS(bad.validate(3), ConfigError);
}

TEST_CASE("score_amd end to end") {
    Rng rng(11);
    Matrix labeled(30, 4), pool(25, 4);
    std::vector<int> labels(30);
    for (Eigen::Index i = 0; i < 30; ++i) {
        labels[static_cast<std::size_t>(i)] = static_cast<int>(i % 3);
        for (Eigen::Index j = 0; j < 4; ++j) labeled(i, j) = labels[static_cast<std::size_t>(i)] * 1.5 + rng.normal();
    }
    for (Eigen::Index i = 0; i < 25; ++i)
        for (Eigen::Index j = 0; j < 4; ++j) pool(i, j) = 1.5 * rng.normal() + 1.5;
    LearnerConfig lc;
    lc.kind = ClassifierKind::lda;
    const auto views = contiguous_views(4, 2);
    const auto sv = score_amd(labeled, labels, 3, pool, views, ViewWeights::uniform(3, 2), make_trainer(lc));
    CHECK(sv.scores.size() == 25);
    CHECK(std::any_of(sv.scores.begin(), sv.scores.end(), [](double v) { return std::isfinite(v); }));
}

TEST_CASE("margin sampling and multiclass level uncertainty") {
    Matrix f(3, 3);
    f << 1.2, -0.4, -2.0, 2.0, -1.0, -0.5, 1.0, -1.0, 0.0;
    const auto ms = ms_from_decisions(f);
    CHECK(ms.scores[0] == doctest::Approx(0.4));
    CHECK(ms.scores[2] == 0.0);
    const auto mclu = mclu_from_decisions(f);
    CHECK(mclu.scores[1] == doctest::Approx(1.0));
    CHECK(mclu.scores[2] == 0.0);
    CHECK(rank_candidates(ms).front() == 2);

    Matrix mirrored(4, 2);
    mirrored << 0.3, -0.3, -1.5, 1.5, 2.0, -2.0, 0.0, 0.0;
    for (double v : mclu_from_decisions(mirrored).scores) CHECK(v == 0.0);

    // Permuting the pool permutes the scores.
    Rng rng(8);
    Matrix g(12, 4);
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = rng.normal();
    std::vector<std::size_t> perm(12);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    const Matrix gp = gather_rows(g, perm);
    const auto a = ms_from_decisions(g), b = ms_from_decisions(gp);
    const auto c = mclu_from_decisions(g), d = mclu_from_decisions(gp);
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(b.scores[i] == a.scores[perm[i]]);
        CHECK(d.scores[i] == c.scores[perm[i]]);
    }

    // A strictly increasing map of |f| keeps the MS argmin.
    Matrix t = g;
    for (Eigen::Index i = 0; i < t.rows(); ++i)
        for (Eigen::Index j = 0; j < t.cols(); ++j) {
            const double m = std::abs(g(i, j));
            t(i, j) = std::copysign(m * m * m + std::exp(m), g(i, j));
        }
    CHECK(rank_candidates(ms_from_decisions(t)).front() == rank_candidates(a).front());

    Matrix absent(1, 3);
    absent << -std::numeric_limits<double>::infinity(), 0.7, -0.2;
    CHECK(ms_from_decisions(absent).scores[0] == doctest::Approx(0.2));
    CHECK(mclu_from_decisions(absent).scores[0] == doctest::Approx(0.5));
}

TEST_CASE("ms is one at an unbounded support vector of a binary problem") {
    std::vector<int> labels;
    const Matrix x = blobs(15, {{{0.0, 0.0}}, {{2.0, 0.0}}}, 0.7, 4, labels);
    SvmParams params;
    params.kernel = KernelConfig::rbf(0.5);
    params.c = 10.0;
    const auto model = train_multiclass_svm(x, labels, 2, params);
    const auto& m = model.machine(0);
    bool found = false;
    for (std::size_t j = 0; j < m.alphas().size() && !found; ++j) {
        if (m.alphas()[j] >= 10.0) continue;
        const Matrix probe = m.support_vectors().row(static_cast<Eigen::Index>(j));
        CHECK(score_ms(model, probe).scores[0] == doctest::Approx(1.0).epsilon(2e-3));
        found = true;
    }
    CHECK(found);
}

TEST_CASE("significance space construction") {
    const auto p = three_class(21, 10, 25);
    const auto model = fit(p);
    const auto u = static_cast<std::size_t>(p.pool.rows());

    std::vector<int> signs(p.labels.size(), -1);
    for (std::size_t i : model.support_idx()) signs[i] = 1;
    const auto ssc = train_binary_svm(p.labeled, signs, model.kernel(), model.c_penalty());
    const Vector f = ssc.decision(p.pool);
    std::set<std::size_t> positives;
    std::vector<std::size_t> negatives;
    for (std::size_t i = 0; i < u; ++i) {
        if (f[static_cast<Eigen::Index>(i)] > 0.0) positives.insert(i);
        else negatives.push_back(i);
    }
    std::stable_sort(negatives.begin(), negatives.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(f[static_cast<Eigen::Index>(a)]) < std::abs(f[static_cast<Eigen::Index>(b)]);
    });
    REQUIRE(!positives.empty());
    REQUIRE(!negatives.empty());

    // Asking for the whole pool: every positive, then negatives by ascending |f|.
    const auto all = select_ssc(model, p.labeled, p.pool, u, 3);
    check_batch(all, u, u);
    CHECK(std::set<std::size_t>(all.begin(), all.begin() + static_cast<long>(positives.size())) == positives);
    CHECK(std::vector<std::size_t>(all.begin() + static_cast<long>(positives.size()), all.end()) == negatives);

    const std::size_t q = positives.size();
    const auto exact = select_ssc(model, p.labeled, p.pool, q, 3);
    CHECK(std::set<std::size_t>(exact.begin(), exact.end()) == positives);

    if (positives.size() >= 2) {
        const auto few = select_ssc(model, p.labeled, p.pool, positives.size() - 1, 9);
        for (std::size_t i : few) CHECK(positives.count(i) == 1);
        CHECK(select_ssc(model, p.labeled, p.pool, positives.size() - 1, 9) == few);
    }

    Matrix two(2, 2);
    two << 0, 0, 1, 1;
    const std::vector<int> y2{0, 1};
    SvmParams params;
    params.kernel = KernelConfig::rbf(0.5);
    const auto tiny = train_multiclass_svm(two, y2, 2, params);
    CHECK_THROWS_AS(select_ssc(tiny, two, p.pool, 2, 1), SscUnavailable);
}

TEST_CASE("greedy diversity batches replay exactly") {
    const auto k = KernelConfig::rbf(0.6);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        const std::size_t n = 5 + seed % 6;
        Matrix pool(static_cast<Eigen::Index>(n + 3), 2);
        for (Eigen::Index i = 0; i < pool.rows(); ++i) {
            pool(i, 0) = 2.0 * rng.normal();
            pool(i, 1) = 2.0 * rng.normal();
        }
        ScoreVector sv{std::vector<double>(static_cast<std::size_t>(pool.rows())), Orientation::minimize};
        for (auto& v : sv.scores) v = std::floor(rng.uniform() * 4.0) / 4.0;  // deliberate ties
        const auto subset = uncertain_subset(sv, n);
        const std::size_t q = std::min<std::size_t>(4, n);
        CHECK(mao_batch(pool, k, subset, q) == oracle::greedy_diversity(pool, k, subset, q, 0.0, false, false));
        CHECK(abd_batch(pool, k, subset, q, 0.6) == oracle::greedy_diversity(pool, k, subset, q, 0.6, true, true));
        CHECK(abd_batch(pool, KernelConfig::linear(), subset, q, 0.3) ==
              oracle::greedy_diversity(pool, KernelConfig::linear(), subset, q, 0.3, true, true));
    }
}

TEST_CASE("closest support vector batches replay exactly") {
    const auto k = KernelConfig::rbf(0.8);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed + 50);
        Matrix pool(10, 2), svs(2 + static_cast<Eigen::Index>(seed % 3), 2);
        for (Eigen::Index i = 0; i < pool.rows(); ++i) pool.row(i) << 2.0 * rng.normal(), 2.0 * rng.normal();
        for (Eigen::Index i = 0; i < svs.rows(); ++i) svs.row(i) << 2.0 * rng.normal(), 2.0 * rng.normal();
        ScoreVector sv{std::vector<double>(10), Orientation::minimize};
        for (auto& v : sv.scores) v = std::floor(rng.uniform() * 4.0) / 4.0;
        const auto subset = uncertain_subset(sv, 8);
        for (std::size_t q : {1, 3, 6}) CHECK(csv_batch(pool, k, svs, subset, q) == oracle::csv_greedy(pool, k, svs, subset, q));
    }
}

TEST_CASE("diversity batch edge cases") {
    const auto k = KernelConfig::rbf(1.0);
    Matrix pool(5, 1);
    pool << 0.0, 0.0, 3.0, 6.0, 9.0;  // candidate 1 duplicates candidate 0
    UncertainSubset s{{0, 1, 2, 3, 4}, {0.1, 0.2, 0.3, 0.4, 0.5}};
    CHECK(mao_batch(pool, k, s, 1) == std::vector<std::size_t>{0});
    CHECK(mao_batch(pool, k, s, 5).back() == 1);

    // lambda = 1: plain uncertainty order.
    UncertainSubset t{{4, 2, 0, 3}, {0.05, 0.1, 0.1, 0.7}};
    CHECK(abd_batch(pool, k, t, 3, 1.0) == std::vector<std::size_t>{4, 0, 2});
    CHECK_THROWS_AS(abd_batch(pool, k, t, 3, 1.5), ConfigError);
    CHECK_THROWS_AS(mao_batch(pool, k, t, 5), ConfigError);
}

TEST_CASE("closest support vector batches") {
    const auto k = KernelConfig::linear();
    Matrix svs(2, 1);
    svs << 0.0, 10.0;
    Matrix pool(5, 1);
    pool << 1.0, 2.0, 9.0, 3.0, 8.0;
    CHECK(closest_support_vector(k, svs, row_span(pool, 2)) == 1);
    UncertainSubset s{{0, 1, 2, 3, 4}, {0.1, 0.2, 0.3, 0.4, 0.5}};
    CHECK(csv_batch(pool, k, svs, s, 1) == std::vector<std::size_t>{0});
    // Candidate 1 shares candidate 0's closest SV and is skipped.
    CHECK(csv_batch(pool, k, svs, s, 2) == std::vector<std::size_t>{0, 2});
    // Two distinct SVs, q = 4: the fallback fills in uncertainty order.
    CHECK(csv_batch(pool, k, svs, s, 4) == std::vector<std::size_t>{0, 2, 1, 3});
    CHECK_THROWS_AS(csv_batch(pool, k, Matrix(0, 1), s, 2), ConfigError);
}

TEST_CASE("cluster-based diversity") {
    // Two tight groups of four; brute force over all 2-partitions finds them.
    Matrix pool(8, 2);
    pool << 0.0, 0.0, 0.2, 0.1, 0.1, 0.3, -0.1, 0.2, 5.0, 5.0, 5.2, 4.9, 4.8, 5.1, 5.1, 5.3;
    const std::vector<double> unc{0.5, 0.2, 0.9, 0.2, 0.4, 0.8, 0.1, 0.3};
    UncertainSubset s;
    for (std::size_t i = 0; i < 8; ++i) {
        s.candidates.push_back(i);
        s.uncertainty.push_back(unc[i]);
    }
    const auto kernel = KernelConfig::rbf(0.2);
    const Matrix g = gram_matrix(kernel, pool);
    double best = 1e300;
    std::vector<int> best_labels;
    for (unsigned mask = 1; mask < 255; ++mask) {
        std::vector<int> labels(8);
        for (int i = 0; i < 8; ++i) labels[static_cast<std::size_t>(i)] = (mask >> i) & 1u;
        const double obj = kernel_kmeans_objective(g, labels, 2);
        if (obj < best - 1e-12) {
            best = obj;
            best_labels = labels;
        }
    }
    std::vector<std::size_t> expected;
    for (int c = 0; c < 2; ++c) {
        std::size_t arg = 8;
        for (std::size_t i = 0; i < 8; ++i) {
            if (best_labels[i] != c) continue;
            if (arg == 8 || unc[i] < unc[arg]) arg = i;
        }
        expected.push_back(arg);
    }
    std::sort(expected.begin(), expected.end());
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto got = ecbd_batch(pool, kernel, s, 2, seed);
        std::sort(got.begin(), got.end());
        CHECK(got == expected);
    }
    CHECK(expected == std::vector<std::size_t>{1, 6});

    auto whole = ecbd_batch(pool, kernel, s, 8, 1);
    std::sort(whole.begin(), whole.end());
    CHECK(whole == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("hierarchical margin cluster sampling") {
    // Groups A (x ~ 0), B (x ~ 3) and C (x ~ 100) with a bounded SV inside C.
    Matrix pool(7, 1);
    pool << 0.0, 0.1, 0.2, 3.0, 3.1, 100.0, 100.1;
    Matrix bsv(1, 1);
    bsv << 100.05;
    UncertainSubset s{{0, 1, 2, 3, 4, 5, 6}, {0.5, 0.3, 0.4, 0.6, 0.2, 0.01, 0.02}};
    const auto kernel = KernelConfig::linear();
    // Trace: {all} holds the bSV -> split into {A,B} and {C,bSV}; one clean cluster,
    // so the largest {A,B} splits into {A} and {B}. Clean clusters by size: A, B.
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        CHECK(hmcs_batch(pool, kernel, s, bsv, 2, seed) == std::vector<std::size_t>{1, 4});
    }
    // Without bounded SVs the first split already yields two clean clusters.
    CHECK(hmcs_batch(pool, kernel, s, Matrix(0, 1), 2, 0) == std::vector<std::size_t>{4, 5});
    const auto all = hmcs_batch(pool, kernel, s, bsv, 7, 3);
    check_batch(all, 7, 7);
}

TEST_CASE("model-driven selectors return valid batches") {
    const auto p = three_class(5);
    const auto model = fit(p);
    const auto u = static_cast<std::size_t>(p.pool.rows());
    const std::size_t q = 6;
    check_batch(select_mao(model, p.pool, q, 3 * q), q, u);
    check_batch(select_mclu_abd(model, p.pool, q, 3 * q, 0.6), q, u);
    check_batch(select_csv(model, p.pool, q, 3 * q), q, u);
    check_batch(select_mclu_ecbd(model, p.pool, q, 3 * q, 4), q, u);
    check_batch(select_hmcs_i(model, p.pool, q, 3 * q, gather_rows(p.labeled, model.bounded_support_idx()), 4), q, u);
    CHECK(select_mclu_ecbd(model, p.pool, q, 3 * q, 4) == select_mclu_ecbd(model, p.pool, q, 3 * q, 4));

    // lambda = 1 reproduces the MCLU top-q.
    const auto mclu = score_mclu(model, p.pool);
    CHECK(select_mclu_abd(model, p.pool, q, 3 * q, 1.0) == top_q(mclu, q));
    CHECK(select_mao(model, p.pool, 1, 3) == top_q(score_ms(model, p.pool), 1));
    CHECK_THROWS_AS(select_mao(model, p.pool, q, q - 1), ConfigError);
    CHECK_THROWS_AS(select_mao(model, p.pool.topRows(3), q, 3 * q), ConfigError);
}

TEST_CASE("breaking ties") {
    Matrix p(3, 3);
    p << 0.5, 0.5, 0.0, 0.9, 0.05, 0.05, 0.2, 0.3, 0.5;
    const auto bt = score_bt(p);
    CHECK(bt.scores[0] == 0.0);
    CHECK(bt.scores[1] == doctest::Approx(0.85));
    CHECK(bt.scores[2] == doctest::Approx(0.2));
    Matrix bad(1, 2);
    bad << 0.7, 0.7;
    CHECK_THROWS_AS(score_bt(bad), ConfigError);

    Rng rng(13);
    Matrix r(10, 4);
    for (Eigen::Index i = 0; i < 10; ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) r(i, j) = rng.uniform() + 0.01;
        r.row(i) /= r.row(i).sum();
    }
    std::vector<double> gap(10);
    for (Eigen::Index i = 0; i < 10; ++i) {
        double g = 2.0;
        const Eigen::Index top = [&] { Eigen::Index t; r.row(i).maxCoeff(&t); return t; }();
        for (Eigen::Index j = 0; j < 4; ++j)
            if (j != top) g = std::min(g, r(i, top) - r(i, j));
        gap[static_cast<std::size_t>(i)] = g;
    }
    std::vector<std::size_t> order(10);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return gap[a] < gap[b]; });
    CHECK(rank_candidates(score_bt(r)) == order);
}

TEST_CASE("kl-max against a retraining oracle") {
    Rng rng(31);
    Matrix labeled(12, 2), pool(6, 2);
    std::vector<int> labels(12);
    for (Eigen::Index i = 0; i < 12; ++i) {
        labels[static_cast<std::size_t>(i)] = static_cast<int>(i % 3);
        labeled(i, 0) = 1.5 * labels[static_cast<std::size_t>(i)] + rng.normal();
        labeled(i, 1) = rng.normal();
    }
    for (Eigen::Index i = 0; i < 6; ++i) {
        pool(i, 0) = 3.0 * rng.uniform();
        pool(i, 1) = rng.normal();
    }
    LearnerConfig lc;
    lc.kind = ClassifierKind::lda;
    const auto got = score_kl_max(labeled, labels, 3, pool, make_trainer(lc));

    const Matrix before = train_lda(labeled, labels, 3, lc.lda_shrinkage, true).posterior(pool);
    for (Eigen::Index i = 0; i < 6; ++i) {
        Eigen::Index y = 0;
        before.row(i).maxCoeff(&y);
        Matrix grown(13, 2);
        grown << labeled, pool.row(i);
        std::vector<int> grown_labels = labels;
        grown_labels.push_back(static_cast<int>(y));
        const Matrix after = train_lda(grown, grown_labels, 3, lc.lda_shrinkage, true).posterior(pool);
        double expected = 0.0;
        for (int c = 0; c < 3; ++c) {
            double kl = 0.0;
            for (Eigen::Index j = 0; j < 6; ++j) {
                if (j != i) kl += after(j, c) * std::log(after(j, c) / before(j, c));
            }
            expected += kl / 5.0 * before(i, c);
        }
        CHECK(got.scores[static_cast<std::size_t>(i)] == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("kl-max edge cases") {
    Matrix labeled(4, 1), pool(2, 1);
    labeled << 0, 1, 2, 3;
    pool << 0.5, 2.5;
    const std::vector<int> labels{0, 0, 1, 1};
    Trainer unchanged = [](const Matrix&, std::span<const int>, int) {
        return std::make_unique<FixedPosterior>(Eigen::RowVector2d(0.3, 0.7));
    };
    for (double v : score_kl_max(labeled, labels, 2, pool, unchanged).scores) CHECK(v == 0.0);

    // Posterior (0.5, 0.5) before, (0.8, 0.2) after any retraining; u = 2 gives a unit prefactor.
    Trainer shifting = [](const Matrix& x, std::span<const int>, int) {
        return std::make_unique<FixedPosterior>(x.rows() == 4 ? Eigen::RowVector2d(0.5, 0.5) : Eigen::RowVector2d(0.8, 0.2));
    };
    const double expected = 0.5 * 0.8 * std::log(1.6) + 0.5 * 0.2 * std::log(0.4);
    for (double v : score_kl_max(labeled, labels, 2, pool, shifting).scores) {
        CHECK(v == doctest::Approx(expected));
        CHECK(v == doctest::Approx(0.0963725).epsilon(1e-6));
    }

    Trainer failing = [](const Matrix& x, std::span<const int>, int) -> std::unique_ptr<Classifier> {
        if (x.rows() > 4) throw RuntimeFailure("no");
        return std::make_unique<FixedPosterior>(Eigen::RowVector2d(0.5, 0.5));
    };
    for (double v : score_kl_max(labeled, labels, 2, pool, failing).scores) CHECK(v == kExcluded);
    CHECK_THROWS_AS(score_kl_max(labeled, labels, 2, pool.topRows(1), unchanged), ConfigError);
}

TEST_CASE("random sampling") {
    auto whole = select_random(6, 6, 1);
    std::sort(whole.begin(), whole.end());
    CHECK(whole == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
    CHECK(select_random(20, 5, 7) == select_random(20, 5, 7));
    CHECK(select_random(20, 5, 7) != select_random(20, 5, 8));
    CHECK_THROWS_AS(select_random(3, 4, 1), ConfigError);

    // 10^4 draws of 3 from 10: each candidate expected 3000 times, sigma = sqrt(2100).
    std::vector<int> counts(10, 0);
    for (std::uint64_t d = 0; d < 10000; ++d) {
        const auto b = select_random(10, 3, derive_seed(99, d));
        check_batch(b, 3, 10);
        for (std::size_t i : b) ++counts[i];
    }
    const double sigma = std::sqrt(10000 * 0.3 * 0.7);
    for (int c : counts) CHECK(std::abs(c - 3000.0) <= 3.0 * sigma);
}
