#include "al/clustering.hpp"
#include "al/heuristics.hpp"
#include "al/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace al::heuristics {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_batch(const UncertainSubset& subset, std::size_t q) {
    if (q == 0) throw ConfigError("batch size q must be >= 1");
    if (subset.candidates.size() != subset.uncertainty.size()) throw ConfigError("malformed uncertain subset");
    if (subset.candidates.size() < q) throw ConfigError("uncertain subset holds fewer than q candidates");
}

std::size_t clamp_subset(std::size_t pool_size, std::size_t q, std::size_t subset_size) {
    if (q == 0) throw ConfigError("batch size q must be >= 1");
    if (pool_size < q) throw ConfigError("pool holds fewer than q candidates");
    if (subset_size < q) throw ConfigError("subset size must be >= q");
    return std::min(subset_size, pool_size);
}

// Position in `subset` minimizing crit, ties to the lower pool index.
std::size_t argmin_by_pool(const UncertainSubset& subset, const std::vector<char>& taken,
                           const std::vector<double>& crit) {
    std::size_t best = subset.candidates.size();
    for (std::size_t s = 0; s < subset.candidates.size(); ++s) {
        if (taken[s]) continue;
        if (best == subset.candidates.size() || crit[s] < crit[best] ||
            (crit[s] == crit[best] && subset.candidates[s] < subset.candidates[best])) {
            best = s;
        }
    }
    return best;
}

// Algorithm-2 loop: seed with the most uncertain candidate, then add the argmin of
// crit(s) = base[s] + weight * max_{j in batch} sim(s, j).
std::vector<std::size_t> greedy_diverse(const Matrix& pool, const KernelConfig& kernel, const UncertainSubset& subset,
                                        std::size_t q, const std::vector<double>& base, double weight,
                                        bool normalized) {
    const auto m = subset.candidates.size();
    const Matrix rows = gather_rows(pool, subset.candidates);
    std::vector<char> taken(m, 0);
    std::vector<double> max_sim(m, -kInf);
    std::vector<std::size_t> batch;
    std::vector<double> crit(m);
    auto add = [&](std::size_t s) {
        taken[s] = 1;
        batch.push_back(subset.candidates[s]);
        for (std::size_t t = 0; t < m; ++t) {
            if (taken[t]) continue;
            const auto a = row_span(rows, static_cast<Eigen::Index>(t));
            const auto b = row_span(rows, static_cast<Eigen::Index>(s));
            const double k = normalized ? normalized_similarity(kernel, a, b) : kernel_eval(kernel, a, b);
            max_sim[t] = std::max(max_sim[t], k);
        }
    };
    add(argmin_by_pool(subset, taken, subset.uncertainty));
    while (batch.size() < q) {
        for (std::size_t t = 0; t < m; ++t) crit[t] = base[t] + weight * max_sim[t];
        add(argmin_by_pool(subset, taken, crit));
    }
    return batch;
}

double second_largest_gap(std::span<const double> values) {
    double top = -kInf, second = -kInf;
    for (double v : values) {
        if (v > top) {
            second = top;
            top = v;
        } else if (v > second) {
            second = v;
        }
    }
    if (second == -kInf) return top;
    return top - second;
}

}  // namespace

std::vector<std::size_t> rank_candidates(const ScoreVector& sv) {
    std::vector<std::size_t> order(sv.scores.size());
    std::iota(order.begin(), order.end(), 0);
    const bool maximize = sv.orientation == Orientation::maximize;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double x = sv.scores[a], y = sv.scores[b];
        const bool fx = std::isfinite(x), fy = std::isfinite(y);
        if (fx != fy) return fx;
        if (!fx) return false;
        return maximize ? x > y : x < y;
    });
    return order;
}

std::vector<std::size_t> top_q(const ScoreVector& sv, std::size_t q) {
    auto order = rank_candidates(sv);
    order.resize(std::min(q, order.size()));
    return order;
}

UncertainSubset uncertain_subset(const ScoreVector& sv, std::size_t size) {
    if (sv.orientation != Orientation::minimize) throw ConfigError("uncertain_subset needs a minimize-oriented score");
    UncertainSubset out;
    for (std::size_t i : top_q(sv, size)) {
        if (!std::isfinite(sv.scores[i])) break;
        out.candidates.push_back(i);
        out.uncertainty.push_back(sv.scores[i]);
    }
    return out;
}

ScoreVector ms_from_decisions(const Matrix& decisions) {
    ScoreVector out{std::vector<double>(static_cast<std::size_t>(decisions.rows())), Orientation::minimize};
    for (Eigen::Index i = 0; i < decisions.rows(); ++i) {
        double best = kInf;
        for (Eigen::Index c = 0; c < decisions.cols(); ++c) {
            const double f = decisions(i, c);
            if (std::isfinite(f)) best = std::min(best, std::abs(f));
        }
        if (best == kInf) throw ConfigError("ms: no finite decision value");
        out.scores[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

ScoreVector mclu_from_decisions(const Matrix& decisions) {
    if (decisions.cols() < 2) throw ConfigError("mclu needs at least two classes");
    ScoreVector out{std::vector<double>(static_cast<std::size_t>(decisions.rows())), Orientation::minimize};
    std::vector<double> mags;
    for (Eigen::Index i = 0; i < decisions.rows(); ++i) {
        mags.clear();
        for (Eigen::Index c = 0; c < decisions.cols(); ++c) {
            const double f = decisions(i, c);
            if (std::isfinite(f)) mags.push_back(std::abs(f));
        }
        if (mags.empty()) throw ConfigError("mclu: no finite decision value");
        out.scores[static_cast<std::size_t>(i)] = second_largest_gap(mags);
    }
    return out;
}

ScoreVector score_ms(const MulticlassSvm& model, const Matrix& pool) {
    return ms_from_decisions(model.decision_values(pool));
}

ScoreVector score_mclu(const MulticlassSvm& model, const Matrix& pool) {
    return mclu_from_decisions(model.decision_values(pool));
}

std::vector<std::size_t> select_ssc(const MulticlassSvm& model, const Matrix& labeled, const Matrix& pool,
                                    std::size_t q, std::uint64_t seed) {
    const auto u = static_cast<std::size_t>(pool.rows());
    if (q == 0 || q > u) throw ConfigError("ssc: need 1 <= q <= pool size");
    const auto l = static_cast<std::size_t>(labeled.rows());
    std::vector<int> signs(l, -1);
    for (std::size_t i : model.support_idx()) {
        if (i >= l) throw ConfigError("ssc: labeled set is not the model's training set");
        signs[i] = 1;
    }
    const auto positives_in_x = static_cast<std::size_t>(std::count(signs.begin(), signs.end(), 1));
    if (positives_in_x == 0 || positives_in_x == l) {
        throw SscUnavailable("ssc: labeled set has all or no support vectors");
    }
    const auto ssc = train_binary_svm(labeled, signs, model.kernel(), model.c_penalty());
    const Vector f = ssc.decision(pool);

    std::vector<std::size_t> positive, negative;
    for (std::size_t i = 0; i < u; ++i) (f[static_cast<Eigen::Index>(i)] > 0.0 ? positive : negative).push_back(i);
    Rng rng(seed);
    rng.shuffle(positive);
    if (positive.size() >= q) {
        positive.resize(q);
        return positive;
    }
    std::stable_sort(negative.begin(), negative.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(f[static_cast<Eigen::Index>(a)]) < std::abs(f[static_cast<Eigen::Index>(b)]);
    });
    for (std::size_t i : negative) {
        if (positive.size() == q) break;
        positive.push_back(i);
    }
    return positive;
}

std::vector<std::size_t> mao_batch(const Matrix& pool, const KernelConfig& kernel, const UncertainSubset& subset,
                                   std::size_t q) {
    check_batch(subset, q);
    return greedy_diverse(pool, kernel, subset, q, std::vector<double>(subset.candidates.size(), 0.0), 1.0, false);
}

std::vector<std::size_t> abd_batch(const Matrix& pool, const KernelConfig& kernel, const UncertainSubset& subset,
                                   std::size_t q, double lambda) {
    check_batch(subset, q);
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("mclu-abd: lambda must lie in [0, 1]");
    std::vector<double> base(subset.uncertainty.size());
    for (std::size_t s = 0; s < base.size(); ++s) base[s] = lambda * subset.uncertainty[s];
    return greedy_diverse(pool, kernel, subset, q, base, 1.0 - lambda, true);
}

std::size_t closest_support_vector(const KernelConfig& kernel, const Matrix& support_vectors,
                                   std::span<const double> x) {
    if (support_vectors.rows() == 0) throw ConfigError("csv: model has no support vectors");
    const double kxx = kernel_eval(kernel, x, x);
    std::size_t best = 0;
    double best_d = kInf;
    for (Eigen::Index s = 0; s < support_vectors.rows(); ++s) {
        const auto sv = row_span(support_vectors, s);
        const double d = kxx - 2.0 * kernel_eval(kernel, x, sv) + kernel_eval(kernel, sv, sv);
        if (d < best_d) {
            best_d = d;
            best = static_cast<std::size_t>(s);
        }
    }
    return best;
}

std::vector<std::size_t> csv_batch(const Matrix& pool, const KernelConfig& kernel, const Matrix& support_vectors,
                                   const UncertainSubset& subset, std::size_t q) {
    check_batch(subset, q);
    if (support_vectors.rows() == 0) throw ConfigError("csv: model has no support vectors");
    std::vector<std::size_t> batch;
    std::vector<char> taken(subset.candidates.size(), 0);
    std::vector<char> used(static_cast<std::size_t>(support_vectors.rows()), 0);
    for (std::size_t s = 0; s < subset.candidates.size() && batch.size() < q; ++s) {
        const auto c = closest_support_vector(kernel, support_vectors,
                                              row_span(pool, static_cast<Eigen::Index>(subset.candidates[s])));
        if (used[c]) continue;
        used[c] = 1;
        taken[s] = 1;
        batch.push_back(subset.candidates[s]);
    }
    for (std::size_t s = 0; s < subset.candidates.size() && batch.size() < q; ++s) {
        if (!taken[s]) batch.push_back(subset.candidates[s]);
    }
    return batch;
}

std::vector<std::size_t> select_mao(const MulticlassSvm& model, const Matrix& pool, std::size_t q,
                                    std::size_t subset_size) {
    const auto m = clamp_subset(static_cast<std::size_t>(pool.rows()), q, subset_size);
    return mao_batch(pool, model.kernel(), uncertain_subset(score_ms(model, pool), m), q);
}

std::vector<std::size_t> select_mclu_abd(const MulticlassSvm& model, const Matrix& pool, std::size_t q,
                                         std::size_t subset_size, double lambda) {
    const auto m = clamp_subset(static_cast<std::size_t>(pool.rows()), q, subset_size);
    return abd_batch(pool, model.kernel(), uncertain_subset(score_mclu(model, pool), m), q, lambda);
}

std::vector<std::size_t> select_csv(const MulticlassSvm& model, const Matrix& pool, std::size_t q,
                                    std::size_t subset_size) {
    const auto m = clamp_subset(static_cast<std::size_t>(pool.rows()), q, subset_size);
    return csv_batch(pool, model.kernel(), model.support_vectors(), uncertain_subset(score_ms(model, pool), m), q);
}

std::vector<std::size_t> ecbd_batch(const Matrix& pool, const KernelConfig& kernel, const UncertainSubset& subset,
                                    std::size_t q, std::uint64_t seed) {
    check_batch(subset, q);
    const auto clusters =
        kernel_kmeans(gather_rows(pool, subset.candidates), kernel, static_cast<int>(q), seed);
    std::vector<std::size_t> best(q, subset.candidates.size());
    for (std::size_t s = 0; s < subset.candidates.size(); ++s) {
        auto& b = best[static_cast<std::size_t>(clusters.labels[s])];
        if (b == subset.candidates.size() || subset.uncertainty[s] < subset.uncertainty[b] ||
            (subset.uncertainty[s] == subset.uncertainty[b] && subset.candidates[s] < subset.candidates[b])) {
            b = s;
        }
    }
    std::vector<std::size_t> batch;
    for (std::size_t b : best) batch.push_back(subset.candidates[b]);
    return batch;
}

std::vector<std::size_t> select_mclu_ecbd(const MulticlassSvm& model, const Matrix& pool, std::size_t q,
                                          std::size_t subset_size, std::uint64_t seed) {
    const auto m = clamp_subset(static_cast<std::size_t>(pool.rows()), q, subset_size);
    return ecbd_batch(pool, model.kernel(), uncertain_subset(score_mclu(model, pool), m), q, seed);
}

std::vector<std::size_t> hmcs_batch(const Matrix& pool, const KernelConfig& kernel, const UncertainSubset& subset,
                                    const Matrix& prev_bounded_svs, std::size_t q, std::uint64_t seed) {
    check_batch(subset, q);
    const auto m = subset.candidates.size();
    const auto b = static_cast<std::size_t>(prev_bounded_svs.rows());
    if (b > 0 && prev_bounded_svs.cols() != pool.cols()) throw ConfigError("hmcs-i: bounded SVs differ in dimension");
    Matrix samples(static_cast<Eigen::Index>(m + b), pool.cols());
    samples.topRows(static_cast<Eigen::Index>(m)) = gather_rows(pool, subset.candidates);
    if (b > 0) samples.bottomRows(static_cast<Eigen::Index>(b)) = prev_bounded_svs;

    ClusterAssignment part;
    part.k = 1;
    part.labels.assign(m + b, 0);
    std::vector<std::size_t> clean;
    for (std::uint64_t split = 0;; ++split) {
        std::vector<std::size_t> size(static_cast<std::size_t>(part.k), 0), bsv(static_cast<std::size_t>(part.k), 0);
        for (std::size_t i = 0; i < m + b; ++i) {
            const auto c = static_cast<std::size_t>(part.labels[i]);
            ++size[c];
            if (i >= m) ++bsv[c];
        }
        clean.clear();
        for (std::size_t c = 0; c < size.size(); ++c) {
            if (bsv[c] == 0) clean.push_back(c);
        }
        const bool singletons = *std::max_element(size.begin(), size.end()) < 2;
        if (clean.size() >= q || singletons) {
            std::stable_sort(clean.begin(), clean.end(), [&](std::size_t x, std::size_t y) { return size[x] > size[y]; });
            break;
        }
        part = binary_split_largest(part, samples, kernel, derive_seed(seed, split));
    }
    if (clean.size() < q) throw RuntimeFailure("hmcs-i: fewer than q clusters free of bounded support vectors");

    std::vector<std::size_t> batch;
    for (std::size_t r = 0; r < q; ++r) {
        const auto c = static_cast<int>(clean[r]);
        std::size_t best = m;
        for (std::size_t s = 0; s < m; ++s) {
            if (part.labels[s] != c) continue;
            if (best == m || subset.uncertainty[s] < subset.uncertainty[best] ||
                (subset.uncertainty[s] == subset.uncertainty[best] && subset.candidates[s] < subset.candidates[best])) {
                best = s;
            }
        }
        batch.push_back(subset.candidates[best]);
    }
    return batch;
}

std::vector<std::size_t> select_hmcs_i(const MulticlassSvm& model, const Matrix& pool, std::size_t q,
                                       std::size_t subset_size, const Matrix& prev_bounded_svs,
                                       std::uint64_t seed) {
    const auto m = clamp_subset(static_cast<std::size_t>(pool.rows()), q, subset_size);
    return hmcs_batch(pool, model.kernel(), uncertain_subset(score_mclu(model, pool), m), prev_bounded_svs, q, seed);
}

}  // namespace al::heuristics
