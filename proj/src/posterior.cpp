#include "al/heuristics.hpp"
#include "al/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace al::heuristics {

ScoreVector score_bt(const Matrix& posteriors) {
    ScoreVector out{std::vector<double>(static_cast<std::size_t>(posteriors.rows())), Orientation::minimize};
    for (Eigen::Index i = 0; i < posteriors.rows(); ++i) {
        const auto row = posteriors.row(i);
        if (!row.allFinite() || (row.array() < 0.0).any() || std::abs(row.sum() - 1.0) > 1e-6) {
            throw ConfigError("bt: posterior row " + std::to_string(i) + " is not a probability vector");
        }
        double top = -1.0, second = 0.0;
        for (Eigen::Index c = 0; c < row.size(); ++c) {
            if (row[c] > top) {
                second = std::max(second, top);
                top = row[c];
            } else {
                second = std::max(second, row[c]);
            }
        }
        out.scores[static_cast<std::size_t>(i)] = top - second;
    }
    return out;
}

ScoreVector score_kl_max(const Matrix& labeled, std::span<const int> labels, int n_classes, const Matrix& pool,
                         const Trainer& trainer) {
    const auto u = static_cast<std::size_t>(pool.rows());
    if (u < 2) throw ConfigError("kl-max needs at least two pool candidates");
    if (static_cast<std::size_t>(labeled.rows()) != labels.size()) throw ConfigError("kl-max: row/label mismatch");

    const Matrix before = trainer(labeled, labels, n_classes)->posterior(pool);
    const auto l = labels.size();
    Matrix grown(static_cast<Eigen::Index>(l + 1), labeled.cols());
    grown.topRows(static_cast<Eigen::Index>(l)) = labeled;
    std::vector<int> grown_labels(labels.begin(), labels.end());
    grown_labels.push_back(0);

    ScoreVector out{std::vector<double>(u, kExcluded), Orientation::maximize};
    const double scale = 1.0 / static_cast<double>(u - 1);
    for (std::size_t i = 0; i < u; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const Vector p_i = before.row(row).transpose();
        const int tentative = argmax_lowest(as_span(p_i));
        if (tentative < 0) continue;
        grown.row(static_cast<Eigen::Index>(l)) = pool.row(row);
        grown_labels.back() = tentative;
        Matrix after;
        try {
            after = trainer(grown, grown_labels, n_classes)->posterior(pool);
        } catch (const RuntimeFailure&) {
            continue;
        }
        double score = 0.0;
        for (int c = 0; c < n_classes; ++c) {
            if (p_i[c] <= 0.0) continue;
            double kl = 0.0;
            for (Eigen::Index j = 0; j < pool.rows(); ++j) {
                if (j == row) continue;
                const double pa = after(j, c);
                if (pa <= 0.0) continue;
                const double pb = std::max(before(j, c), 1e-300);
                kl += pa * std::log(pa / pb);
            }
            score += scale * kl * p_i[c];
        }
        out.scores[i] = score;
    }
    return out;
}

std::vector<std::size_t> select_random(std::size_t pool_size, std::size_t q, std::uint64_t seed) {
    if (q == 0 || q > pool_size) throw ConfigError("random: need 1 <= q <= pool size");
    std::vector<std::size_t> idx(pool_size);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    rng.shuffle(idx);
    idx.resize(q);
    return idx;
}

}  // namespace al::heuristics
