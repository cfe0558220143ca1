#include "al/dataset.hpp"
#include "al/heuristics.hpp"
#include "al/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace al::heuristics {

namespace {

Matrix gather_cols(const Matrix& m, std::span<const std::size_t> cols) {
    Matrix out(m.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(static_cast<Eigen::Index>(cols[j]));
    return out;
}

std::size_t distinct_classes(std::span<const int> votes) {
    std::vector<int> v(votes.begin(), votes.end());
    std::sort(v.begin(), v.end());
    return static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
}

void check_training_inputs(const Matrix& labeled, std::span<const int> labels, int n_classes, const Matrix& pool) {
    if (static_cast<std::size_t>(labeled.rows()) != labels.size()) throw ConfigError("labeled rows and labels differ in length");
    if (labeled.rows() == 0) throw ConfigError("empty labeled set");
    if (pool.cols() != labeled.cols()) throw ConfigError("pool and labeled set differ in dimension");
    for (int y : labels) {
        if (y < 0 || y >= n_classes) throw ConfigError("label out of range");
    }
}

}  // namespace

void CommitteeConfig::validate() const {
    if (members < 2) throw ConfigError("committee needs at least 2 members");
    if (!(bag_fraction > 0.0 && bag_fraction <= 1.0)) throw ConfigError("bag_fraction must lie in (0, 1]");
}

double normalized_vote_entropy(std::span<const int> votes, int n_classes) {
    if (votes.empty()) throw ConfigError("normalized_vote_entropy: no votes");
    std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
    for (int v : votes) {
        if (v < 0 || v >= n_classes) throw ConfigError("normalized_vote_entropy: vote out of range");
        ++counts[static_cast<std::size_t>(v)];
    }
    std::size_t voted = 0;
    double h = 0.0;
    const auto total = static_cast<double>(votes.size());
    for (std::size_t c : counts) {
        if (c == 0) continue;
        ++voted;
        const double p = static_cast<double>(c) / total;
        h -= p * std::log(p);
    }
    if (voted < 2) return 0.0;
    return std::clamp(h / std::log(static_cast<double>(voted)), 0.0, 1.0);
}

ScoreVector neqb_from_votes(const std::vector<std::vector<int>>& votes, int n_classes) {
    if (votes.empty()) throw ConfigError("neqb: empty committee");
    const std::size_t u = votes.front().size();
    for (const auto& member : votes) {
        if (member.size() != u) throw ConfigError("neqb: members voted on different pools");
    }
    ScoreVector out{std::vector<double>(u), Orientation::maximize};
    std::vector<int> column(votes.size());
    for (std::size_t i = 0; i < u; ++i) {
        for (std::size_t m = 0; m < votes.size(); ++m) column[m] = votes[m][i];
        out.scores[i] = normalized_vote_entropy(column, n_classes);
    }
    return out;
}

ScoreVector score_neqb(const Matrix& labeled, std::span<const int> labels, int n_classes, const Matrix& pool,
                       const CommitteeConfig& committee, const Trainer& trainer) {
    committee.validate();
    check_training_inputs(labeled, labels, n_classes, pool);
    const auto l = labels.size();
    const auto bag_size = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::lround(committee.bag_fraction * static_cast<double>(l))));

    std::vector<std::vector<int>> votes;
    votes.reserve(static_cast<std::size_t>(committee.members));
    std::vector<std::size_t> bag(bag_size);
    for (int m = 0; m < committee.members; ++m) {
        Rng rng(derive_seed(committee.seed, static_cast<std::uint64_t>(m)));
        bool trained = false;
        for (int attempt = 0; attempt < 20 && !trained; ++attempt) {
            for (auto& b : bag) b = rng.uniform_index(l);
            std::sort(bag.begin(), bag.end());
            const auto y = gather_labels(labels, bag);
            if (std::all_of(y.begin(), y.end(), [&](int v) { return v == y.front(); })) continue;
            try {
                const auto model = trainer(gather_rows(labeled, bag), y, n_classes);
                votes.push_back(model->predict(pool));
                trained = true;
            } catch (const RuntimeFailure&) {
                // redraw
            }
        }
        if (!trained) throw RuntimeFailure("neqb: member " + std::to_string(m) + " untrainable after 20 bag draws");
    }
    return neqb_from_votes(votes, n_classes);
}

void ViewPartition::validate(std::size_t dims) const {
    if (views.empty()) throw ConfigError("view partition is empty");
    std::vector<char> seen(dims, 0);
    for (const auto& v : views) {
        if (v.empty()) throw ConfigError("view partition has an empty view");
        for (std::size_t f : v) {
            if (f >= dims) throw ConfigError("view partition references a missing feature");
            if (seen[f]) throw ConfigError("view partition views overlap");
            seen[f] = 1;
        }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw ConfigError("view partition misses a feature");
}

ViewPartition contiguous_views(std::size_t dims, std::size_t n_views) {
    if (n_views < 1 || n_views > dims) throw ConfigError("need 1 <= views <= feature count");
    ViewPartition out;
    std::size_t next = 0;
    for (std::size_t v = 0; v < n_views; ++v) {
        const std::size_t width = dims / n_views + (v < dims % n_views ? 1 : 0);
        std::vector<std::size_t> block(width);
        std::iota(block.begin(), block.end(), next);
        next += width;
        out.views.push_back(std::move(block));
    }
    return out;
}

ViewPartition correlation_views(const Matrix& data, std::size_t n_views, double threshold) {
    const auto d = static_cast<std::size_t>(data.cols());
    if (n_views < 1 || n_views > d) throw ConfigError("need 1 <= views <= feature count");
    if (data.rows() < 2) throw ConfigError("correlation_views: need at least two samples");

    const Matrix centered = data.rowwise() - data.colwise().mean();
    const Eigen::MatrixXd cov = centered.transpose() * centered;
    std::vector<std::size_t> parent(d);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a + 1; b < d; ++b) {
            const double denom = std::sqrt(cov(a, a) * cov(b, b));
            if (denom <= 0.0) continue;
            if (std::abs(cov(a, b)) / denom >= threshold) {
                const auto ra = find(a), rb = find(b);
                parent[std::max(ra, rb)] = std::min(ra, rb);
            }
        }
    }
    // Components ordered by their lowest feature.
    std::vector<std::vector<std::size_t>> groups;
    std::vector<std::size_t> group_of_root(d, d);
    for (std::size_t f = 0; f < d; ++f) {
        const auto r = find(f);
        if (group_of_root[r] == d) {
            group_of_root[r] = groups.size();
            groups.emplace_back();
        }
        groups[group_of_root[r]].push_back(f);
    }
    while (groups.size() > n_views) {
        std::size_t best = 0;
        for (std::size_t g = 1; g + 1 < groups.size(); ++g) {
            if (groups[g].size() + groups[g + 1].size() < groups[best].size() + groups[best + 1].size()) best = g;
        }
        auto& into = groups[best];
        into.insert(into.end(), groups[best + 1].begin(), groups[best + 1].end());
        std::sort(into.begin(), into.end());
        groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(best) + 1);
    }
    while (groups.size() < n_views) {
        std::size_t widest = 0;
        for (std::size_t g = 1; g < groups.size(); ++g) {
            if (groups[g].size() > groups[widest].size()) widest = g;
        }
        auto& g = groups[widest];
        const auto half = static_cast<std::ptrdiff_t>(g.size() / 2);
        std::vector<std::size_t> tail(g.begin() + half, g.end());
        g.erase(g.begin() + half, g.end());
        groups.insert(groups.begin() + static_cast<std::ptrdiff_t>(widest) + 1, std::move(tail));
    }
    return ViewPartition{std::move(groups)};
}

ViewWeights ViewWeights::uniform(int n_classes, std::size_t n_views) {
    if (n_classes < 1 || n_views < 1) throw ConfigError("view weights need classes and views");
    return {Matrix::Constant(n_classes, static_cast<Eigen::Index>(n_views), 1.0 / n_classes)};
}

void ViewWeights::validate() const {
    if (w.size() == 0) throw ConfigError("view weights are empty");
    for (Eigen::Index v = 0; v < w.cols(); ++v) {
        if ((w.col(v).array() < 0.0).any() || !w.col(v).allFinite()) throw ConfigError("view weights must be finite and nonnegative");
        if (std::abs(w.col(v).sum() - 1.0) > 1e-9) throw ConfigError("view weight columns must sum to 1");
    }
}

std::vector<std::vector<int>> view_predictions(const Matrix& labeled, std::span<const int> labels, int n_classes,
                                               const Matrix& pool, const ViewPartition& views,
                                               const Trainer& trainer) {
    check_training_inputs(labeled, labels, n_classes, pool);
    views.validate(static_cast<std::size_t>(labeled.cols()));
    std::vector<std::vector<int>> out;
    out.reserve(views.views.size());
    for (const auto& v : views.views) {
        const auto model = trainer(gather_cols(labeled, v), labels, n_classes);
        out.push_back(model->predict(gather_cols(pool, v)));
    }
    return out;
}

double multiview_entropy(std::span<const int> view_votes, const ViewWeights& weights) {
    const auto n_views = static_cast<std::size_t>(weights.w.cols());
    if (view_votes.size() != n_views) throw ConfigError("multiview_entropy: one vote per view expected");
    const auto n_classes = static_cast<int>(weights.w.rows());
    for (int v : view_votes) {
        if (v < 0 || v >= n_classes) throw ConfigError("multiview_entropy: vote out of range");
    }
    const auto voted = static_cast<double>(distinct_classes(view_votes));
    std::vector<double> mass(static_cast<std::size_t>(n_classes), 0.0);
    std::vector<char> present(static_cast<std::size_t>(n_classes), 0);
    for (std::size_t v = 0; v < n_views; ++v) {
        const int c = view_votes[v];
        mass[static_cast<std::size_t>(c)] += weights.w(c, static_cast<Eigen::Index>(v));
        present[static_cast<std::size_t>(c)] = 1;
    }
    double h = 0.0;
    for (int c = 0; c < n_classes; ++c) {
        if (!present[static_cast<std::size_t>(c)]) continue;
        const double denom = voted * weights.w.row(c).sum();
        if (denom <= 0.0) continue;
        const double p = mass[static_cast<std::size_t>(c)] / denom;
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

ScoreVector amd_from_predictions(const std::vector<std::vector<int>>& per_view, const ViewWeights& weights) {
    if (per_view.size() != static_cast<std::size_t>(weights.w.cols())) throw ConfigError("amd: view count mismatch");
    const std::size_t u = per_view.front().size();
    for (const auto& p : per_view) {
        if (p.size() != u) throw ConfigError("amd: views predicted different pools");
    }
    std::vector<int> column(per_view.size());
    std::vector<std::size_t> distinct(u);
    std::size_t most = 0;
    for (std::size_t i = 0; i < u; ++i) {
        for (std::size_t v = 0; v < per_view.size(); ++v) column[v] = per_view[v][i];
        distinct[i] = distinct_classes(column);
        most = std::max(most, distinct[i]);
    }
    ScoreVector out{std::vector<double>(u, kExcluded), Orientation::maximize};
    for (std::size_t i = 0; i < u; ++i) {
        if (distinct[i] != most) continue;
        for (std::size_t v = 0; v < per_view.size(); ++v) column[v] = per_view[v][i];
        out.scores[i] = multiview_entropy(column, weights);
    }
    return out;
}

ScoreVector score_amd(const Matrix& labeled, std::span<const int> labels, int n_classes, const Matrix& pool,
                      const ViewPartition& views, const ViewWeights& weights, const Trainer& trainer) {
    weights.validate();
    if (weights.w.rows() != n_classes || static_cast<std::size_t>(weights.w.cols()) != views.views.size()) {
        throw ConfigError("amd: weights must be classes x views");
    }
    return amd_from_predictions(view_predictions(labeled, labels, n_classes, pool, views, trainer), weights);
}

ViewWeights update_amd_weights(const ViewWeights& weights, std::span<const int> true_labels,
                               const std::vector<std::vector<int>>& per_view_predictions) {
    if (per_view_predictions.size() != static_cast<std::size_t>(weights.w.cols())) {
        throw ConfigError("update_amd_weights: one prediction list per view expected");
    }
    ViewWeights out = weights;
    for (std::size_t v = 0; v < per_view_predictions.size(); ++v) {
        const auto& pred = per_view_predictions[v];
        if (pred.size() != true_labels.size()) throw ConfigError("update_amd_weights: predictions missing for the batch");
        for (std::size_t s = 0; s < pred.size(); ++s) {
            const int y = true_labels[s];
            if (y < 0 || y >= out.w.rows()) throw ConfigError("update_amd_weights: label out of range");
            if (pred[s] == y) out.w(y, static_cast<Eigen::Index>(v)) += 1.0;
        }
    }
    for (Eigen::Index v = 0; v < out.w.cols(); ++v) out.w.col(v) /= out.w.col(v).sum();
    return out;
}

}  // namespace al::heuristics
