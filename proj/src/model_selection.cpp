#include "al/model_selection.hpp"
#include "al/dataset.hpp"
#include "al/rng.hpp"
#include "al/svm.hpp"

#include <algorithm>
#include <limits>

namespace al {

namespace {

Matrix sub_gram(const Matrix& gram, std::span<const std::size_t> rows, std::span<const std::size_t> cols) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                gram(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
        }
    }
    return out;
}

}  // namespace

std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed) {
    if (folds < 1) throw ConfigError("folds must be >= 1");
    int n_classes = 0;
    for (int y : labels) n_classes = std::max(n_classes, y + 1);
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(n_classes));
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);

    Rng rng(seed);
    std::vector<int> fold(labels.size(), 0);
    std::size_t dealt = 0;
    for (auto& members : by_class) {
        rng.shuffle(members);
        for (std::size_t i : members) fold[i] = static_cast<int>(dealt++ % static_cast<std::size_t>(folds));
    }
    return fold;
}

std::vector<double> default_c_grid() { return {1.0, 10.0, 100.0, 1000.0}; }
std::vector<double> default_gamma_grid() { return {0.1, 0.3, 1.0, 3.0}; }

CvResult cross_validate(const Matrix& x, std::span<const int> y, int n_classes,
                        std::span<const KernelConfig> kernel_grid, std::span<const double> c_grid,
                        int folds, std::uint64_t seed, const SmoOptions& smo) {
    if (kernel_grid.empty() || c_grid.empty()) throw ConfigError("cross_validate: empty grid");
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw ConfigError("cross_validate: row/label mismatch");

    std::vector<KernelConfig> kernels(kernel_grid.begin(), kernel_grid.end());
    std::stable_sort(kernels.begin(), kernels.end(), [](const KernelConfig& a, const KernelConfig& b) {
        if (a.kind != b.kind) return a.kind == KernelKind::linear;
        return a.kind == KernelKind::rbf && a.gamma < b.gamma;
    });
    std::vector<double> cs(c_grid.begin(), c_grid.end());
    std::sort(cs.begin(), cs.end());

    if (kernels.size() == 1 && cs.size() == 1) return {kernels.front(), cs.front(), 0.0, 0};

    std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
    for (int label : y) ++counts[static_cast<std::size_t>(label)];
    std::size_t smallest = std::numeric_limits<std::size_t>::max();
    for (std::size_t c : counts) {
        if (c > 0) smallest = std::min(smallest, c);
    }
    const int k = static_cast<int>(std::clamp<std::size_t>(smallest, 2, static_cast<std::size_t>(std::max(folds, 2))));
    const auto fold_of = stratified_folds(y, k, seed);

    std::vector<std::vector<std::size_t>> train_idx(static_cast<std::size_t>(k)), test_idx(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < y.size(); ++i) {
        for (int f = 0; f < k; ++f) {
            (fold_of[i] == f ? test_idx : train_idx)[static_cast<std::size_t>(f)].push_back(i);
        }
    }

    CvResult best{kernels.front(), cs.front(), -1.0, k};
    // Scan order (C ascending, then gamma ascending) plus strict improvement gives the tie rule.
    std::vector<std::vector<double>> score(cs.size(), std::vector<double>(kernels.size(), -1.0));
    for (std::size_t g = 0; g < kernels.size(); ++g) {
        const Matrix gram = gram_matrix(kernels[g], x);
        for (std::size_t ci = 0; ci < cs.size(); ++ci) {
            SvmParams params;
            params.kernel = kernels[g];
            params.c = cs[ci];
            params.smo = smo;
            double total = 0.0;
            bool failed = false;
            for (int f = 0; f < k && !failed; ++f) {
                const auto& tr = train_idx[static_cast<std::size_t>(f)];
                const auto& te = test_idx[static_cast<std::size_t>(f)];
                if (te.empty()) continue;
                const auto ytr = gather_labels(y, tr);
                try {
                    const auto model = train_multiclass_svm(gather_rows(x, tr), sub_gram(gram, tr, tr), ytr,
                                                            n_classes, params);
                    const auto pred = model.predict(gather_rows(x, te));
                    std::size_t hits = 0;
                    for (std::size_t t = 0; t < te.size(); ++t) hits += pred[t] == y[te[t]] ? 1 : 0;
                    total += static_cast<double>(hits) / static_cast<double>(te.size());
                } catch (const RuntimeFailure&) {
                    failed = true;
                } catch (const ConfigError&) {
                    failed = true;
                }
            }
            score[ci][g] = failed ? -1.0 : total / k;
        }
    }
    for (std::size_t ci = 0; ci < cs.size(); ++ci) {
        for (std::size_t g = 0; g < kernels.size(); ++g) {
            if (score[ci][g] > best.accuracy) best = {kernels[g], cs[ci], score[ci][g], k};
        }
    }
    if (best.accuracy < 0.0) throw RuntimeFailure("cross_validate: every grid point failed to train");
    return best;
}

}  // namespace al
