#include "al/classifier.hpp"
#include "al/dataset.hpp"
#include "al/lda.hpp"
#include "al/model_selection.hpp"
#include "al/svm.hpp"

#include <cmath>

namespace al {

namespace {

// Per-class sigmoids on out-of-fold decision values; falls back to in-sample
// values when a class is too small to appear in every training fold.
void calibrate(MulticlassSvm& model, const Matrix& x, const Matrix& gram, std::span<const int> y,
               const SvmParams& params) {
    const int n_classes = model.class_count();
    const auto n = y.size();
    std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
    for (int label : y) ++counts[static_cast<std::size_t>(label)];
    bool cross_fit = params.platt_folds >= 2;
    for (std::size_t c : counts) {
        if (c > 0 && c < static_cast<std::size_t>(params.platt_folds)) cross_fit = false;
    }

    Matrix decisions(static_cast<Eigen::Index>(n), n_classes);
    if (cross_fit) {
        const auto fold_of = stratified_folds(y, params.platt_folds, params.platt_seed);
        SvmParams inner = params;
        inner.calibrate = false;
        for (int f = 0; f < params.platt_folds; ++f) {
            std::vector<std::size_t> tr, te;
            for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? te : tr).push_back(i);
            Matrix g(static_cast<Eigen::Index>(tr.size()), static_cast<Eigen::Index>(tr.size()));
            for (std::size_t a = 0; a < tr.size(); ++a)
                for (std::size_t b = 0; b < tr.size(); ++b)
                    g(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                        gram(static_cast<Eigen::Index>(tr[a]), static_cast<Eigen::Index>(tr[b]));
            const auto fold_model =
                train_multiclass_svm(gather_rows(x, tr), g, gather_labels(y, tr), n_classes, inner);
            const Matrix f_te = fold_model.decision_values(gather_rows(x, te));
            for (std::size_t t = 0; t < te.size(); ++t) {
                decisions.row(static_cast<Eigen::Index>(te[t])) = f_te.row(static_cast<Eigen::Index>(t));
            }
        }
    } else {
        decisions = model.decision_values(x);
    }

    std::vector<PlattSigmoid> sigmoids(static_cast<std::size_t>(n_classes));
    std::vector<double> f(n);
    std::vector<int> signs(n);
    for (int k = 0; k < n_classes; ++k) {
        if (!model.has_class(k)) continue;
        for (std::size_t i = 0; i < n; ++i) {
            f[i] = decisions(static_cast<Eigen::Index>(i), k);
            signs[i] = y[i] == k ? 1 : -1;
        }
        sigmoids[static_cast<std::size_t>(k)] = fit_platt(f, signs);
    }
    model.set_calibration(std::move(sigmoids));
}

}  // namespace

int argmax_lowest(std::span<const double> values) {
    int best = -1;
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (!std::isfinite(values[k])) continue;
        if (best < 0 || values[k] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
    }
    return best;
}

double accuracy(const Classifier& model, const Matrix& x, std::span<const int> y) {
    if (y.empty()) throw ConfigError("accuracy: empty evaluation set");
    const auto pred = model.predict(x);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y.size(); ++i) hits += pred[i] == y[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(y.size());
}

Trainer make_trainer(const LearnerConfig& cfg) {
    if (cfg.kind == ClassifierKind::lda) {
        const double shrinkage = cfg.lda_shrinkage;
        return [shrinkage](const Matrix& x, std::span<const int> y, int n_classes) -> std::unique_ptr<Classifier> {
            return std::make_unique<LdaModel>(train_lda(x, y, n_classes, shrinkage, true));
        };
    }
    const SvmParams params = cfg.svm;
    return [params](const Matrix& x, std::span<const int> y, int n_classes) -> std::unique_ptr<Classifier> {
        params.kernel.validate();
        const Matrix gram = gram_matrix(params.kernel, x);
        auto model = std::make_unique<MulticlassSvm>(train_multiclass_svm(x, gram, y, n_classes, params));
        if (params.calibrate) calibrate(*model, x, gram, y, params);
        return model;
    };
}

}  // namespace al
