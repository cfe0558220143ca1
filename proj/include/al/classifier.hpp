#pragma once

#include "al/kernels.hpp"
#include "al/types.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace al {

/// A trained multiclass model, immutable after training.
class Classifier {
  public:
    virtual ~Classifier() = default;

    virtual int class_count() const noexcept = 0;
    virtual std::vector<int> predict(const Matrix& x) const = 0;
    /// Row i is a probability vector over the classes for sample i.
    virtual Matrix posterior(const Matrix& x) const = 0;
};

enum class ClassifierKind { svm, lda };

struct SmoOptions {
    double tol = 1e-3;                    // KKT violation (max violating pair gap)
    std::size_t max_updates = 1'000'000;  // alpha pair updates before giving up
};

struct SvmParams {
    KernelConfig kernel = KernelConfig::rbf(1.0);
    double c = 1.0;
    SmoOptions smo;
    /// Scale C per sign by n / (2 n_sign) in each one-against-all machine.
    bool class_weighting = false;
    /// Fit per-class Platt sigmoids on cross-validated decision values.
    bool calibrate = false;
    int platt_folds = 3;
    std::uint64_t platt_seed = 0;
};

struct LearnerConfig {
    ClassifierKind kind = ClassifierKind::svm;
    SvmParams svm;
    double lda_shrinkage = 0.1;
};

/// Trains a classifier on (x, y) with labels in [0, n_classes). Classes absent from y
/// are allowed; the resulting model never predicts them.
using Trainer = std::function<std::unique_ptr<Classifier>(const Matrix& x, std::span<const int> y,
                                                          int n_classes)>;

Trainer make_trainer(const LearnerConfig& cfg);

/// Fraction of rows whose prediction equals the label.
double accuracy(const Classifier& model, const Matrix& x, std::span<const int> y);

/// Lowest index among the maxima of `values`, skipping non-finite entries. -1 when none.
int argmax_lowest(std::span<const double> values);

}  // namespace al
