#pragma once

#include "al/classifier.hpp"
#include "al/types.hpp"

#include <span>
#include <vector>

namespace al {

/// Linear discriminant analysis: Gaussian classes sharing one covariance matrix.
class LdaModel final : public Classifier {
  public:
    LdaModel(Matrix class_means, Matrix covariance, std::vector<double> priors, double shrinkage);

    int class_count() const noexcept override { return static_cast<int>(priors_.size()); }
    std::vector<int> predict(const Matrix& x) const override;
    Matrix posterior(const Matrix& x) const override;

    /// Unnormalized log posterior: -1/2 (x-mu)' S^-1 (x-mu) + log prior, -inf for absent classes.
    Matrix log_scores(const Matrix& x) const;

    const Matrix& class_means() const noexcept { return means_; }
    const Matrix& covariance() const noexcept { return covariance_; }
    const std::vector<double>& priors() const noexcept { return priors_; }
    double shrinkage() const noexcept { return shrinkage_; }

  private:
    Matrix means_;       // N x d
    Matrix covariance_;  // d x d, after shrinkage
    std::vector<double> priors_;
    double shrinkage_;
    Eigen::LLT<Eigen::MatrixXd> chol_;
};

/// Class means, pooled within-class covariance scatter / (n - N_present), shrunk
/// toward its diagonal: (1 - s) S + s diag(S). Priors are class frequencies.
/// A class missing from y is a ConfigError unless `allow_absent_classes`, in which
/// case it gets prior 0 and is never predicted. Throws RuntimeFailure("singular
/// covariance") when the regularized covariance is not positive definite.
LdaModel train_lda(const Matrix& x, std::span<const int> y, int n_classes, double shrinkage,
                   bool allow_absent_classes = false);

}  // namespace al
