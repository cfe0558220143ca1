#include "al/lda.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace al {

LdaModel::LdaModel(Matrix class_means, Matrix covariance, std::vector<double> priors, double shrinkage)
    : means_(std::move(class_means)),
      covariance_(std::move(covariance)),
      priors_(std::move(priors)),
      shrinkage_(shrinkage),
      chol_(Eigen::MatrixXd(covariance_)) {
    if (chol_.info() != Eigen::Success) throw RuntimeFailure("lda: singular covariance");
}

Matrix LdaModel::log_scores(const Matrix& x) const {
    if (x.cols() != means_.cols()) throw ConfigError("lda: sample dimension does not match the model");
    const auto n_classes = static_cast<Eigen::Index>(priors_.size());
    Matrix out(x.rows(), n_classes);
    Eigen::VectorXd diff(x.cols());
    for (Eigen::Index k = 0; k < n_classes; ++k) {
        const double prior = priors_[static_cast<std::size_t>(k)];
        if (prior <= 0.0) {
            out.col(k).setConstant(-std::numeric_limits<double>::infinity());
            continue;
        }
        const double log_prior = std::log(prior);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            diff = (x.row(i) - means_.row(k)).transpose();
            const Eigen::VectorXd z = chol_.matrixL().solve(diff);
            out(i, k) = -0.5 * z.squaredNorm() + log_prior;
        }
    }
    return out;
}

Matrix LdaModel::posterior(const Matrix& x) const {
    Matrix p = log_scores(x);
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        const double top = p.row(i).maxCoeff();
        double total = 0.0;
        for (Eigen::Index k = 0; k < p.cols(); ++k) {
            p(i, k) = std::exp(p(i, k) - top);
            total += p(i, k);
        }
        p.row(i) /= total;
    }
    return p;
}

std::vector<int> LdaModel::predict(const Matrix& x) const {
    const Matrix s = log_scores(x);
    std::vector<int> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < s.rows(); ++i) out[static_cast<std::size_t>(i)] = argmax_lowest(row_span(s, i));
    return out;
}

LdaModel train_lda(const Matrix& x, std::span<const int> y, int n_classes, double shrinkage,
                   bool allow_absent_classes) {
    const auto n = y.size();
    if (static_cast<std::size_t>(x.rows()) != n) throw ConfigError("lda: row/label mismatch");
    if (!(shrinkage >= 0.0 && shrinkage <= 1.0)) throw ConfigError("lda: shrinkage must be in [0, 1]");
    if (n_classes < 1) throw ConfigError("lda: no classes");
    const auto d = x.cols();

    std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
    Matrix means = Matrix::Zero(n_classes, d);
    for (std::size_t i = 0; i < n; ++i) {
        if (y[i] < 0 || y[i] >= n_classes) throw ConfigError("lda: label out of range");
        ++counts[static_cast<std::size_t>(y[i])];
        means.row(y[i]) += x.row(static_cast<Eigen::Index>(i));
    }
    std::size_t n_present = 0;
    for (int k = 0; k < n_classes; ++k) {
        if (counts[static_cast<std::size_t>(k)] > 0) {
            means.row(k) /= static_cast<double>(counts[static_cast<std::size_t>(k)]);
            ++n_present;
        } else if (!allow_absent_classes) {
            throw ConfigError("lda: class " + std::to_string(k) + " has zero samples");
        }
    }
    if (n_present == 0) throw ConfigError("lda: no samples");
    if (n <= n_present) throw RuntimeFailure("lda: singular covariance (n must exceed the class count)");

    Matrix scatter = Matrix::Zero(d, d);
    Eigen::RowVectorXd diff(d);
    for (std::size_t i = 0; i < n; ++i) {
        diff = x.row(static_cast<Eigen::Index>(i)) - means.row(y[i]);
        scatter.noalias() += diff.transpose() * diff;
    }
    Matrix cov = scatter / static_cast<double>(n - n_present);
    if (shrinkage > 0.0) {
        const Vector diag = cov.diagonal();
        cov *= (1.0 - shrinkage);
        cov.diagonal() += shrinkage * diag;
    }
    cov = (0.5 * (cov + cov.transpose())).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(cov), Eigen::EigenvaluesOnly);
    const double max_ev = eig.eigenvalues().maxCoeff();
    const double min_ev = eig.eigenvalues().minCoeff();
    if (!(max_ev > 0.0) || min_ev <= max_ev * 1e-12) throw RuntimeFailure("lda: singular covariance");

    std::vector<double> priors(static_cast<std::size_t>(n_classes));
    for (int k = 0; k < n_classes; ++k) {
        priors[static_cast<std::size_t>(k)] =
            static_cast<double>(counts[static_cast<std::size_t>(k)]) / static_cast<double>(n);
    }
    return LdaModel(std::move(means), std::move(cov), std::move(priors), shrinkage);
}

}  // namespace al
