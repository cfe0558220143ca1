#pragma once

#include "al/classifier.hpp"
#include "al/kernels.hpp"
#include "al/platt.hpp"
#include "al/types.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace al {

struct SmoSolution {
    std::vector<double> alpha;
    double bias = 0.0;
    std::size_t updates = 0;
};

/// Solves the soft-margin SVM dual
///   max  sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij
///   s.t. 0 <= alpha_i <= upper_i,  sum_i alpha_i y_i = 0
/// by SMO with the maximal violating pair as working set. Stops when the pair's
/// KKT gap drops below `opts.tol`; throws ConvergenceError at `opts.max_updates`.
SmoSolution solve_smo(const Matrix& gram, std::span<const int> signs, std::span<const double> upper,
                      const SmoOptions& opts);

SmoSolution solve_smo(const Matrix& gram, std::span<const int> signs, double c, const SmoOptions& opts);

/// Value of the dual objective above.
double svm_dual_objective(const Matrix& gram, std::span<const int> signs, std::span<const double> alpha);

/// f(x) = sum_j alpha_j y_j K(x_j, x) + b over the support vectors.
class BinarySvm {
  public:
    BinarySvm() = default;
    BinarySvm(KernelConfig kernel, double c, Matrix support_vectors, std::vector<std::size_t> support_idx,
              std::vector<double> alphas, std::vector<int> signs, double bias);

    double decision(std::span<const double> x) const;
    Vector decision(const Matrix& x) const;

    const KernelConfig& kernel() const noexcept { return kernel_; }
    double c_penalty() const noexcept { return c_; }
    double bias() const noexcept { return bias_; }
    const Matrix& support_vectors() const noexcept { return support_vectors_; }
    /// Training-set row of each support vector.
    const std::vector<std::size_t>& support_idx() const noexcept { return support_idx_; }
    const std::vector<double>& alphas() const noexcept { return alphas_; }
    const std::vector<int>& signs() const noexcept { return signs_; }

  private:
    KernelConfig kernel_;
    double c_ = 1.0;
    Matrix support_vectors_;
    std::vector<std::size_t> support_idx_;
    std::vector<double> alphas_;
    std::vector<int> signs_;
    double bias_ = 0.0;
};

/// Full dual solution for diagnostics, alongside the sparse machine.
struct BinarySvmFit {
    BinarySvm machine;
    SmoSolution solution;
};

BinarySvmFit fit_binary_svm(const Matrix& x, const Matrix& gram, std::span<const int> signs,
                            const KernelConfig& kernel, std::span<const double> upper,
                            const SmoOptions& opts);

/// Needs both signs present, C > 0 and tol > 0.
BinarySvm train_binary_svm(const Matrix& x, std::span<const int> signs, const KernelConfig& kernel,
                           double c, const SmoOptions& opts = {});

/// One-against-all ensemble: machine k separates class k from the rest.
class MulticlassSvm final : public Classifier {
  public:
    MulticlassSvm(KernelConfig kernel, double c, int n_classes, std::vector<BinarySvm> machines,
                  std::vector<bool> present, std::vector<std::vector<double>> full_alphas);

    int class_count() const noexcept override { return n_classes_; }
    bool has_class(int cls) const;
    const BinarySvm& machine(int cls) const;
    const KernelConfig& kernel() const noexcept { return kernel_; }
    double c_penalty() const noexcept { return c_; }

    /// f(x, cls); throws ConfigError for an unknown class id, -inf for a class absent
    /// from the training data.
    double decision_value(std::span<const double> x, int cls) const;
    /// rows x N matrix of decision values.
    Matrix decision_values(const Matrix& x) const;

    /// argmax of the decision values, ties to the lowest class id.
    int predict(std::span<const double> x) const;
    std::vector<int> predict(const Matrix& x) const override;

    void set_calibration(std::vector<PlattSigmoid> sigmoids);
    bool calibrated() const noexcept { return !platt_.empty(); }
    const std::vector<PlattSigmoid>& calibration() const noexcept { return platt_; }
    /// Per-class Platt probabilities renormalized to sum to one. Needs calibration.
    Matrix posterior(const Matrix& x) const override;

    /// Distinct support vectors of all machines and their training rows.
    const Matrix& support_vectors() const noexcept { return sv_rows_; }
    const std::vector<std::size_t>& support_idx() const noexcept { return sv_idx_; }
    /// Training rows with alpha at C in at least one machine.
    std::vector<std::size_t> bounded_support_idx() const;
    /// Dual coefficients of machine `cls` over the whole training set (zeros included).
    const std::vector<double>& full_alphas(int cls) const;

  private:
    KernelConfig kernel_;
    double c_;
    int n_classes_;
    std::vector<BinarySvm> machines_;
    std::vector<bool> present_;
    std::vector<std::vector<double>> full_alphas_;
    std::vector<PlattSigmoid> platt_;
    Matrix sv_rows_;
    std::vector<std::size_t> sv_idx_;
    Matrix coef_;  // sv x N, alpha * sign
    Vector biases_;
};

/// Trains the N one-against-all machines on a shared Gram matrix of `x`.
MulticlassSvm train_multiclass_svm(const Matrix& x, std::span<const int> y, int n_classes,
                                   const SvmParams& params);

MulticlassSvm train_multiclass_svm(const Matrix& x, const Matrix& gram, std::span<const int> y,
                                   int n_classes, const SvmParams& params);

}  // namespace al
