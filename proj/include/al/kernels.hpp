#pragma once

#include "al/types.hpp"

#include <span>
#include <string>

namespace al {

enum class KernelKind { rbf, linear };

struct KernelConfig {
    KernelKind kind = KernelKind::rbf;
    double gamma = 1.0;  // rbf width; ignored for linear

    static KernelConfig rbf(double gamma) { return {KernelKind::rbf, gamma}; }
    static KernelConfig linear() { return {KernelKind::linear, 1.0}; }

    void validate() const;
    friend bool operator==(const KernelConfig&, const KernelConfig&) = default;
};

std::string to_string(const KernelConfig& cfg);

/// rbf: exp(-gamma * |a - b|^2); linear: a . b
double kernel_eval(const KernelConfig& cfg, std::span<const double> a, std::span<const double> b);

/// Entry (i, j) = kernel_eval(rows_i, cols_j).
Matrix gram_matrix(const KernelConfig& cfg, const Matrix& rows, const Matrix& cols);

/// Symmetric Gram matrix of one sample set; only the upper triangle is evaluated.
Matrix gram_matrix(const KernelConfig& cfg, const Matrix& samples);

/// Feature-space cosine K(a,b) / sqrt(K(a,a) K(b,b)).
double normalized_similarity(const KernelConfig& cfg, std::span<const double> a,
                             std::span<const double> b);

}  // namespace al
