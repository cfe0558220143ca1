#include "al/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace al {

void KernelConfig::validate() const {
    if (kind == KernelKind::rbf && !(gamma > 0.0 && std::isfinite(gamma))) {
        throw ConfigError("rbf kernel needs gamma > 0");
    }
}

std::string to_string(const KernelConfig& cfg) {
    if (cfg.kind == KernelKind::linear) return "linear";
    std::ostringstream os;
    os.precision(17);
    os << "rbf(gamma=" << cfg.gamma << ")";
    return os.str();
}

double kernel_eval(const KernelConfig& cfg, std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ConfigError("kernel_eval: dimension mismatch");
    if (cfg.kind == KernelKind::linear) {
        double dot = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
        return dot;
    }
    double dist2 = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double diff = a[k] - b[k];
        dist2 += diff * diff;
    }
    return std::exp(-cfg.gamma * dist2);
}

Matrix gram_matrix(const KernelConfig& cfg, const Matrix& rows, const Matrix& cols) {
    if (rows.cols() != cols.cols()) throw ConfigError("gram_matrix: dimension mismatch");
    Matrix g(rows.rows(), cols.rows());
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        const auto a = row_span(rows, i);
        for (Eigen::Index j = 0; j < cols.rows(); ++j) g(i, j) = kernel_eval(cfg, a, row_span(cols, j));
    }
    return g;
}

Matrix gram_matrix(const KernelConfig& cfg, const Matrix& samples) {
    const auto n = samples.rows();
    Matrix g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto a = row_span(samples, i);
        for (Eigen::Index j = i; j < n; ++j) {
            g(i, j) = kernel_eval(cfg, a, row_span(samples, j));
            g(j, i) = g(i, j);
        }
    }
    return g;
}

double normalized_similarity(const KernelConfig& cfg, std::span<const double> a,
                             std::span<const double> b) {
    if (cfg.kind == KernelKind::rbf) return kernel_eval(cfg, a, b);
    const double kaa = kernel_eval(cfg, a, a);
    const double kbb = kernel_eval(cfg, b, b);
    if (!(kaa > 0.0) || !(kbb > 0.0)) throw ConfigError("normalized_similarity: zero self-similarity");
    return std::clamp(kernel_eval(cfg, a, b) / std::sqrt(kaa * kbb), -1.0, 1.0);
}

}  // namespace al
