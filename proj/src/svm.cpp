#include "al/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace al {

namespace {

constexpr double kTau = 1e-12;

void check_signs(std::span<const int> signs) {
    bool pos = false, neg = false;
    for (int s : signs) {
        if (s == 1) {
            pos = true;
        } else if (s == -1) {
            neg = true;
        } else {
            throw ConfigError("svm: labels must be +1 or -1");
        }
    }
    if (!pos || !neg) throw ConfigError("svm: single-class input, both signs are required");
}

bool in_up(int y, double a, double c) { return (y == 1 && a < c) || (y == -1 && a > 0.0); }
bool in_low(int y, double a, double c) { return (y == 1 && a > 0.0) || (y == -1 && a < c); }

}  // namespace

SmoSolution solve_smo(const Matrix& gram, std::span<const int> signs, std::span<const double> upper,
                      const SmoOptions& opts) {
    const auto n = signs.size();
    if (static_cast<std::size_t>(gram.rows()) != n || static_cast<std::size_t>(gram.cols()) != n) {
        throw ConfigError("smo: gram matrix does not match sample count");
    }
    if (upper.size() != n) throw ConfigError("smo: one upper bound per sample required");
    if (!(opts.tol > 0.0)) throw ConfigError("smo: tol must be > 0");
    for (double c : upper) {
        if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("smo: C must be > 0");
    }
    check_signs(signs);

    SmoSolution sol;
    sol.alpha.assign(n, 0.0);
    std::vector<double> grad(n, -1.0);  // gradient of 1/2 a'Qa - e'a, Q_ij = y_i y_j K_ij
    auto& alpha = sol.alpha;

    while (true) {
        double gmax = -std::numeric_limits<double>::infinity();
        double gmin = std::numeric_limits<double>::infinity();
        std::size_t i = n, j = n;
        for (std::size_t t = 0; t < n; ++t) {
            const double v = -signs[t] * grad[t];
            if (in_up(signs[t], alpha[t], upper[t]) && v > gmax) {
                gmax = v;
                i = t;
            }
            if (in_low(signs[t], alpha[t], upper[t]) && v < gmin) {
                gmin = v;
                j = t;
            }
        }
        if (i == n || j == n || gmax - gmin < opts.tol) break;
        if (sol.updates >= opts.max_updates) {
            throw ConvergenceError("smo: no convergence after " + std::to_string(sol.updates) +
                                   " updates (KKT gap " + std::to_string(gmax - gmin) + ")");
        }
        ++sol.updates;

        const double yi = signs[i], yj = signs[j];
        const double kii = gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
        const double kjj = gram(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
        const double kij = gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        const double qij = yi * yj * kij;
        const double ci = upper[i], cj = upper[j];
        const double old_i = alpha[i], old_j = alpha[j];

        if (yi != yj) {
            double quad = kii + kjj + 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if (diff > ci - cj) {
                if (alpha[i] > ci) {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if (alpha[j] > cj) {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            double quad = kii + kjj - 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > ci) {
                if (alpha[i] > ci) {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if (alpha[j] < 0.0) {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if (sum > cj) {
                if (alpha[j] > cj) {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        const double di = alpha[i] - old_i;
        const double dj = alpha[j] - old_j;
        for (std::size_t t = 0; t < n; ++t) {
            const auto ti = static_cast<Eigen::Index>(t);
            grad[t] += signs[t] * (yi * gram(ti, static_cast<Eigen::Index>(i)) * di +
                                   yj * gram(ti, static_cast<Eigen::Index>(j)) * dj);
        }
    }

    // Bias: average over free variables, else midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = signs[t] * grad[t];
        if (alpha[t] >= upper[t]) {
            if (signs[t] == -1) {
                ub = std::min(ub, yg);
            } else {
                lb = std::max(lb, yg);
            }
        } else if (alpha[t] <= 0.0) {
            if (signs[t] == 1) {
                ub = std::min(ub, yg);
            } else {
                lb = std::max(lb, yg);
            }
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
    sol.bias = -rho;
    return sol;
}

SmoSolution solve_smo(const Matrix& gram, std::span<const int> signs, double c, const SmoOptions& opts) {
    const std::vector<double> upper(signs.size(), c);
    return solve_smo(gram, signs, upper, opts);
}

double svm_dual_objective(const Matrix& gram, std::span<const int> signs, std::span<const double> alpha) {
    double linear = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        linear += alpha[i];
        for (std::size_t j = 0; j < alpha.size(); ++j) {
            quad += alpha[i] * alpha[j] * signs[i] * signs[j] *
                    gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
    }
    return linear - 0.5 * quad;
}

BinarySvm::BinarySvm(KernelConfig kernel, double c, Matrix support_vectors, std::vector<std::size_t> support_idx,
                     std::vector<double> alphas, std::vector<int> signs, double bias)
    : kernel_(kernel),
      c_(c),
      support_vectors_(std::move(support_vectors)),
      support_idx_(std::move(support_idx)),
      alphas_(std::move(alphas)),
      signs_(std::move(signs)),
      bias_(bias) {}

double BinarySvm::decision(std::span<const double> x) const {
    double f = bias_;
    for (Eigen::Index j = 0; j < support_vectors_.rows(); ++j) {
        const auto sj = static_cast<std::size_t>(j);
        f += alphas_[sj] * signs_[sj] * kernel_eval(kernel_, row_span(support_vectors_, j), x);
    }
    return f;
}

Vector BinarySvm::decision(const Matrix& x) const {
    Vector out(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = decision(row_span(x, i));
    return out;
}

BinarySvmFit fit_binary_svm(const Matrix& x, const Matrix& gram, std::span<const int> signs,
                            const KernelConfig& kernel, std::span<const double> upper,
                            const SmoOptions& opts) {
    kernel.validate();
    BinarySvmFit fit{{}, solve_smo(gram, signs, upper, opts)};
    std::vector<std::size_t> idx;
    std::vector<double> alphas;
    std::vector<int> sv_signs;
    for (std::size_t i = 0; i < signs.size(); ++i) {
        if (fit.solution.alpha[i] > 0.0) {
            idx.push_back(i);
            alphas.push_back(fit.solution.alpha[i]);
            sv_signs.push_back(signs[i]);
        }
    }
    const double c = upper.empty() ? 0.0 : *std::max_element(upper.begin(), upper.end());
    Matrix rows = gather_rows(x, idx);
    fit.machine = BinarySvm(kernel, c, std::move(rows), std::move(idx), std::move(alphas),
                            std::move(sv_signs), fit.solution.bias);
    return fit;
}

BinarySvm train_binary_svm(const Matrix& x, std::span<const int> signs, const KernelConfig& kernel,
                           double c, const SmoOptions& opts) {
    if (static_cast<std::size_t>(x.rows()) != signs.size()) throw ConfigError("svm: row/label mismatch");
    if (!(c > 0.0)) throw ConfigError("svm: C must be > 0");
    kernel.validate();
    const std::vector<double> upper(signs.size(), c);
    return fit_binary_svm(x, gram_matrix(kernel, x), signs, kernel, upper, opts).machine;
}

MulticlassSvm::MulticlassSvm(KernelConfig kernel, double c, int n_classes, std::vector<BinarySvm> machines,
                             std::vector<bool> present, std::vector<std::vector<double>> full_alphas)
    : kernel_(kernel),
      c_(c),
      n_classes_(n_classes),
      machines_(std::move(machines)),
      present_(std::move(present)),
      full_alphas_(std::move(full_alphas)) {
    // Union of support vectors so that decision values share kernel evaluations.
    std::vector<std::size_t> all;
    for (int k = 0; k < n_classes_; ++k) {
        if (!present_[static_cast<std::size_t>(k)]) continue;
        const auto& idx = machines_[static_cast<std::size_t>(k)].support_idx();
        all.insert(all.end(), idx.begin(), idx.end());
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    sv_idx_ = all;

    const auto n_sv = static_cast<Eigen::Index>(all.size());
    Eigen::Index d = 0;
    for (int k = 0; k < n_classes_; ++k) {
        if (present_[static_cast<std::size_t>(k)]) d = std::max(d, machines_[static_cast<std::size_t>(k)].support_vectors().cols());
    }
    sv_rows_ = Matrix::Zero(n_sv, d);
    coef_ = Matrix::Zero(n_sv, n_classes_);
    biases_ = Vector::Zero(n_classes_);
    for (int k = 0; k < n_classes_; ++k) {
        if (!present_[static_cast<std::size_t>(k)]) continue;
        const auto& m = machines_[static_cast<std::size_t>(k)];
        biases_(k) = m.bias();
        for (std::size_t s = 0; s < m.support_idx().size(); ++s) {
            const auto pos = std::lower_bound(all.begin(), all.end(), m.support_idx()[s]) - all.begin();
            sv_rows_.row(pos) = m.support_vectors().row(static_cast<Eigen::Index>(s));
            coef_(pos, k) = m.alphas()[s] * m.signs()[s];
        }
    }
}

bool MulticlassSvm::has_class(int cls) const {
    if (cls < 0 || cls >= n_classes_) throw ConfigError("svm: unknown class id " + std::to_string(cls));
    return present_[static_cast<std::size_t>(cls)];
}

const BinarySvm& MulticlassSvm::machine(int cls) const {
    if (!has_class(cls)) throw ConfigError("svm: class " + std::to_string(cls) + " was absent in training");
    return machines_[static_cast<std::size_t>(cls)];
}

const std::vector<double>& MulticlassSvm::full_alphas(int cls) const {
    machine(cls);
    return full_alphas_[static_cast<std::size_t>(cls)];
}

double MulticlassSvm::decision_value(std::span<const double> x, int cls) const {
    if (!has_class(cls)) return -std::numeric_limits<double>::infinity();
    return machines_[static_cast<std::size_t>(cls)].decision(x);
}

Matrix MulticlassSvm::decision_values(const Matrix& x) const {
    if (x.cols() != sv_rows_.cols() && sv_rows_.rows() > 0) {
        throw ConfigError("svm: sample dimension does not match the model");
    }
    Matrix f = gram_matrix(kernel_, x, sv_rows_) * coef_;
    for (int k = 0; k < n_classes_; ++k) {
        if (present_[static_cast<std::size_t>(k)]) {
            f.col(k).array() += biases_(k);
        } else {
            f.col(k).setConstant(-std::numeric_limits<double>::infinity());
        }
    }
    return f;
}

int MulticlassSvm::predict(std::span<const double> x) const {
    std::vector<double> f(static_cast<std::size_t>(n_classes_));
    for (int k = 0; k < n_classes_; ++k) f[static_cast<std::size_t>(k)] = decision_value(x, k);
    return argmax_lowest(f);
}

std::vector<int> MulticlassSvm::predict(const Matrix& x) const {
    const Matrix f = decision_values(x);
    std::vector<int> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = argmax_lowest(row_span(f, i));
    return out;
}

void MulticlassSvm::set_calibration(std::vector<PlattSigmoid> sigmoids) {
    if (sigmoids.size() != static_cast<std::size_t>(n_classes_)) {
        throw ConfigError("svm: one Platt sigmoid per class required");
    }
    platt_ = std::move(sigmoids);
}

Matrix MulticlassSvm::posterior(const Matrix& x) const {
    if (!calibrated()) throw ConfigError("svm: posterior requires fitted Platt parameters");
    Matrix p = decision_values(x);
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        double total = 0.0;
        for (int k = 0; k < n_classes_; ++k) {
            const double v = present_[static_cast<std::size_t>(k)]
                                 ? platt_[static_cast<std::size_t>(k)].probability(p(i, k))
                                 : 0.0;
            p(i, k) = v;
            total += v;
        }
        if (total > 0.0) {
            p.row(i) /= total;
        } else {
            // every sigmoid underflowed; spread mass over the trained classes
            int n_present = 0;
            for (int k = 0; k < n_classes_; ++k) n_present += present_[static_cast<std::size_t>(k)] ? 1 : 0;
            for (int k = 0; k < n_classes_; ++k) {
                p(i, k) = present_[static_cast<std::size_t>(k)] ? 1.0 / n_present : 0.0;
            }
        }
    }
    return p;
}

std::vector<std::size_t> MulticlassSvm::bounded_support_idx() const {
    std::vector<std::size_t> out;
    for (int k = 0; k < n_classes_; ++k) {
        if (!present_[static_cast<std::size_t>(k)]) continue;
        const auto& m = machines_[static_cast<std::size_t>(k)];
        for (std::size_t s = 0; s < m.alphas().size(); ++s) {
            if (m.alphas()[s] >= m.c_penalty() * (1.0 - 1e-9)) out.push_back(m.support_idx()[s]);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

MulticlassSvm train_multiclass_svm(const Matrix& x, const Matrix& gram, std::span<const int> y,
                                   int n_classes, const SvmParams& params) {
    const auto n = y.size();
    if (static_cast<std::size_t>(x.rows()) != n) throw ConfigError("svm: row/label mismatch");
    if (!(params.c > 0.0)) throw ConfigError("svm: C must be > 0");
    params.kernel.validate();
    std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes), 0);
    for (int label : y) {
        if (label < 0 || label >= n_classes) throw ConfigError("svm: label out of range");
        ++counts[static_cast<std::size_t>(label)];
    }
    const auto n_present = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; });
    if (n_present < 2) throw ConfigError("svm: single-class input, at least two classes are required");

    std::vector<BinarySvm> machines(static_cast<std::size_t>(n_classes));
    std::vector<bool> present(static_cast<std::size_t>(n_classes), false);
    std::vector<std::vector<double>> full(static_cast<std::size_t>(n_classes));
    std::vector<int> signs(n);
    std::vector<double> upper(n);
    for (int k = 0; k < n_classes; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        if (counts[kk] == 0) continue;
        const double n_pos = static_cast<double>(counts[kk]);
        const double n_neg = static_cast<double>(n) - n_pos;
        for (std::size_t i = 0; i < n; ++i) {
            signs[i] = y[i] == k ? 1 : -1;
            double c = params.c;
            if (params.class_weighting) c *= static_cast<double>(n) / (2.0 * (signs[i] == 1 ? n_pos : n_neg));
            upper[i] = c;
        }
        auto fit = fit_binary_svm(x, gram, signs, params.kernel, upper, params.smo);
        machines[kk] = std::move(fit.machine);
        full[kk] = std::move(fit.solution.alpha);
        present[kk] = true;
    }
    return MulticlassSvm(params.kernel, params.c, n_classes, std::move(machines), std::move(present),
                         std::move(full));
}

MulticlassSvm train_multiclass_svm(const Matrix& x, std::span<const int> y, int n_classes,
                                   const SvmParams& params) {
    params.kernel.validate();
    return train_multiclass_svm(x, gram_matrix(params.kernel, x), y, n_classes, params);
}

}  // namespace al
