#include "al/platt.hpp"
#include "al/types.hpp"

#include <cmath>

namespace al {

namespace {

// log(1 + exp(t)) without overflow
double log1pexp(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

void check_input(std::span<const double> decisions, std::span<const int> signs) {
    if (decisions.size() != signs.size()) throw ConfigError("platt: decision/label size mismatch");
    if (decisions.size() < 2) throw ConfigError("platt: at least two samples required");
    bool pos = false, neg = false;
    for (int s : signs) {
        if (s == 1) {
            pos = true;
        } else if (s == -1) {
            neg = true;
        } else {
            throw ConfigError("platt: labels must be +1 or -1");
        }
    }
    if (!pos || !neg) throw ConfigError("platt: single-sign input");
    for (double f : decisions) {
        if (!std::isfinite(f)) throw ConfigError("platt: non-finite decision value");
    }
}

}  // namespace

double PlattSigmoid::probability(double decision) const noexcept {
    const double t = a_slope * decision + b_offset;
    // 1 / (1 + e^t), evaluated on the stable side
    if (t >= 0.0) {
        const double e = std::exp(-t);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(t));
}

std::array<double, 2> platt_targets(std::span<const int> signs) {
    double n_pos = 0.0, n_neg = 0.0;
    for (int s : signs) (s == 1 ? n_pos : n_neg) += 1.0;
    return {(n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0)};
}

double platt_nll(const PlattSigmoid& s, std::span<const double> decisions, std::span<const int> signs) {
    const auto targets = platt_targets(signs);
    double nll = 0.0;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        const double t = signs[i] == 1 ? targets[0] : targets[1];
        const double z = s.a_slope * decisions[i] + s.b_offset;
        // -[t log p + (1-t) log(1-p)], p = 1/(1+e^z)
        nll += t * log1pexp(z) + (1.0 - t) * log1pexp(-z);
    }
    return nll;
}

std::array<double, 2> platt_gradient(const PlattSigmoid& s, std::span<const double> decisions,
                                     std::span<const int> signs) {
    const auto targets = platt_targets(signs);
    double ga = 0.0, gb = 0.0;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        const double t = signs[i] == 1 ? targets[0] : targets[1];
        const double p = s.probability(decisions[i]);
        // d nll / dz = t - p
        ga += decisions[i] * (t - p);
        gb += t - p;
    }
    return {ga, gb};
}

PlattSigmoid fit_platt(std::span<const double> decisions, std::span<const int> signs) {
    check_input(decisions, signs);
    constexpr int max_iter = 100;
    constexpr double min_step = 1e-10;
    constexpr double sigma = 1e-12;  // Hessian ridge
    constexpr double grad_eps = 1e-11;

    double n_pos = 0.0, n_neg = 0.0;
    for (int s : signs) (s == 1 ? n_pos : n_neg) += 1.0;
    PlattSigmoid cur{0.0, std::log((n_neg + 1.0) / (n_pos + 1.0))};
    double fval = platt_nll(cur, decisions, signs);
    const auto targets = platt_targets(signs);

    for (int iter = 0; iter < max_iter; ++iter) {
        double h11 = sigma, h22 = sigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
        for (std::size_t i = 0; i < decisions.size(); ++i) {
            const double t = signs[i] == 1 ? targets[0] : targets[1];
            const double p = cur.probability(decisions[i]);
            const double q = 1.0 - p;
            const double d2 = p * q;
            h11 += decisions[i] * decisions[i] * d2;
            h22 += d2;
            h21 += decisions[i] * d2;
            const double d1 = t - p;
            g1 += decisions[i] * d1;
            g2 += d1;
        }
        if (std::abs(g1) < grad_eps && std::abs(g2) < grad_eps) break;

        const double det = h11 * h22 - h21 * h21;
        const double da = -(h22 * g1 - h21 * g2) / det;
        const double db = -(-h21 * g1 + h11 * g2) / det;
        const double gd = g1 * da + g2 * db;

        double step = 1.0;
        bool moved = false;
        while (step >= min_step) {
            const PlattSigmoid next{cur.a_slope + step * da, cur.b_offset + step * db};
            const double next_f = platt_nll(next, decisions, signs);
            if (next_f <= fval + 1e-4 * step * gd) {
                cur = next;
                fval = next_f;
                moved = true;
                break;
            }
            step /= 2.0;
        }
        if (!moved) break;  // line search failed; current point is as good as it gets
    }
    return cur;
}

}  // namespace al
