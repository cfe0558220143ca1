#include "al/engine.hpp"
#include "al/model_selection.hpp"
#include "al/rng.hpp"
#include "al/svm.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <numeric>

namespace al {

namespace {

namespace h = heuristics;

// Random streams under the per-trial seed.
constexpr std::uint64_t kCvStream = 1;
constexpr std::uint64_t kPlattStream = 2;
constexpr std::uint64_t kSelectStream = 3;

constexpr std::array<std::pair<HeuristicId, std::string_view>, 13> kNames{{
    {HeuristicId::neqb, "neqb"},
    {HeuristicId::amd, "amd"},
    {HeuristicId::ms, "ms"},
    {HeuristicId::mclu, "mclu"},
    {HeuristicId::ssc, "ssc"},
    {HeuristicId::mao, "mao"},
    {HeuristicId::mclu_abd, "mclu-abd"},
    {HeuristicId::csv, "csv"},
    {HeuristicId::mclu_ecbd, "mclu-ecbd"},
    {HeuristicId::hmcs_i, "hmcs-i"},
    {HeuristicId::kl_max, "kl-max"},
    {HeuristicId::bt, "bt"},
    {HeuristicId::random, "random"},
}};

constexpr std::array<HeuristicId, 13> kAll{
    HeuristicId::neqb,     HeuristicId::amd,       HeuristicId::ms,     HeuristicId::mclu, HeuristicId::ssc,
    HeuristicId::mao,      HeuristicId::mclu_abd,  HeuristicId::csv,    HeuristicId::mclu_ecbd,
    HeuristicId::hmcs_i,   HeuristicId::kl_max,    HeuristicId::bt,     HeuristicId::random,
};

bool posterior_needed(HeuristicId id, const EngineConfig& cfg) {
    return id == HeuristicId::bt && cfg.learner.kind == ClassifierKind::svm;
}

SvmParams select_hyperparameters(const Matrix& x, std::span<const int> y, int n_classes, const EngineConfig& cfg) {
    std::vector<KernelConfig> kernels = cfg.kernel_grid;
    if (kernels.empty()) {
        if (cfg.learner.svm.kernel.kind == KernelKind::linear) {
            kernels.push_back(KernelConfig::linear());
        } else {
            for (double g : default_gamma_grid()) kernels.push_back(KernelConfig::rbf(g));
        }
    }
    const std::vector<double> cs = cfg.c_grid.empty() ? default_c_grid() : cfg.c_grid;
    const auto best = cross_validate(x, y, n_classes, kernels, cs, cfg.cv_folds, derive_seed(cfg.seed, kCvStream),
                                     cfg.learner.svm.smo);
    SvmParams p = cfg.learner.svm;
    p.kernel = best.kernel;
    p.c = best.c;
    return p;
}

// Trainer for auxiliary models (committee members, views, KL-max retraining).
Trainer auxiliary_trainer(const EngineConfig& cfg, const FittedModel& fit, bool calibrate) {
    LearnerConfig lc = cfg.learner;
    if (fit.svm) lc.svm = *fit.svm;
    lc.svm.calibrate = calibrate;
    lc.svm.platt_seed = derive_seed(cfg.seed, kPlattStream);
    return make_trainer(lc);
}

std::vector<std::size_t> all_positions(std::size_t u) {
    std::vector<std::size_t> out(u);
    std::iota(out.begin(), out.end(), 0);
    return out;
}

struct Selection {
    std::vector<std::size_t> positions;  // into the pool
    std::string note;
    std::vector<std::vector<int>> view_votes;  // AMD only: V x u
};

const MulticlassSvm& require_svm(const FittedModel& fit, HeuristicId id) {
    const auto* svm = dynamic_cast<const MulticlassSvm*>(fit.model.get());
    if (svm == nullptr) throw ConfigError("heuristic " + std::string(to_string(id)) + " needs the svm classifier");
    return *svm;
}

Selection select_batch(const Dataset& data, const ActiveState& state, HeuristicId id, const EngineConfig& cfg,
                       const FittedModel& fit, std::uint64_t seed) {
    const auto& pool_idx = state.split.pool_idx;
    const auto u = pool_idx.size();
    const auto q = std::min(cfg.q, u);
    Selection sel;
    if (q == u && id != HeuristicId::amd) {
        sel.positions = all_positions(u);
        return sel;
    }
    const Matrix pool = gather_rows(data.features, pool_idx);
    const auto subset_size = std::min(u, std::max(q, cfg.params.subset_size == 0 ? 3 * q : cfg.params.subset_size));
    const bool binary = data.n_classes == 2;
    const bool is_lda = cfg.learner.kind == ClassifierKind::lda;

    // MCLU is identically zero for two one-against-all machines; MS stands in.
    auto mclu_or_ms = [&](const MulticlassSvm& svm) {
        if (binary) {
            sel.note = "ms substituted for mclu on a binary problem";
            return h::score_ms(svm, pool);
        }
        return h::score_mclu(svm, pool);
    };

    switch (id) {
        case HeuristicId::random:
            sel.positions = h::select_random(u, q, seed);
            break;
        case HeuristicId::ms:
            sel.positions = h::top_q(h::score_ms(require_svm(fit, id), pool), q);
            break;
        case HeuristicId::mclu:
            sel.positions = h::top_q(mclu_or_ms(require_svm(fit, id)), q);
            break;
        case HeuristicId::ssc: {
            const auto& svm = require_svm(fit, id);
            try {
                sel.positions = h::select_ssc(svm, gather_rows(data.features, state.split.labeled_idx), pool, q, seed);
            } catch (const h::SscUnavailable&) {
                sel.note = "ssc unavailable, ms used";
                sel.positions = h::top_q(h::score_ms(svm, pool), q);
            }
            break;
        }
        case HeuristicId::mao: {
            const auto& svm = require_svm(fit, id);
            sel.positions = diversity_batch(h::uncertain_subset(h::score_ms(svm, pool), subset_size),
                                            DiversityBuilder::mao, q, pool, svm.kernel());
            break;
        }
        case HeuristicId::mclu_abd: {
            const auto& svm = require_svm(fit, id);
            sel.positions = diversity_batch(h::uncertain_subset(mclu_or_ms(svm), subset_size), DiversityBuilder::abd,
                                            q, pool, svm.kernel(), cfg.params.abd_lambda);
            break;
        }
        case HeuristicId::csv: {
            const auto& svm = require_svm(fit, id);
            sel.positions = diversity_batch(h::uncertain_subset(h::score_ms(svm, pool), subset_size),
                                            DiversityBuilder::csv, q, pool, svm.kernel(), 0.0, svm.support_vectors());
            break;
        }
        case HeuristicId::mclu_ecbd: {
            const auto& svm = require_svm(fit, id);
            sel.positions = h::ecbd_batch(pool, svm.kernel(), h::uncertain_subset(mclu_or_ms(svm), subset_size), q, seed);
            break;
        }
        case HeuristicId::hmcs_i: {
            const auto& svm = require_svm(fit, id);
            const Matrix labeled = gather_rows(data.features, state.split.labeled_idx);
            const auto bounded = svm.bounded_support_idx();
            sel.positions = h::hmcs_batch(pool, svm.kernel(), h::uncertain_subset(mclu_or_ms(svm), subset_size),
                                          gather_rows(labeled, bounded), q, seed);
            break;
        }
        case HeuristicId::neqb: {
            h::CommitteeConfig committee;
            committee.members = cfg.params.committee_members > 0 ? cfg.params.committee_members : (is_lda ? 12 : 7);
            committee.bag_fraction = cfg.params.bag_fraction > 0.0 ? cfg.params.bag_fraction : (is_lda ? 0.85 : 0.75);
            committee.seed = seed;
            const auto scores = h::score_neqb(gather_rows(data.features, state.split.labeled_idx), state.labels,
                                              data.n_classes, pool, committee, auxiliary_trainer(cfg, fit, false));
            sel.positions = h::top_q(scores, q);
            break;
        }
        case HeuristicId::amd: {
            const auto d = data.dims();
            const auto v = cfg.params.amd_views > 0 ? cfg.params.amd_views : std::min<std::size_t>(d, 3);
            const auto views = cfg.params.amd_correlation_views
                                   ? h::correlation_views(pool, v, cfg.params.amd_correlation_threshold)
                                   : h::contiguous_views(d, v);
            const auto weights = state.amd_weights.value_or(h::ViewWeights::uniform(data.n_classes, v));
            if (static_cast<std::size_t>(weights.w.cols()) != v) throw ConfigError("amd: stored weights have a different view count");
            sel.view_votes = h::view_predictions(gather_rows(data.features, state.split.labeled_idx), state.labels,
                                                 data.n_classes, pool, views, auxiliary_trainer(cfg, fit, false));
            sel.positions = q == u ? all_positions(u) : h::top_q(h::amd_from_predictions(sel.view_votes, weights), q);
            break;
        }
        case HeuristicId::kl_max: {
            if (!is_lda && !cfg.params.allow_kl_max_svm) {
                throw ConfigError("kl-max retrains once per candidate; with svm it needs allow_kl_max_svm");
            }
            const auto scores = h::score_kl_max(gather_rows(data.features, state.split.labeled_idx), state.labels,
                                                data.n_classes, pool, auxiliary_trainer(cfg, fit, !is_lda));
            sel.positions = h::top_q(scores, q);
            break;
        }
        case HeuristicId::bt:
            sel.positions = h::top_q(h::score_bt(fit.model->posterior(pool)), q);
            break;
    }
    return sel;
}

}  // namespace

HeuristicId parse_heuristic(std::string_view id) {
    for (const auto& [h, name] : kNames) {
        if (name == id) return h;
    }
    throw ConfigError("unknown heuristic '" + std::string(id) + "'");
}

std::string_view to_string(HeuristicId id) {
    for (const auto& [h, name] : kNames) {
        if (h == id) return name;
    }
    return "?";
}

std::span<const HeuristicId> all_heuristics() { return kAll; }

bool needs_svm(HeuristicId id) {
    switch (id) {
        case HeuristicId::ms:
        case HeuristicId::mclu:
        case HeuristicId::ssc:
        case HeuristicId::mao:
        case HeuristicId::mclu_abd:
        case HeuristicId::csv:
        case HeuristicId::mclu_ecbd:
        case HeuristicId::hmcs_i:
            return true;
        default:
            return false;
    }
}

void HeuristicParams::validate() const {
    if (!(abd_lambda >= 0.0 && abd_lambda <= 1.0)) throw ConfigError("abd_lambda must lie in [0, 1]");
    if (committee_members == 1 || committee_members < 0) throw ConfigError("committee needs at least 2 members");
    if (!(bag_fraction >= 0.0 && bag_fraction <= 1.0)) throw ConfigError("bag_fraction must lie in (0, 1]");
    if (!(amd_correlation_threshold >= 0.0 && amd_correlation_threshold <= 1.0)) {
        throw ConfigError("amd correlation threshold must lie in [0, 1]");
    }
}

int Oracle::label(std::size_t row) const {
    if (row >= data_->size()) throw ConfigError("oracle: row out of range");
    const int truth = data_->labels[row];
    return noise_ ? noise_(row, truth) : truth;
}

void StoppingRule::validate() const {
    if (!max_iterations && !label_budget && !pool_exhaustion) throw ConfigError("stopping rule has no finite bound");
}

void EngineConfig::validate() const {
    if (q < 1) throw ConfigError("q must be >= 1");
    if (refit_every < 0) throw ConfigError("refit_every must be >= 0");
    if (cv_folds < 2) throw ConfigError("cv_folds must be >= 2");
    for (double c : c_grid) {
        if (!(c > 0.0)) throw ConfigError("C grid values must be positive");
    }
    for (const auto& k : kernel_grid) k.validate();
    params.validate();
}

ActiveState ActiveState::initial(const Split& split, const Dataset& data) {
    ActiveState st;
    st.split = split;
    std::sort(st.split.labeled_idx.begin(), st.split.labeled_idx.end());
    std::sort(st.split.pool_idx.begin(), st.split.pool_idx.end());
    std::sort(st.split.test_idx.begin(), st.split.test_idx.end());
    st.labels = gather_labels(data.labels, st.split.labeled_idx);
    return st;
}

void ActiveState::validate(const Dataset& data) const {
    if (split.pool_idx.empty()) {
        // An exhausted pool is a legal end state; Split::validate insists on a pool.
        std::vector<std::size_t> all = split.labeled_idx;
        all.insert(all.end(), split.test_idx.begin(), split.test_idx.end());
        std::sort(all.begin(), all.end());
        if (std::adjacent_find(all.begin(), all.end()) != all.end()) throw ConfigError("labeled and test sets overlap");
        if (!all.empty() && all.back() >= data.size()) throw ConfigError("split index out of range");
    } else {
        al::validate(split, data);
    }
    if (labels.size() != split.labeled_idx.size()) throw ConfigError("state labels do not match the labeled set");
    if (!std::is_sorted(split.labeled_idx.begin(), split.labeled_idx.end()) ||
        !std::is_sorted(split.pool_idx.begin(), split.pool_idx.end())) {
        throw ConfigError("state index lists must be sorted");
    }
}

FittedModel fit_state_model(const Dataset& data, const ActiveState& state, const EngineConfig& cfg,
                            bool posterior_needed) {
    const Matrix x = gather_rows(data.features, state.split.labeled_idx);
    FittedModel out;
    if (cfg.learner.kind == ClassifierKind::lda) {
        out.model = make_trainer(cfg.learner)(x, state.labels, data.n_classes);
        return out;
    }
    const bool refit = !state.svm || state.split.pool_idx.empty() ||
                       (cfg.refit_every > 0 && (state.iteration - 1) % static_cast<std::size_t>(cfg.refit_every) == 0);
    SvmParams params = refit ? select_hyperparameters(x, state.labels, data.n_classes, cfg) : *state.svm;
    params.calibrate = false;
    out.svm = params;
    params.calibrate = posterior_needed;
    params.platt_seed = derive_seed(cfg.seed, kPlattStream);
    LearnerConfig lc = cfg.learner;
    lc.svm = params;
    out.model = make_trainer(lc)(x, state.labels, data.n_classes);
    return out;
}

ActiveState run_iteration(const Dataset& data, const ActiveState& state, HeuristicId heuristic,
                          const EngineConfig& cfg, const Oracle& oracle, const FittedModel* prefit) {
    const auto started = std::chrono::steady_clock::now();
    const std::string where = "iteration " + std::to_string(state.iteration) + " (" + std::string(to_string(heuristic)) + "): ";
    if (state.split.pool_idx.empty()) throw ConfigError(where + "pool is empty");
    try {
        cfg.validate();
        const FittedModel fit = prefit ? *prefit : fit_state_model(data, state, cfg, posterior_needed(heuristic, cfg));
        const auto seed = derive_seed(derive_seed(cfg.seed, kSelectStream), state.iteration);
        const auto sel = select_batch(data, state, heuristic, cfg, fit, seed);

        const auto& pool_idx = state.split.pool_idx;
        std::vector<char> chosen(pool_idx.size(), 0);
        for (std::size_t p : sel.positions) {
            if (p >= pool_idx.size() || chosen[p]) throw RuntimeFailure("heuristic returned an invalid batch");
            chosen[p] = 1;
        }

        ActiveState next;
        next.iteration = state.iteration + 1;
        next.history = state.history;
        next.amd_weights = state.amd_weights;
        next.svm = fit.svm;
        next.split.test_idx = state.split.test_idx;
        next.split.standardization = state.split.standardization;

        IterationRecord rec;
        rec.iteration = state.iteration;
        rec.note = sel.note;
        std::vector<int> batch_labels;
        for (std::size_t p : sel.positions) {
            rec.selected.push_back(pool_idx[p]);
            batch_labels.push_back(oracle.label(pool_idx[p]));
        }
        for (std::size_t p = 0; p < pool_idx.size(); ++p) {
            if (!chosen[p]) next.split.pool_idx.push_back(pool_idx[p]);
        }
        // Merge the batch into the sorted labeled set, carrying the oracle labels.
        std::vector<std::pair<std::size_t, int>> merged;
        for (std::size_t i = 0; i < state.split.labeled_idx.size(); ++i) {
            merged.emplace_back(state.split.labeled_idx[i], state.labels[i]);
        }
        for (std::size_t b = 0; b < rec.selected.size(); ++b) merged.emplace_back(rec.selected[b], batch_labels[b]);
        std::sort(merged.begin(), merged.end());
        for (const auto& [row, label] : merged) {
            next.split.labeled_idx.push_back(row);
            next.labels.push_back(label);
        }

        if (heuristic == HeuristicId::amd && !sel.view_votes.empty()) {
            std::vector<std::vector<int>> batch_votes(sel.view_votes.size());
            for (std::size_t v = 0; v < sel.view_votes.size(); ++v) {
                for (std::size_t p : sel.positions) batch_votes[v].push_back(sel.view_votes[v][p]);
            }
            const auto weights = state.amd_weights.value_or(
                heuristics::ViewWeights::uniform(data.n_classes, sel.view_votes.size()));
            next.amd_weights = heuristics::update_amd_weights(weights, batch_labels, batch_votes);
        }
        if (cfg.track_bounded_svs) {
            if (const auto* svm = dynamic_cast<const MulticlassSvm*>(fit.model.get())) {
                for (std::size_t i : svm->bounded_support_idx()) next.prev_bounded_svs.push_back(state.split.labeled_idx[i]);
            }
        }
        rec.labels_used = next.split.labeled_idx.size();
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        next.history.push_back(std::move(rec));
        return next;
    } catch (const ConfigError& e) {
        throw ConfigError(where + e.what());
    } catch (const RuntimeFailure& e) {
        throw RuntimeFailure(where + e.what());
    }
}

std::vector<std::size_t> diversity_batch(const heuristics::UncertainSubset& subset, DiversityBuilder builder,
                                         std::size_t q, const Matrix& pool, const KernelConfig& kernel,
                                         double lambda, const Matrix& support_vectors) {
    switch (builder) {
        case DiversityBuilder::mao:
            return h::mao_batch(pool, kernel, subset, q);
        case DiversityBuilder::abd:
            return h::abd_batch(pool, kernel, subset, q, lambda);
        case DiversityBuilder::csv:
            return h::csv_batch(pool, kernel, support_vectors, subset, q);
    }
    throw ConfigError("unknown diversity builder");
}

TrialCurve run_curve(const Dataset& data, const Split& split, HeuristicId heuristic, const EngineConfig& cfg,
                     const StoppingRule& stopping) {
    stopping.validate();
    cfg.validate();
    const Oracle oracle(data);
    ActiveState state = ActiveState::initial(split, data);
    state.validate(data);
    if (state.split.test_idx.empty()) throw ConfigError("run_curve: empty test set");
    const Matrix test_x = gather_rows(data.features, state.split.test_idx);
    const auto test_y = gather_labels(data.labels, state.split.test_idx);
    const bool posterior = posterior_needed(heuristic, cfg);

    TrialCurve out;
    try {
        FittedModel fit = fit_state_model(data, state, cfg, posterior);
        out.points.push_back({state.split.labeled_idx.size(), accuracy(*fit.model, test_x, test_y)});
        for (std::size_t iters = 0;; ++iters) {
            const auto used = state.split.labeled_idx.size();
            if (state.split.pool_idx.empty()) break;
            if (stopping.max_iterations && iters >= *stopping.max_iterations) break;
            if (stopping.label_budget && used >= *stopping.label_budget) break;
            EngineConfig step = cfg;
            if (stopping.label_budget) step.q = std::min(cfg.q, *stopping.label_budget - used);
            state = run_iteration(data, state, heuristic, step, oracle, &fit);
            fit = fit_state_model(data, state, cfg, posterior);
            out.points.push_back({state.split.labeled_idx.size(), accuracy(*fit.model, test_x, test_y)});
        }
    } catch (const std::exception& e) {
        out.complete = false;
        out.error = e.what();
    }
    out.history = state.history;
    return out;
}

double standard_accuracy(const Dataset& data, const Split& split, const EngineConfig& cfg) {
    cfg.validate();
    ActiveState state = ActiveState::initial(split, data);
    state.split.labeled_idx.insert(state.split.labeled_idx.end(), state.split.pool_idx.begin(),
                                   state.split.pool_idx.end());
    std::sort(state.split.labeled_idx.begin(), state.split.labeled_idx.end());
    state.split.pool_idx.clear();
    state.labels = gather_labels(data.labels, state.split.labeled_idx);
    if (state.split.test_idx.empty()) throw ConfigError("standard_accuracy: empty test set");
    const auto fit = fit_state_model(data, state, cfg);
    return accuracy(*fit.model, gather_rows(data.features, state.split.test_idx),
                    gather_labels(data.labels, state.split.test_idx));
}

}  // namespace al
