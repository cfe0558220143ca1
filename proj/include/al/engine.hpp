#pragma once

#include "al/classifier.hpp"
#include "al/dataset.hpp"
#include "al/heuristics.hpp"
#include "al/kernels.hpp"
#include "al/types.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace al {

enum class HeuristicId { neqb, amd, ms, mclu, ssc, mao, mclu_abd, csv, mclu_ecbd, hmcs_i, kl_max, bt, random };

/// Accepts the CLI identifiers (`neqb`, `mclu-abd`, `hmcs-i`, ...).
HeuristicId parse_heuristic(std::string_view id);
std::string_view to_string(HeuristicId id);
std::span<const HeuristicId> all_heuristics();
/// True for the large-margin family, which needs the SVM decision function.
bool needs_svm(HeuristicId id);

struct HeuristicParams {
    std::size_t subset_size = 0;  // uncertain pre-filter size; 0 means 3q
    double abd_lambda = 0.6;
    int committee_members = 0;   // 0: 7 for SVM, 12 for LDA
    double bag_fraction = 0.0;   // 0: 0.75 for SVM, 0.85 for LDA
    std::size_t amd_views = 0;   // 0: min(d, 3)
    bool amd_correlation_views = false;
    double amd_correlation_threshold = 0.5;
    bool allow_kl_max_svm = false;

    void validate() const;
};

/// Simulated user: returns the ground-truth label of a dataset row.
class Oracle {
  public:
    using NoiseHook = std::function<int(std::size_t row, int truth)>;

    explicit Oracle(const Dataset& data) : data_(&data) {}

    int label(std::size_t row) const;
    /// Optional label corruption for robustness experiments; off by default.
    void set_noise(NoiseHook hook) { noise_ = std::move(hook); }

  private:
    const Dataset* data_;
    NoiseHook noise_;
};

struct StoppingRule {
    std::optional<std::size_t> max_iterations;
    std::optional<std::size_t> label_budget;  // total labeled samples
    bool pool_exhaustion = true;

    void validate() const;
};

struct EngineConfig {
    LearnerConfig learner;
    HeuristicParams params;
    std::size_t q = 1;
    /// Hyperparameters are re-selected by cross-validation every `refit_every`
    /// iterations and whenever the pool is empty.
    int refit_every = 10;
    int cv_folds = 5;
    std::vector<double> c_grid;              // empty: default grid
    std::vector<KernelConfig> kernel_grid;   // empty: rbf over the default gamma grid
    std::uint64_t seed = 0;                  // per-trial seed; all randomness derives from it
    bool track_bounded_svs = true;

    void validate() const;
};

struct IterationRecord {
    std::size_t iteration = 0;
    std::vector<std::size_t> selected;  // dataset rows
    std::size_t labels_used = 0;        // after adding the batch
    double seconds = 0.0;
    std::string note;  // e.g. a heuristic substitution
};

struct ActiveState {
    Split split;  // labeled_idx and pool_idx are kept sorted
    std::vector<int> labels;  // oracle answer for each labeled_idx entry
    std::size_t iteration = 1;
    std::vector<IterationRecord> history;
    std::vector<std::size_t> prev_bounded_svs;  // dataset rows with alpha = C in the last fit
    std::optional<heuristics::ViewWeights> amd_weights;
    std::optional<SvmParams> svm;  // hyperparameters in force

    /// Initial labels are the ground truth of the split's labeled rows.
    static ActiveState initial(const Split& split, const Dataset& data);
    void validate(const Dataset& data) const;
};

struct FittedModel {
    std::shared_ptr<const Classifier> model;
    std::optional<SvmParams> svm;  // hyperparameters used, SVM only
};

/// Trains the classifier on the state's labeled set, re-selecting SVM hyperparameters
/// when the refit schedule says so.
FittedModel fit_state_model(const Dataset& data, const ActiveState& state, const EngineConfig& cfg,
                            bool posterior_needed = false);

/// One pass of the active-learning loop: fit (unless `prefit` is given), score or
/// select, label the batch and move it from the pool to the labeled set. Errors
/// carry the iteration number; `state` itself is never modified.
ActiveState run_iteration(const Dataset& data, const ActiveState& state, HeuristicId heuristic,
                          const EngineConfig& cfg, const Oracle& oracle, const FittedModel* prefit = nullptr);

enum class DiversityBuilder { mao, abd, csv };

/// Greedy batch over an uncertain subset: seed with the most uncertain candidate,
/// then repeatedly take the diversity argmin and drop it from the candidates.
/// `support_vectors` is only used by the csv builder.
std::vector<std::size_t> diversity_batch(const heuristics::UncertainSubset& subset, DiversityBuilder builder,
                                         std::size_t q, const Matrix& pool, const KernelConfig& kernel,
                                         double lambda = 0.6, const Matrix& support_vectors = {});

struct CurvePoint {
    std::size_t labels_used = 0;
    double accuracy = 0.0;
};

struct TrialCurve {
    std::vector<CurvePoint> points;
    std::vector<IterationRecord> history;
    bool complete = true;
    std::string error;  // set when !complete
};

/// Runs the loop from `split` until `stopping`, recording test accuracy before the
/// first iteration and after each one. On failure the partial curve is returned
/// flagged incomplete.
TrialCurve run_curve(const Dataset& data, const Split& split, HeuristicId heuristic, const EngineConfig& cfg,
                     const StoppingRule& stopping);

/// Test accuracy of the model trained on labeled + pool (the Standard reference),
/// with hyperparameters selected exactly as for an exhausted pool.
double standard_accuracy(const Dataset& data, const Split& split, const EngineConfig& cfg);

}  // namespace al
