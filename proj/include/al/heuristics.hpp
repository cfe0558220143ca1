#pragma once

#include "al/classifier.hpp"
#include "al/kernels.hpp"
#include "al/svm.hpp"
#include "al/types.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace al::heuristics {

// ---------------------------------------------------------------------------
// Scores and ranking

enum class Orientation { maximize, minimize };

/// Per-candidate informativeness over a pool. Entries equal to kExcluded are
/// candidates a heuristic declined to score; they rank after every finite score.
struct ScoreVector {
    std::vector<double> scores;
    Orientation orientation = Orientation::maximize;
};

inline constexpr double kExcluded = -std::numeric_limits<double>::infinity();

/// Pool positions from most to least informative. Ties keep pool order.
std::vector<std::size_t> rank_candidates(const ScoreVector& sv);

/// First q entries of rank_candidates (all of them when q exceeds the pool).
std::vector<std::size_t> top_q(const ScoreVector& sv, std::size_t q);

/// Most uncertain candidates by a minimize-oriented score, most uncertain first.
struct UncertainSubset {
    std::vector<std::size_t> candidates;  // pool positions
    std::vector<double> uncertainty;      // score of each candidate (smaller = more uncertain)
};

UncertainSubset uncertain_subset(const ScoreVector& sv, std::size_t size);

// ---------------------------------------------------------------------------
// Committee family

struct CommitteeConfig {
    int members = 7;
    double bag_fraction = 0.75;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Normalized vote entropy of one candidate: H(votes) / log(N_i), N_i = number of
/// distinct classes voted. Zero when N_i = 1.
double normalized_vote_entropy(std::span<const int> votes, int n_classes);

/// nEQB scores from a members x candidates matrix of predicted labels.
ScoreVector neqb_from_votes(const std::vector<std::vector<int>>& votes, int n_classes);

/// Query-by-bagging: `members` bootstrap bags of round(bag_fraction * l) draws with
/// replacement, each redrawn up to 20 times until it holds at least two classes.
ScoreVector score_neqb(const Matrix& labeled, std::span<const int> labels, int n_classes, const Matrix& pool,
                       const CommitteeConfig& committee, const Trainer& trainer);

/// V disjoint feature index lists covering 0..d-1.
struct ViewPartition {
    std::vector<std::vector<std::size_t>> views;

    void validate(std::size_t dims) const;
};

/// V contiguous blocks of (near) equal width.
ViewPartition contiguous_views(std::size_t dims, std::size_t n_views);

/// Groups features by connected components of |correlation| >= threshold, then
/// merges the smallest adjacent groups (by lowest feature index) down to n_views,
/// or splits the widest group while there are fewer than n_views groups.
ViewPartition correlation_views(const Matrix& data, std::size_t n_views, double threshold);

/// N x V weights, column v = confidence of view v per class, columns sum to 1.
struct ViewWeights {
    Matrix w;

    static ViewWeights uniform(int n_classes, std::size_t n_views);
    void validate() const;
};

/// Label predicted by each view's classifier: V x u.
std::vector<std::vector<int>> view_predictions(const Matrix& labeled, std::span<const int> labels, int n_classes,
                                               const Matrix& pool, const ViewPartition& views,
                                               const Trainer& trainer);

/// Weighted multiview entropy for one candidate's votes (one label per view).
/// p(w) = sum_v W(v,w) [vote_v = w] / (N_i * sum_v W(v,w)), H = -sum p log p over
/// the N_i voted classes.
double multiview_entropy(std::span<const int> view_votes, const ViewWeights& weights);

/// AMD scores: multiview entropy on the candidates with the maximal number of
/// distinct predicted classes, kExcluded elsewhere.
ScoreVector amd_from_predictions(const std::vector<std::vector<int>>& per_view, const ViewWeights& weights);

ScoreVector score_amd(const Matrix& labeled, std::span<const int> labels, int n_classes, const Matrix& pool,
                      const ViewPartition& views, const ViewWeights& weights, const Trainer& trainer);

/// W(v, y) += 1 whenever view v predicted the true label y of a selected sample,
/// then each column is renormalized. `per_view_predictions` is V x |batch|.
ViewWeights update_amd_weights(const ViewWeights& weights, std::span<const int> true_labels,
                               const std::vector<std::vector<int>>& per_view_predictions);

// ---------------------------------------------------------------------------
// Large margin family

/// min over classes of |f| per row.
ScoreVector ms_from_decisions(const Matrix& decisions);
/// Largest minus second largest |f| per row.
ScoreVector mclu_from_decisions(const Matrix& decisions);

ScoreVector score_ms(const MulticlassSvm& model, const Matrix& pool);
ScoreVector score_mclu(const MulticlassSvm& model, const Matrix& pool);

/// Raised when the labeled set has only support vectors or none at all.
class SscUnavailable : public RuntimeFailure {
  public:
    using RuntimeFailure::RuntimeFailure;
};

/// Significance space construction. `labeled` must be the training set of `model`.
std::vector<std::size_t> select_ssc(const MulticlassSvm& model, const Matrix& labeled, const Matrix& pool,
                                    std::size_t q, std::uint64_t seed);

/// Greedy diversity batches over an uncertain subset. Each seeds the batch with
/// the subset's most uncertain candidate, then repeatedly adds the remaining
/// candidate minimizing its criterion; ties keep the lower pool position.
std::vector<std::size_t> mao_batch(const Matrix& pool, const KernelConfig& kernel, const UncertainSubset& subset,
                                   std::size_t q);
std::vector<std::size_t> abd_batch(const Matrix& pool, const KernelConfig& kernel, const UncertainSubset& subset,
                                   std::size_t q, double lambda);
/// Picks, in uncertainty order, candidates whose closest support vector is not
/// yet represented in the batch; falls back to plain uncertainty order when
/// the distinct closest support vectors run out.
std::vector<std::size_t> csv_batch(const Matrix& pool, const KernelConfig& kernel, const Matrix& support_vectors,
                                   const UncertainSubset& subset, std::size_t q);

/// Index into `support_vectors` of the feature-space closest one, ties to the lowest.
std::size_t closest_support_vector(const KernelConfig& kernel, const Matrix& support_vectors,
                                   std::span<const double> x);

std::vector<std::size_t> select_mao(const MulticlassSvm& model, const Matrix& pool, std::size_t q,
                                    std::size_t subset_size);
std::vector<std::size_t> select_mclu_abd(const MulticlassSvm& model, const Matrix& pool, std::size_t q,
                                         std::size_t subset_size, double lambda);
std::vector<std::size_t> select_csv(const MulticlassSvm& model, const Matrix& pool, std::size_t q,
                                    std::size_t subset_size);

/// Kernel k-means with k = q on the subset, then the most uncertain member per cluster.
std::vector<std::size_t> ecbd_batch(const Matrix& pool, const KernelConfig& kernel, const UncertainSubset& subset,
                                    std::size_t q, std::uint64_t seed);
std::vector<std::size_t> select_mclu_ecbd(const MulticlassSvm& model, const Matrix& pool, std::size_t q,
                                          std::size_t subset_size, std::uint64_t seed);

/// Clusters subset + previous bounded support vectors by repeated binary splits of
/// the largest cluster until q clusters hold no bounded support vector, then takes
/// the most uncertain candidate of each of the q largest such clusters.
std::vector<std::size_t> hmcs_batch(const Matrix& pool, const KernelConfig& kernel, const UncertainSubset& subset,
                                    const Matrix& prev_bounded_svs, std::size_t q, std::uint64_t seed);
std::vector<std::size_t> select_hmcs_i(const MulticlassSvm& model, const Matrix& pool, std::size_t q,
                                       std::size_t subset_size, const Matrix& prev_bounded_svs,
                                       std::uint64_t seed);

// ---------------------------------------------------------------------------
// Posterior family

/// Largest minus second largest posterior per row. Rows must be probability vectors.
ScoreVector score_bt(const Matrix& posteriors);

/// For each candidate: add it with its most probable label, retrain, and weigh the
/// per-class KL divergence of the new pool posteriors from the old ones (over the
/// rest of the pool) by the candidate's posterior, scaled by 1/(u-1). A candidate
/// whose retraining fails scores kExcluded.
ScoreVector score_kl_max(const Matrix& labeled, std::span<const int> labels, int n_classes, const Matrix& pool,
                         const Trainer& trainer);

/// Uniform without replacement.
std::vector<std::size_t> select_random(std::size_t pool_size, std::size_t q, std::uint64_t seed);

}  // namespace al::heuristics
