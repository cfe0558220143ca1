#pragma once

#include "al/dataset.hpp"
#include "al/engine.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace al {

/// Batch size: N + 5, N + 20, or a fixed count.
struct QSetting {
    enum class Kind { n_plus_5, n_plus_20, fixed };
    Kind kind = Kind::n_plus_5;
    std::size_t value = 0;  // fixed only

    static QSetting parse(std::string_view text);  // "n+5", "n+20" or a positive integer
    std::size_t resolve(int n_classes) const;
    std::string to_string() const;
};

/// Generator description: `<kind>[:key=value,...]` with kind toy3, mixture or outlier5
/// and keys n (samples per class) and seed. Example: `toy3:n=200,seed=7`.
struct SynthSpec {
    std::string kind = "toy3";
    std::size_t n_per_class = 200;
    std::uint64_t seed = 1;

    static SynthSpec parse(std::string_view text);
    std::string to_string() const;
};

Dataset generate(const SynthSpec& spec);

struct ExperimentConfig {
    std::optional<std::filesystem::path> csv;
    LabelColumn label_column = std::string("label");
    std::optional<SynthSpec> synth;

    EngineConfig engine;  // q and seed are filled in per experiment and trial
    std::vector<HeuristicId> heuristics;
    QSetting q;
    int trials = 10;
    StoppingRule stopping;
    std::uint64_t master_seed = 0;
    std::size_t initial_per_class = 5;
    std::size_t pool_size = 0;  // 0: half of the samples left after the initial draw
    bool standardize = true;
    /// Worker threads; 0 reads AL_THREADS, falling back to the hardware count.
    unsigned threads = 0;

    void validate() const;
};

struct AggregatePoint {
    std::size_t labels_used = 0;
    double mean_acc = 0.0;
    double std_acc = 0.0;
};

struct LearningCurve {
    std::string heuristic;
    std::vector<AggregatePoint> points;
    std::size_t trials_completed = 0;
    std::vector<std::string> failures;  // one message per failed trial
};

/// Pointwise mean and population standard deviation. Sums run over sorted values,
/// so the result does not depend on trial order.
std::vector<AggregatePoint> aggregate(const std::vector<std::vector<CurvePoint>>& trials);

struct ExperimentResult {
    std::vector<LearningCurve> curves;  // requested heuristics, then random if not requested
    double standard_mean = 0.0;
    double standard_std = 0.0;
    std::vector<double> standard_per_trial;
    std::size_t q = 0;
    std::uint64_t data_fingerprint = 0;
    std::string resolved_config;  // key = value lines
};

/// The dataset described by the config (loaded or generated).
Dataset load_experiment_data(const ExperimentConfig& cfg);

ExperimentResult run_experiment(const ExperimentConfig& cfg);
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& data);

/// Split and (optionally standardized) data for one trial, as run_experiment uses them.
struct TrialSetup {
    Dataset data;
    Split split;
    std::uint64_t seed = 0;
};
TrialSetup prepare_trial(const ExperimentConfig& cfg, const Dataset& data, int trial);

struct CompareRow {
    std::string heuristic;
    double mean_acc = 0.0;
    double std_acc = 0.0;
    double diff_vs_random = 0.0;
};

/// Rows at `budget` sorted by mean descending (ties by name). Needs a `random` curve.
std::vector<CompareRow> compare(const std::vector<LearningCurve>& curves, std::size_t budget);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Writes curve_<id>.csv per curve, summary.csv and config.txt into `dir`.
void export_results(const ExperimentResult& result, const std::filesystem::path& dir);

LearningCurve read_curve_csv(const std::filesystem::path& path);
/// Every curve_*.csv in `dir`, sorted by file name.
std::vector<LearningCurve> read_curves(const std::filesystem::path& dir);

/// Worker count from AL_THREADS, else the hardware concurrency (at least 1).
unsigned worker_count();

}  // namespace al
