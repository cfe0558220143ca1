#pragma once

#include "al/types.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace al {

/// Labeled samples. Labels are dense class ids in [0, n_classes).
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    int n_classes = 0;
    /// Original label text for each dense id (empty for generated data).
    std::vector<std::string> class_names;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t dims() const noexcept { return static_cast<std::size_t>(features.cols()); }
};

/// Throws ConfigError when a Dataset invariant does not hold.
void validate(const Dataset& ds);

std::vector<int> gather_labels(std::span<const int> labels, std::span<const std::size_t> idx);

/// Label column given by header name or by zero-based position.
using LabelColumn = std::variant<std::string, std::size_t>;

/// Reads a comma-separated file with a header row. Labels are re-encoded densely;
/// numeric labels are ordered numerically, anything else lexicographically. The
/// original label of dense id k is `class_names[k]`.
Dataset load_csv(const std::filesystem::path& path, const LabelColumn& label_column);

/// Writes features and a trailing `label` column (original names when known).
void write_csv(const Dataset& ds, const std::filesystem::path& path);

/// Three partially overlapping isotropic Gaussians in the plane, means on an
/// equilateral triangle of side 3 and shared standard deviation 0.8, so about 6% of
/// samples fall on the wrong side of a Bayes boundary. The three classes meet near
/// the triangle centroid.
Dataset generate_three_class_toy(std::size_t n_per_class, std::uint64_t seed);

struct ClassSpec {
    Vector mean;
    Matrix covariance;
    std::size_t count = 0;
    /// Fraction of this class drawn from the inflated covariance outlier_scale^2 * covariance.
    double outlier_fraction = 0.0;
    double outlier_scale = 1.0;
};

/// One Gaussian per class spec, class id = position in `specs`.
Dataset generate_gaussian_mixture(std::span<const ClassSpec> specs, std::uint64_t seed);

/// 12 strongly overlapping anisotropic classes in 8 dimensions.
std::vector<ClassSpec> overlapping_mixture_spec(std::size_t n_per_class);

/// 5 linearly separable-ish classes in 4 dimensions with 12% gross outliers per class.
std::vector<ClassSpec> contaminated_mixture_spec(std::size_t n_per_class);

struct Standardization {
    Vector mean;
    Vector scale;
};

struct Split {
    std::vector<std::size_t> labeled_idx;
    std::vector<std::size_t> pool_idx;
    std::vector<std::size_t> test_idx;
    /// Set when features were standardized for this split (fit on labeled + pool).
    std::optional<Standardization> standardization;
};

/// Throws ConfigError unless the three index lists are disjoint, valid, and the pool non-empty.
void validate(const Split& split, const Dataset& ds);

/// Exactly `per_class_initial` labeled samples per class, then `pool_size` pool
/// samples drawn uniformly from the rest; what remains is the test set.
Split stratified_split(const Dataset& ds, std::size_t per_class_initial, std::size_t pool_size,
                       std::uint64_t seed);

/// Zero mean, unit variance over the given rows. Constant columns get scale 1.
Standardization fit_standardization(const Matrix& features, std::span<const std::size_t> rows);

Dataset apply_standardization(const Dataset& ds, const Standardization& st);

/// Fits on labeled + pool, records the transform in `split`, returns transformed data.
Dataset standardize_for_split(const Dataset& ds, Split& split);

}  // namespace al
