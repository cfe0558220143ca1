#include "al/dataset.hpp"

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

using namespace al;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
    const auto path = std::filesystem::temp_directory_path() / ("al_test_" + name);
    std::ofstream(path, std::ios::binary) << text;
    return path;
}

bool throws_with(auto&& fn, const std::string& fragment) {
    try {
        fn();
    } catch (const std::exception& e) {
        return std::string(e.what()).find(fragment) != std::string::npos;
    }
    return false;
}

}  // namespace

TEST_CASE("load_csv re-encodes string labels densely") {
    const auto path = write_temp("ab.csv", "x,y,label\n1,2,a\n3,4,b\n5,6,a\n7,8,b\n");
    const auto ds = load_csv(path, std::string("label"));
    CHECK(ds.n_classes == 2);
    CHECK(ds.size() == 4);
    CHECK(ds.dims() == 2);
    CHECK(ds.labels == std::vector<int>{0, 1, 0, 1});
    CHECK(ds.class_names == std::vector<std::string>{"a", "b"});
    CHECK(ds.features(3, 1) == 8.0);
}

TEST_CASE("load_csv orders numeric labels numerically") {
    const auto path = write_temp("num.csv", "label,f\n9,0.5\n3,1e-3\n7,2\n3,4\n");
    const auto ds = load_csv(path, std::size_t{0});
    CHECK(ds.n_classes == 3);
    CHECK(ds.labels == std::vector<int>{2, 0, 1, 0});
    CHECK(ds.class_names == std::vector<std::string>{"3", "7", "9"});
    CHECK(ds.features(1, 0) == doctest::Approx(1e-3));
}

TEST_CASE("load_csv rejects bad input") {
    CHECK(throws_with([] { load_csv(write_temp("nan.csv", "x,label\nnan,a\n1,b\n"), std::string("label")); },
                      "non-finite feature"));
    CHECK(throws_with([] { load_csv(write_temp("txt.csv", "x,label\nhello,a\n1,b\n"), std::string("label")); },
                      "non-numeric"));
    CHECK(throws_with([] { load_csv(write_temp("one.csv", "x,label\n1,a\n2,a\n"), std::string("label")); },
                      "fewer than 2"));
    CHECK_THROWS_AS(load_csv("/nonexistent/file.csv", std::string("label")), ConfigError);
    CHECK_THROWS_AS(load_csv(write_temp("nocol.csv", "x,y\n1,2\n"), std::string("label")), ConfigError);
}

TEST_CASE("write_csv and load_csv round trip") {
    const auto ds = generate_three_class_toy(10, 4);
    const auto path = std::filesystem::temp_directory_path() / "al_test_roundtrip.csv";
    write_csv(ds, path);
    const auto back = load_csv(path, std::string("label"));
    CHECK(back.labels == ds.labels);
    CHECK(back.features == ds.features);
}

TEST_CASE("three-class toy contract") {
    const auto a = generate_three_class_toy(100, 1);
    CHECK(a.size() == 300);
    CHECK(a.n_classes == 3);
    for (int c = 0; c < 3; ++c) CHECK(std::count(a.labels.begin(), a.labels.end(), c) == 100);
    const auto b = generate_three_class_toy(100, 1);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
    const auto c = generate_three_class_toy(100, 2);
    CHECK(a.features != c.features);
    CHECK(a.features.allFinite());
}

TEST_CASE("gaussian mixture checks and symmetry") {
    ClassSpec s0{Vector::Constant(2, -1.0), Matrix::Identity(2, 2), 4000};
    ClassSpec s1{Vector::Constant(2, 1.0), Matrix::Identity(2, 2), 4000};
    std::vector<ClassSpec> specs{s0, s1};
    const auto ds = generate_gaussian_mixture(specs, 3);
    // Midpoint of the means is equidistant to both by construction; the sample
    // means land near the specified ones.
    Vector m0 = Vector::Zero(2), m1 = Vector::Zero(2);
    for (std::size_t i = 0; i < ds.size(); ++i) (ds.labels[i] == 0 ? m0 : m1) += ds.features.row(static_cast<Eigen::Index>(i)).transpose();
    m0 /= 4000.0;
    m1 /= 4000.0;
    CHECK((m0 - s0.mean).norm() < 0.1);
    CHECK((m1 - s1.mean).norm() < 0.1);
    const Vector mid = (s0.mean + s1.mean) / 2.0;
    CHECK((mid - s0.mean).norm() == doctest::Approx((mid - s1.mean).norm()));

    specs[1].count = 0;
    CHECK(throws_with([&] { generate_gaussian_mixture(specs, 1); }, "every class needs samples"));
    specs[1].count = 5;
    specs[1].covariance << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(generate_gaussian_mixture(specs, 1), ConfigError);
}

TEST_CASE("named mixtures are valid datasets") {
    const auto spec12 = overlapping_mixture_spec(20);
    const auto ds = generate_gaussian_mixture(spec12, 5);
    CHECK(ds.n_classes == 12);
    CHECK(ds.dims() == 8);
    CHECK_NOTHROW(validate(ds));
    const auto spec5 = contaminated_mixture_spec(30);
    const auto ds5 = generate_gaussian_mixture(spec5, 5);
    CHECK(ds5.n_classes == 5);
    CHECK(ds5.features.allFinite());
}

TEST_CASE("stratified split is a seeded partition") {
    const auto ds = generate_three_class_toy(50, 2);
    const auto s = stratified_split(ds, 5, 60, 11);
    CHECK(s.labeled_idx.size() == 15);
    CHECK(s.pool_idx.size() == 60);
    CHECK(s.test_idx.size() == 150 - 75);
    for (int c = 0; c < 3; ++c) {
        CHECK(std::count_if(s.labeled_idx.begin(), s.labeled_idx.end(), [&](std::size_t i) { return ds.labels[i] == c; }) == 5);
    }
    std::set<std::size_t> all(s.labeled_idx.begin(), s.labeled_idx.end());
    all.insert(s.pool_idx.begin(), s.pool_idx.end());
    all.insert(s.test_idx.begin(), s.test_idx.end());
    CHECK(all.size() == ds.size());
    CHECK_NOTHROW(validate(s, ds));

    const auto again = stratified_split(ds, 5, 60, 11);
    CHECK(again.labeled_idx == s.labeled_idx);
    CHECK(again.pool_idx == s.pool_idx);
    CHECK(stratified_split(ds, 5, 60, 12).pool_idx != s.pool_idx);

    CHECK_THROWS_AS(stratified_split(ds, 51, 0, 1), ConfigError);
    CHECK_THROWS_AS(stratified_split(ds, 5, 200, 1), ConfigError);
}

TEST_CASE("split validation catches overlap") {
    const auto ds = generate_three_class_toy(5, 2);
    Split s{{0, 1}, {1, 2}, {3}, std::nullopt};
    CHECK_THROWS_AS(validate(s, ds), ConfigError);
    s.pool_idx = {};
    CHECK_THROWS_AS(validate(s, ds), ConfigError);
}

TEST_CASE("standardization fits on labeled and pool rows") {
    const auto ds = generate_three_class_toy(40, 9);
    auto split = stratified_split(ds, 5, 50, 3);
    const auto st = standardize_for_split(ds, split);
    REQUIRE(split.standardization.has_value());
    std::vector<std::size_t> fit_rows = split.labeled_idx;
    fit_rows.insert(fit_rows.end(), split.pool_idx.begin(), split.pool_idx.end());
    const Matrix fitted = gather_rows(st.features, fit_rows);
    const Eigen::RowVectorXd mean = fitted.colwise().mean();
    CHECK(mean.cwiseAbs().maxCoeff() < 1e-12);
    const Matrix centered = fitted.rowwise() - mean;
    for (Eigen::Index c = 0; c < fitted.cols(); ++c) {
        CHECK(std::sqrt(centered.col(c).squaredNorm() / static_cast<double>(fitted.rows())) == doctest::Approx(1.0));
    }
}
