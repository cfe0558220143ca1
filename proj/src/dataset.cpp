#include "al/dataset.hpp"
#include "al/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace al {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
    return std::string(s.substr(b, e - b));
}

// Splits one CSV record. Double quotes group a field; "" inside quotes is a literal quote.
std::vector<std::string> split_record(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    fields.push_back(trim(cur));
    return fields;
}

std::optional<double> parse_number(const std::string& text) {
    if (text.empty()) return std::nullopt;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (*first == '+') ++first;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return value;
}

Eigen::LLT<Eigen::MatrixXd> checked_cholesky(const Matrix& cov, std::size_t class_id) {
    if (cov.rows() != cov.cols()) {
        throw ConfigError("class " + std::to_string(class_id) + ": covariance is not square");
    }
    if (!cov.isApprox(cov.transpose(), 1e-12)) {
        throw ConfigError("class " + std::to_string(class_id) + ": covariance is not symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt{Eigen::MatrixXd(cov)};
    if (llt.info() != Eigen::Success) {
        throw ConfigError("class " + std::to_string(class_id) +
                          ": covariance is not positive definite");
    }
    return llt;
}

}  // namespace

void validate(const Dataset& ds) {
    if (static_cast<std::size_t>(ds.features.rows()) != ds.labels.size()) {
        throw ConfigError("dataset: feature rows do not match label count");
    }
    if (ds.n_classes < 1) throw ConfigError("dataset: no classes");
    std::vector<std::size_t> counts(static_cast<std::size_t>(ds.n_classes), 0);
    for (int y : ds.labels) {
        if (y < 0 || y >= ds.n_classes) throw ConfigError("dataset: label out of range");
        ++counts[static_cast<std::size_t>(y)];
    }
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0) throw ConfigError("dataset: class " + std::to_string(c) + " has no samples");
    }
    if (!ds.features.allFinite()) throw ConfigError("dataset: non-finite feature");
}

std::vector<int> gather_labels(std::span<const int> labels, std::span<const std::size_t> idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(labels[i]);
    return out;
}

Dataset load_csv(const std::filesystem::path& path, const LabelColumn& label_column) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path.string() + ": missing header row");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
    const auto header = split_record(line);

    std::size_t label_pos = 0;
    if (const auto* name = std::get_if<std::string>(&label_column)) {
        auto it = std::find(header.begin(), header.end(), *name);
        if (it == header.end()) throw ConfigError(path.string() + ": no column named '" + *name + "'");
        label_pos = static_cast<std::size_t>(it - header.begin());
    } else {
        label_pos = std::get<std::size_t>(label_column);
        if (label_pos >= header.size()) throw ConfigError(path.string() + ": label column index out of range");
    }
    if (header.size() < 2) throw ConfigError(path.string() + ": need at least one feature column");

    std::vector<std::vector<double>> rows;
    std::vector<std::string> raw_labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_record(line);
        if (fields.size() != header.size()) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " fields, got " +
                              std::to_string(fields.size()));
        }
        std::vector<double> row;
        row.reserve(header.size() - 1);
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (c == label_pos) continue;
            auto value = parse_number(fields[c]);
            if (!value) {
                throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                                  ": non-numeric feature '" + fields[c] + "' in column '" +
                                  header[c] + "'");
            }
            if (!std::isfinite(*value)) {
                throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": non-finite feature");
            }
            row.push_back(*value);
        }
        rows.push_back(std::move(row));
        raw_labels.push_back(fields[label_pos]);
    }
    if (rows.empty()) throw ConfigError(path.string() + ": no data rows");

    std::vector<std::string> names(raw_labels.begin(), raw_labels.end());
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    if (names.size() < 2) throw ConfigError(path.string() + ": fewer than 2 distinct labels");
    const bool numeric = std::all_of(names.begin(), names.end(),
                                     [](const std::string& s) { return parse_number(s).has_value(); });
    if (numeric) {
        std::stable_sort(names.begin(), names.end(), [](const std::string& a, const std::string& b) {
            return *parse_number(a) < *parse_number(b);
        });
    }
    std::map<std::string, int> dense;
    for (std::size_t k = 0; k < names.size(); ++k) dense[names[k]] = static_cast<int>(k);

    Dataset ds;
    ds.features.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(header.size() - 1));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
        ds.labels.push_back(dense.at(raw_labels[r]));
    }
    ds.n_classes = static_cast<int>(names.size());
    ds.class_names = std::move(names);
    validate(ds);
    return ds;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw RuntimeFailure("cannot write " + path.string());
    for (Eigen::Index c = 0; c < ds.features.cols(); ++c) out << 'x' << c << ',';
    out << "label\n";
    char buf[64];
    for (std::size_t r = 0; r < ds.size(); ++r) {
        for (Eigen::Index c = 0; c < ds.features.cols(); ++c) {
            auto res = std::to_chars(buf, buf + sizeof buf, ds.features(static_cast<Eigen::Index>(r), c));
            out.write(buf, res.ptr - buf);
            out << ',';
        }
        const auto y = static_cast<std::size_t>(ds.labels[r]);
        if (y < ds.class_names.size()) {
            out << ds.class_names[y];
        } else {
            out << ds.labels[r];
        }
        out << '\n';
    }
    if (!out) throw RuntimeFailure("write failed: " + path.string());
}

Dataset generate_gaussian_mixture(std::span<const ClassSpec> specs, std::uint64_t seed) {
    if (specs.empty()) throw ConfigError("mixture: no classes");
    const auto d = specs.front().mean.size();
    std::size_t total = 0;
    std::vector<Eigen::MatrixXd> factors;
    for (std::size_t k = 0; k < specs.size(); ++k) {
        const auto& s = specs[k];
        if (s.count == 0) throw ConfigError("mixture: every class needs samples");
        if (s.mean.size() != d) throw ConfigError("mixture: inconsistent dimensions");
        if (s.covariance.rows() != d) throw ConfigError("mixture: covariance dimension mismatch");
        if (s.outlier_fraction < 0.0 || s.outlier_fraction > 1.0 || s.outlier_scale <= 0.0) {
            throw ConfigError("mixture: invalid outlier settings");
        }
        factors.push_back(checked_cholesky(s.covariance, k).matrixL());
        total += s.count;
    }

    Rng rng(seed);
    Dataset ds;
    ds.features.resize(static_cast<Eigen::Index>(total), d);
    ds.labels.reserve(total);
    ds.n_classes = static_cast<int>(specs.size());
    Eigen::Index row = 0;
    Eigen::VectorXd z(d);
    for (std::size_t k = 0; k < specs.size(); ++k) {
        const auto& s = specs[k];
        const auto n_outliers = static_cast<std::size_t>(std::llround(s.outlier_fraction * static_cast<double>(s.count)));
        for (std::size_t i = 0; i < s.count; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) z(j) = rng.normal();
            const double scale = i < n_outliers ? s.outlier_scale : 1.0;
            ds.features.row(row) = (s.mean + scale * (factors[k] * z)).transpose();
            ds.labels.push_back(static_cast<int>(k));
            ++row;
        }
    }
    validate(ds);
    return ds;
}

Dataset generate_three_class_toy(std::size_t n_per_class, std::uint64_t seed) {
    if (n_per_class < 1) throw ConfigError("toy: n_per_class must be >= 1");
    constexpr double side = 3.0;
    constexpr double sigma = 0.8;
    const double height = side * std::numbers::sqrt3 / 2.0;
    const Eigen::Vector2d means[3] = {{0.0, 0.0}, {side, 0.0}, {side / 2.0, height}};
    std::vector<ClassSpec> specs;
    for (const auto& m : means) {
        ClassSpec s;
        s.mean = m;
        s.covariance = Matrix::Identity(2, 2) * (sigma * sigma);
        s.count = n_per_class;
        specs.push_back(std::move(s));
    }
    return generate_gaussian_mixture(specs, seed);
}

std::vector<ClassSpec> overlapping_mixture_spec(std::size_t n_per_class) {
    constexpr int n_classes = 12;
    constexpr int d = 8;
    Rng layout(0x12C1A55E5ULL);  // fixed layout, independent of the sampling seed
    std::vector<ClassSpec> specs;
    for (int k = 0; k < n_classes; ++k) {
        ClassSpec s;
        s.mean = Vector(d);
        for (int j = 0; j < d; ++j) s.mean(j) = 3.0 * layout.uniform() - 1.5;
        Matrix a(d, d);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) a(r, c) = 0.45 * layout.normal();
        s.covariance = a * a.transpose() / d + 0.25 * Matrix::Identity(d, d);
        s.covariance = 0.5 * (s.covariance + s.covariance.transpose()).eval();
        s.count = n_per_class;
        specs.push_back(std::move(s));
    }
    return specs;
}

std::vector<ClassSpec> contaminated_mixture_spec(std::size_t n_per_class) {
    constexpr int d = 4;
    std::vector<ClassSpec> specs;
    for (int k = 0; k < 5; ++k) {
        ClassSpec s;
        s.mean = Vector::Zero(d);
        if (k < d) {
            s.mean(k) = 2.5;
        } else {
            s.mean.setConstant(-1.0);
        }
        s.covariance = 0.5 * Matrix::Identity(d, d);
        s.count = n_per_class;
        s.outlier_fraction = 0.12;
        s.outlier_scale = 4.0;
        specs.push_back(std::move(s));
    }
    return specs;
}

void validate(const Split& split, const Dataset& ds) {
    std::vector<char> seen(ds.size(), 0);
    auto mark = [&](const std::vector<std::size_t>& idx, const char* what) {
        for (std::size_t i : idx) {
            if (i >= ds.size()) throw ConfigError(std::string("split: ") + what + " index out of range");
            if (seen[i]) throw ConfigError(std::string("split: ") + what + " index duplicated across sets");
            seen[i] = 1;
        }
    };
    mark(split.labeled_idx, "labeled");
    mark(split.pool_idx, "pool");
    mark(split.test_idx, "test");
    if (split.pool_idx.empty()) throw ConfigError("split: empty pool");
}

Split stratified_split(const Dataset& ds, std::size_t per_class_initial, std::size_t pool_size,
                       std::uint64_t seed) {
    validate(ds);
    if (per_class_initial * static_cast<std::size_t>(ds.n_classes) + pool_size > ds.size()) {
        throw ConfigError("split: per_class_initial * N + pool_size exceeds the sample count");
    }
    if (pool_size == 0) throw ConfigError("split: pool_size must be >= 1");
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.n_classes));
    for (std::size_t i = 0; i < ds.size(); ++i) by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);

    Rng rng(seed);
    Split split;
    std::vector<std::size_t> rest;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& members = by_class[c];
        if (members.size() < per_class_initial) {
            throw ConfigError("split: class " + std::to_string(c) + " has " +
                              std::to_string(members.size()) + " samples, fewer than " +
                              std::to_string(per_class_initial));
        }
        rng.shuffle(members);
        split.labeled_idx.insert(split.labeled_idx.end(), members.begin(),
                                 members.begin() + static_cast<std::ptrdiff_t>(per_class_initial));
        rest.insert(rest.end(), members.begin() + static_cast<std::ptrdiff_t>(per_class_initial), members.end());
    }
    std::sort(rest.begin(), rest.end());
    rng.shuffle(rest);
    split.pool_idx.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(pool_size));
    split.test_idx.assign(rest.begin() + static_cast<std::ptrdiff_t>(pool_size), rest.end());
    std::sort(split.labeled_idx.begin(), split.labeled_idx.end());
    std::sort(split.pool_idx.begin(), split.pool_idx.end());
    std::sort(split.test_idx.begin(), split.test_idx.end());
    return split;
}

Standardization fit_standardization(const Matrix& features, std::span<const std::size_t> rows) {
    if (rows.empty()) throw ConfigError("standardization: no rows");
    const auto d = features.cols();
    Standardization st{Vector::Zero(d), Vector::Ones(d)};
    for (std::size_t r : rows) st.mean += features.row(static_cast<Eigen::Index>(r)).transpose();
    st.mean /= static_cast<double>(rows.size());
    Vector var = Vector::Zero(d);
    for (std::size_t r : rows) {
        var += (features.row(static_cast<Eigen::Index>(r)).transpose() - st.mean).cwiseAbs2();
    }
    var /= static_cast<double>(rows.size());
    for (Eigen::Index j = 0; j < d; ++j) {
        const double sd = std::sqrt(var(j));
        st.scale(j) = sd > 1e-12 ? sd : 1.0;
    }
    return st;
}

Dataset apply_standardization(const Dataset& ds, const Standardization& st) {
    Dataset out = ds;
    for (Eigen::Index r = 0; r < out.features.rows(); ++r) {
        out.features.row(r) = (out.features.row(r) - st.mean.transpose()).cwiseQuotient(st.scale.transpose());
    }
    return out;
}

Dataset standardize_for_split(const Dataset& ds, Split& split) {
    std::vector<std::size_t> rows = split.labeled_idx;
    rows.insert(rows.end(), split.pool_idx.begin(), split.pool_idx.end());
    std::sort(rows.begin(), rows.end());
    split.standardization = fit_standardization(ds.features, rows);
    return apply_standardization(ds, *split.standardization);
}

}  // namespace al
