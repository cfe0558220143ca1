#include "al/bench.hpp"
#include "al/model_selection.hpp"
#include "al/rng.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace al {

namespace {

constexpr std::uint64_t kSplitStream = 100;

std::size_t parse_count(std::string_view text, const char* what) {
    std::size_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError(std::string("invalid ") + what + " '" + std::string(text) + "'");
    return v;
}

std::string join_heuristics(const std::vector<HeuristicId>& ids) {
    std::string out;
    for (auto id : ids) {
        if (!out.empty()) out += ',';
        out += to_string(id);
    }
    return out;
}

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (double x : v) {
        if (!out.empty()) out += ',';
        out += format_double(x);
    }
    return out;
}

std::uint64_t fingerprint(const Dataset& ds) {
    std::uint64_t h = splitmix64(ds.size());
    for (Eigen::Index i = 0; i < ds.features.size(); ++i) {
        std::uint64_t bits = 0;
        const double v = ds.features.data()[i];
        std::memcpy(&bits, &v, sizeof bits);
        h = splitmix64(h ^ bits);
    }
    for (int y : ds.labels) h = splitmix64(h ^ static_cast<std::uint64_t>(y));
    return h;
}

std::size_t default_pool(const ExperimentConfig& cfg, const Dataset& data) {
    const auto initial = cfg.initial_per_class * static_cast<std::size_t>(data.n_classes);
    if (data.size() <= initial) throw ConfigError("dataset too small for the initial labeled set");
    return cfg.pool_size > 0 ? cfg.pool_size : (data.size() - initial) / 2;
}

// Runs jobs 0..n-1 on `workers` threads; each job writes only its own slot.
template <class Job>
void run_parallel(std::size_t n, unsigned workers, Job job) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                job(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto count = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < count; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot write " + path.string());
    out << content;
    if (!out) throw RuntimeFailure("write failed for " + path.string());
}

}  // namespace

QSetting QSetting::parse(std::string_view text) {
    if (text == "n+5" || text == "N+5") return {Kind::n_plus_5, 0};
    if (text == "n+20" || text == "N+20") return {Kind::n_plus_20, 0};
    const auto v = parse_count(text, "q");
    if (v == 0) throw ConfigError("q must be >= 1");
    return {Kind::fixed, v};
}

std::size_t QSetting::resolve(int n_classes) const {
    switch (kind) {
        case Kind::n_plus_5:
            return static_cast<std::size_t>(n_classes) + 5;
        case Kind::n_plus_20:
            return static_cast<std::size_t>(n_classes) + 20;
        case Kind::fixed:
            return value;
    }
    return value;
}

std::string QSetting::to_string() const {
    switch (kind) {
        case Kind::n_plus_5:
            return "n+5";
        case Kind::n_plus_20:
            return "n+20";
        case Kind::fixed:
            return std::to_string(value);
    }
    return {};
}

SynthSpec SynthSpec::parse(std::string_view text) {
    SynthSpec spec;
    const auto colon = text.find(':');
    spec.kind = std::string(text.substr(0, colon));
    if (spec.kind != "toy3" && spec.kind != "mixture" && spec.kind != "outlier5") {
        throw ConfigError("unknown synthetic kind '" + spec.kind + "' (toy3, mixture, outlier5)");
    }
    if (colon == std::string_view::npos) return spec;
    std::string_view rest = text.substr(colon + 1);
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const auto item = rest.substr(0, comma);
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) throw ConfigError("synthetic spec item '" + std::string(item) + "' lacks '='");
        const auto key = item.substr(0, eq);
        const auto val = item.substr(eq + 1);
        if (key == "n") {
            spec.n_per_class = parse_count(val, "n");
            if (spec.n_per_class == 0) throw ConfigError("n must be >= 1");
        } else if (key == "seed") {
            spec.seed = parse_count(val, "seed");
        } else {
            throw ConfigError("unknown synthetic spec key '" + std::string(key) + "'");
        }
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    return spec;
}

std::string SynthSpec::to_string() const {
    return kind + ":n=" + std::to_string(n_per_class) + ",seed=" + std::to_string(seed);
}

Dataset generate(const SynthSpec& spec) {
    if (spec.kind == "toy3") return generate_three_class_toy(spec.n_per_class, spec.seed);
    if (spec.kind == "mixture") return generate_gaussian_mixture(overlapping_mixture_spec(spec.n_per_class), spec.seed);
    if (spec.kind == "outlier5") return generate_gaussian_mixture(contaminated_mixture_spec(spec.n_per_class), spec.seed);
    throw ConfigError("unknown synthetic kind '" + spec.kind + "'");
}

void ExperimentConfig::validate() const {
    if (csv.has_value() == synth.has_value()) throw ConfigError("give exactly one of a csv file or a synthetic spec");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (initial_per_class < 1) throw ConfigError("initial_per_class must be >= 1");
    if (q.kind == QSetting::Kind::fixed && q.value == 0) throw ConfigError("q must be >= 1");
    stopping.validate();
    EngineConfig probe = engine;
    probe.q = 1;
    probe.validate();
    for (auto id : heuristics) {
        if (engine.learner.kind == ClassifierKind::lda && needs_svm(id)) {
            throw ConfigError("heuristic " + std::string(to_string(id)) + " needs the svm classifier");
        }
        if (id == HeuristicId::kl_max && engine.learner.kind == ClassifierKind::svm && !engine.params.allow_kl_max_svm) {
            throw ConfigError("kl-max with svm needs the explicit override");
        }
    }
}

std::vector<AggregatePoint> aggregate(const std::vector<std::vector<CurvePoint>>& trials) {
    if (trials.empty()) throw ConfigError("aggregate: no trials");
    const auto& grid = trials.front();
    for (const auto& t : trials) {
        if (t.size() != grid.size()) throw ConfigError("aggregate: trial curves have different lengths");
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i].labels_used != grid[i].labels_used) throw ConfigError("aggregate: misaligned labels_used grids");
        }
    }
    std::vector<AggregatePoint> out(grid.size());
    std::vector<double> values(trials.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t t = 0; t < trials.size(); ++t) values[t] = trials[t][i].accuracy;
        std::sort(values.begin(), values.end());
        out[i].labels_used = grid[i].labels_used;
        if (values.front() == values.back()) {
            out[i].mean_acc = values.front();
            out[i].std_acc = 0.0;
            continue;
        }
        double sum = 0.0;
        for (double v : values) sum += v;
        const double mean = std::clamp(sum / static_cast<double>(values.size()), values.front(), values.back());
        double sq = 0.0;
        for (double v : values) sq += (v - mean) * (v - mean);
        out[i].mean_acc = mean;
        out[i].std_acc = std::sqrt(sq / static_cast<double>(values.size()));
    }
    return out;
}

Dataset load_experiment_data(const ExperimentConfig& cfg) {
    if (cfg.csv) return load_csv(*cfg.csv, cfg.label_column);
    if (cfg.synth) return generate(*cfg.synth);
    throw ConfigError("no data source");
}

TrialSetup prepare_trial(const ExperimentConfig& cfg, const Dataset& data, int trial) {
    TrialSetup out;
    out.seed = trial_seed(cfg.master_seed, static_cast<std::uint64_t>(trial));
    out.split = stratified_split(data, cfg.initial_per_class, default_pool(cfg, data), derive_seed(out.seed, kSplitStream));
    out.data = cfg.standardize ? standardize_for_split(data, out.split) : data;
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) { return run_experiment(cfg, load_experiment_data(cfg)); }

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& data) {
    cfg.validate();
    validate(data);
    ExperimentResult result;
    result.q = cfg.q.resolve(data.n_classes);
    result.data_fingerprint = fingerprint(data);

    std::vector<HeuristicId> ids = cfg.heuristics;
    if (std::find(ids.begin(), ids.end(), HeuristicId::random) == ids.end()) ids.push_back(HeuristicId::random);

    const auto trials = static_cast<std::size_t>(cfg.trials);
    std::vector<TrialSetup> setups;
    for (std::size_t t = 0; t < trials; ++t) setups.push_back(prepare_trial(cfg, data, static_cast<int>(t)));

    auto engine_for = [&](std::size_t t) {
        EngineConfig e = cfg.engine;
        e.q = result.q;
        e.seed = setups[t].seed;
        return e;
    };

    // Jobs: one Standard fit per trial, then every (heuristic, trial) pair.
    std::vector<double> standard(trials);
    std::vector<TrialCurve> runs(ids.size() * trials);
    run_parallel(trials + runs.size(), cfg.threads > 0 ? cfg.threads : worker_count(), [&](std::size_t job) {
        if (job < trials) {
            standard[job] = standard_accuracy(setups[job].data, setups[job].split, engine_for(job));
            return;
        }
        const auto k = job - trials;
        const auto h = k / trials, t = k % trials;
        runs[k] = run_curve(setups[t].data, setups[t].split, ids[h], engine_for(t), cfg.stopping);
    });

    {
        std::vector<std::vector<CurvePoint>> as_points;
        for (double s : standard) as_points.push_back({{0, s}});
        const auto agg = aggregate(as_points);
        result.standard_mean = agg.front().mean_acc;
        result.standard_std = agg.front().std_acc;
        result.standard_per_trial = standard;
    }

    for (std::size_t h = 0; h < ids.size(); ++h) {
        LearningCurve curve;
        curve.heuristic = std::string(to_string(ids[h]));
        std::vector<std::vector<CurvePoint>> done;
        for (std::size_t t = 0; t < trials; ++t) {
            const auto& run = runs[h * trials + t];
            if (run.complete) {
                done.push_back(run.points);
            } else {
                curve.failures.push_back("trial " + std::to_string(t) + ": " + run.error);
            }
        }
        curve.trials_completed = done.size();
        if (!done.empty()) curve.points = aggregate(done);
        result.curves.push_back(std::move(curve));
    }

    std::ostringstream c;
    if (cfg.synth) {
        c << "source = synth " << cfg.synth->to_string() << '\n';
    } else {
        c << "source = csv " << cfg.csv->generic_string() << '\n';
        if (const auto* name = std::get_if<std::string>(&cfg.label_column)) {
            c << "label_column = " << *name << '\n';
        } else {
            c << "label_column = #" << std::get<std::size_t>(cfg.label_column) << '\n';
        }
    }
    const auto& e = cfg.engine;
    const bool lda = e.learner.kind == ClassifierKind::lda;
    c << "samples = " << data.size() << '\n'
      << "features = " << data.dims() << '\n'
      << "classes = " << data.n_classes << '\n'
      << "data_fingerprint = " << result.data_fingerprint << '\n'
      << "classifier = " << (lda ? "lda" : "svm") << '\n'
      << "heuristics = " << join_heuristics(ids) << '\n'
      << "q = " << cfg.q.to_string() << " (" << result.q << ")\n"
      << "trials = " << cfg.trials << '\n'
      << "master_seed = " << cfg.master_seed << '\n'
      << "initial_per_class = " << cfg.initial_per_class << '\n'
      << "pool_size = " << default_pool(cfg, data) << '\n'
      << "standardize = " << (cfg.standardize ? "true" : "false") << '\n'
      << "stopping.max_iterations = " << (cfg.stopping.max_iterations ? std::to_string(*cfg.stopping.max_iterations) : "none") << '\n'
      << "stopping.label_budget = " << (cfg.stopping.label_budget ? std::to_string(*cfg.stopping.label_budget) : "none") << '\n'
      << "stopping.pool_exhaustion = " << (cfg.stopping.pool_exhaustion ? "true" : "false") << '\n';
    if (lda) {
        c << "lda_shrinkage = " << format_double(e.learner.lda_shrinkage) << '\n';
    } else {
        std::vector<double> gammas;
        for (const auto& k : e.kernel_grid) gammas.push_back(k.gamma);
        c << "kernel = " << (e.learner.svm.kernel.kind == KernelKind::linear ? "linear" : "rbf") << '\n'
          << "c_grid = " << join_doubles(e.c_grid.empty() ? default_c_grid() : e.c_grid) << '\n'
          << "gamma_grid = " << join_doubles(e.kernel_grid.empty() ? default_gamma_grid() : gammas) << '\n'
          << "cv_folds = " << e.cv_folds << '\n'
          << "refit_every = " << e.refit_every << '\n'
          << "smo_tol = " << format_double(e.learner.svm.smo.tol) << '\n';
    }
    const auto& p = e.params;
    c << "subset_size = " << (p.subset_size == 0 ? std::string("3q") : std::to_string(p.subset_size)) << '\n'
      << "abd_lambda = " << format_double(p.abd_lambda) << '\n'
      << "committee_members = " << (p.committee_members > 0 ? p.committee_members : (lda ? 12 : 7)) << '\n'
      << "bag_fraction = " << format_double(p.bag_fraction > 0.0 ? p.bag_fraction : (lda ? 0.85 : 0.75)) << '\n'
      << "amd_views = " << (p.amd_views > 0 ? p.amd_views : std::min<std::size_t>(data.dims(), 3)) << '\n'
      << "amd_view_mode = " << (p.amd_correlation_views ? "correlation" : "contiguous") << '\n'
      << "trial_seeds =";
    for (const auto& s : setups) c << ' ' << s.seed;
    c << '\n' << "standard_mean = " << format_double(result.standard_mean) << '\n'
      << "standard_std = " << format_double(result.standard_std) << '\n';
    for (const auto& curve : result.curves) {
        c << "completed." << curve.heuristic << " = " << curve.trials_completed << '\n';
        for (const auto& f : curve.failures) c << "failure." << curve.heuristic << " = " << f << '\n';
    }
    result.resolved_config = c.str();
    return result;
}

std::vector<CompareRow> compare(const std::vector<LearningCurve>& curves, std::size_t budget) {
    auto at = [&](const LearningCurve& c) -> const AggregatePoint& {
        for (const auto& p : c.points) {
            if (p.labels_used == budget) return p;
        }
        throw ConfigError("budget " + std::to_string(budget) + " is not on the grid of curve '" + c.heuristic + "'");
    };
    const auto random = std::find_if(curves.begin(), curves.end(), [](const auto& c) { return c.heuristic == "random"; });
    if (random == curves.end()) throw ConfigError("compare needs a random curve");
    const double base = at(*random).mean_acc;
    std::vector<CompareRow> rows;
    for (const auto& c : curves) {
        const auto& p = at(c);
        rows.push_back({c.heuristic, p.mean_acc, p.std_acc, p.mean_acc - base});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const CompareRow& a, const CompareRow& b) {
        if (a.mean_acc != b.mean_acc) return a.mean_acc > b.mean_acc;
        return a.heuristic < b.heuristic;
    });
    return rows;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw RuntimeFailure("cannot format number");
    return std::string(buf, ptr);
}

void export_results(const ExperimentResult& result, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw RuntimeFailure("cannot create " + dir.string() + ": " + ec.message());

    std::vector<const LearningCurve*> complete;
    for (const auto& curve : result.curves) {
        std::string text = "labels_used,mean_acc,std_acc\n";
        for (const auto& p : curve.points) {
            text += std::to_string(p.labels_used) + ',' + format_double(p.mean_acc) + ',' + format_double(p.std_acc) + '\n';
        }
        write_file(dir / ("curve_" + curve.heuristic + ".csv"), text);
        if (!curve.points.empty()) complete.push_back(&curve);
    }

    std::string summary = "heuristic,labels_used,mean_acc,std_acc,diff_vs_random\n";
    // Largest budget that every curve reached.
    std::optional<std::size_t> budget;
    for (const auto* c : complete) {
        const auto last = c->points.back().labels_used;
        budget = budget ? std::min(*budget, last) : last;
    }
    std::vector<LearningCurve> usable;
    for (const auto* c : complete) usable.push_back(*c);
    if (budget) {
        for (auto& c : usable) {
            // Curves stop on the same grid; keep the points up to the common budget.
            std::erase_if(c.points, [&](const AggregatePoint& p) { return p.labels_used > *budget; });
        }
        try {
            for (const auto& row : compare(usable, *budget)) {
                summary += row.heuristic + ',' + std::to_string(*budget) + ',' + format_double(row.mean_acc) + ',' +
                           format_double(row.std_acc) + ',' + format_double(row.diff_vs_random) + '\n';
            }
        } catch (const ConfigError&) {
            // budget off some curve's grid: the summary keeps the Standard row only
        }
    }
    summary += "standard,," + format_double(result.standard_mean) + ',' + format_double(result.standard_std) + ",\n";
    write_file(dir / "summary.csv", summary);
    write_file(dir / "config.txt", result.resolved_config);
}

LearningCurve read_curve_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    LearningCurve curve;
    auto stem = path.stem().string();
    curve.heuristic = stem.rfind("curve_", 0) == 0 ? stem.substr(6) : stem;
    std::string line;
    if (!std::getline(in, line) || line != "labels_used,mean_acc,std_acc") {
        throw ConfigError(path.string() + ": expected header labels_used,mean_acc,std_acc");
    }
    auto parse_double = [&](std::string_view s) {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError(path.string() + ": bad number '" + std::string(s) + "'");
        return v;
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto a = line.find(','), b = line.find(',', a + 1);
        if (a == std::string::npos || b == std::string::npos) throw ConfigError(path.string() + ": malformed row");
        const std::string_view sv(line);
        curve.points.push_back({parse_count(sv.substr(0, a), "labels_used"), parse_double(sv.substr(a + 1, b - a - 1)),
                                parse_double(sv.substr(b + 1))});
    }
    return curve;
}

std::vector<LearningCurve> read_curves(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw ConfigError(dir.string() + " is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (entry.is_regular_file() && name.rfind("curve_", 0) == 0 && entry.path().extension() == ".csv") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<LearningCurve> out;
    for (const auto& f : files) out.push_back(read_curve_csv(f));
    return out;
}

unsigned worker_count() {
    if (const char* env = std::getenv("AL_THREADS"); env != nullptr && *env != '\0') {
        const auto v = parse_count(env, "AL_THREADS");
        if (v == 0) throw ConfigError("AL_THREADS must be >= 1");
        return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace al
