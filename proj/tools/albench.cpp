// albench: synthetic data, active-learning experiments and curve comparison.

#include "al/bench.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    for (char ch : text) {
        if (ch == ',') {
            if (!item.empty()) out.push_back(item);
            item.clear();
        } else if (ch != ' ') {
            item += ch;
        }
    }
    if (!item.empty()) out.push_back(item);
    return out;
}

void print_rows(const std::vector<al::CompareRow>& rows, std::size_t budget) {
    std::printf("budget %zu\n%-10s %-22s %-22s %s\n", budget, "heuristic", "mean_acc", "std_acc", "diff_vs_random");
    for (const auto& r : rows) {
        std::printf("%-10s %-22s %-22s %s\n", r.heuristic.c_str(), al::format_double(r.mean_acc).c_str(),
                    al::format_double(r.std_acc).c_str(), al::format_double(r.diff_vs_random).c_str());
    }
}

struct RunArgs {
    std::string data, synth, label_col = "label", classifier = "svm", heuristics = "ms", q = "n+5", out;
    std::string kernel = "rbf";
    int trials = 10;
    std::size_t iters = 0, budget = 0, initial = 5, pool = 0, subset = 0;
    std::uint64_t seed = 0;
    double lambda = 0.6;
    int refit_every = 10, cv_folds = 5;
    bool allow_kl_svm = false, no_standardize = false, correlation_views = false;
};

int do_run(const RunArgs& a) {
    al::ExperimentConfig cfg;
    if (!a.data.empty()) cfg.csv = a.data;
    if (!a.synth.empty()) cfg.synth = al::SynthSpec::parse(a.synth);
    cfg.label_column = a.label_col;
    if (a.classifier == "lda") {
        cfg.engine.learner.kind = al::ClassifierKind::lda;
    } else if (a.classifier != "svm") {
        throw al::ConfigError("classifier must be svm or lda");
    }
    if (a.kernel == "linear") {
        cfg.engine.learner.svm.kernel = al::KernelConfig::linear();
    } else if (a.kernel != "rbf") {
        throw al::ConfigError("kernel must be rbf or linear");
    }
    for (const auto& id : split_list(a.heuristics)) cfg.heuristics.push_back(al::parse_heuristic(id));
    cfg.q = al::QSetting::parse(a.q);
    cfg.trials = a.trials;
    if (a.iters > 0) cfg.stopping.max_iterations = a.iters;
    if (a.budget > 0) cfg.stopping.label_budget = a.budget;
    cfg.master_seed = a.seed;
    cfg.initial_per_class = a.initial;
    cfg.pool_size = a.pool;
    cfg.standardize = !a.no_standardize;
    cfg.engine.params.subset_size = a.subset;
    cfg.engine.params.abd_lambda = a.lambda;
    cfg.engine.params.allow_kl_max_svm = a.allow_kl_svm;
    cfg.engine.params.amd_correlation_views = a.correlation_views;
    cfg.engine.refit_every = a.refit_every;
    cfg.engine.cv_folds = a.cv_folds;
    cfg.validate();

    if (cfg.engine.learner.kind == al::ClassifierKind::lda && cfg.synth && cfg.synth->kind == "toy3") {
        std::cerr << "warning: lda is linear; the toy classes meet nonlinearly\n";
    }
    if (cfg.engine.params.allow_kl_max_svm) {
        std::cerr << "warning: kl-max with svm retrains once per pool candidate and iteration\n";
    }

    const auto result = al::run_experiment(cfg);
    al::export_results(result, a.out);
    for (const auto& c : result.curves) {
        for (const auto& f : c.failures) std::cerr << c.heuristic << ": " << f << '\n';
    }
    std::size_t budget = 0;
    bool have = false;
    for (const auto& c : result.curves) {
        if (c.points.empty()) continue;
        budget = have ? std::min(budget, c.points.back().labels_used) : c.points.back().labels_used;
        have = true;
    }
    if (have) print_rows(al::compare(result.curves, budget), budget);
    std::printf("standard %s (std %s)\nwrote %s\n", al::format_double(result.standard_mean).c_str(),
                al::format_double(result.standard_std).c_str(), a.out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pool-based active learning benchmark"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "Write a synthetic dataset as CSV");
    std::string kind = "toy3", synth_out;
    std::size_t n = 200;
    std::uint64_t synth_seed = 1;
    synth->add_option("--kind", kind, "toy3, mixture or outlier5")->check(CLI::IsMember({"toy3", "mixture", "outlier5"}));
    synth->add_option("--n", n, "samples per class");
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--out", synth_out, "output CSV")->required();

    auto* run = app.add_subcommand("run", "Run active-learning trials and export learning curves");
    RunArgs ra;
    auto* data_opt = run->add_option("--data", ra.data, "input CSV with a header row");
    auto* synth_opt = run->add_option("--synth", ra.synth, "generator spec, e.g. toy3:n=200,seed=1");
    data_opt->excludes(synth_opt);
    run->add_option("--label-col", ra.label_col, "label column name");
    run->add_option("--classifier", ra.classifier, "svm or lda")->check(CLI::IsMember({"svm", "lda"}));
    run->add_option("--kernel", ra.kernel, "svm kernel: rbf or linear")->check(CLI::IsMember({"rbf", "linear"}));
    run->add_option("--heuristics", ra.heuristics, "comma separated heuristic ids; random is always added");
    run->add_option("--q", ra.q, "batch size: n+5, n+20 or a count");
    run->add_option("--trials", ra.trials, "number of seeded trials");
    run->add_option("--iters", ra.iters, "maximum iterations (default: until the pool is empty)");
    run->add_option("--budget", ra.budget, "stop at this many labeled samples");
    run->add_option("--seed", ra.seed, "master seed");
    run->add_option("--out", ra.out, "output directory")->required();
    run->add_option("--initial-per-class", ra.initial, "initial labeled samples per class");
    run->add_option("--pool", ra.pool, "pool size (default: half of the remaining samples)");
    run->add_option("--subset", ra.subset, "uncertain pre-filter size (default 3q)");
    run->add_option("--lambda", ra.lambda, "mclu-abd trade-off");
    run->add_option("--refit-every", ra.refit_every, "iterations between hyperparameter searches");
    run->add_option("--cv-folds", ra.cv_folds, "cross-validation folds");
    run->add_flag("--allow-kl-max-svm", ra.allow_kl_svm, "let kl-max retrain the svm");
    run->add_flag("--amd-correlation-views", ra.correlation_views, "build amd views from feature correlation");
    run->add_flag("--no-standardize", ra.no_standardize, "keep raw feature scales");

    auto* cmp = app.add_subcommand("compare", "Rank exported curves at a label budget");
    std::string dir;
    std::size_t budget = 0;
    cmp->add_option("--dir", dir, "directory written by run")->required();
    cmp->add_option("--budget", budget, "labels used")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*synth) {
            al::SynthSpec spec;
            spec.kind = kind;
            spec.n_per_class = n;
            spec.seed = synth_seed;
            if (n == 0) throw al::ConfigError("--n must be >= 1");
            al::write_csv(al::generate(spec), synth_out);
            return 0;
        }
        if (*run) return do_run(ra);
        if (*cmp) {
            print_rows(al::compare(al::read_curves(dir), budget), budget);
            return 0;
        }
    } catch (const al::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
