#include "ffcil/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "ffcil/report.hpp"
#include "ffcil/trainer.hpp"

namespace ffcil {

namespace fs = std::filesystem;

namespace {

DatasetSource build_source(const ExperimentConfig& config, std::uint64_t seed) {
    if (config.dataset.kind == DatasetConfig::Kind::import)
        return import_dataset(config.dataset.train_path, config.dataset.test_path);
    return make_gaussian_dataset(config.dataset.classes, config.dataset.dim,
                                 config.dataset.train_per_class, config.dataset.test_per_class,
                                 config.dataset.separation, seed);
}

RunReport execute(const ExperimentConfig& config, std::uint64_t seed) {
    ScheduleSpec spec = config.schedule;
    spec.seed = seed;
    const IncrementSchedule schedule = generate_schedule(spec);

    const DatasetSource source = build_source(config, seed);
    if (schedule.total() != source.num_classes)
        throw std::invalid_argument("config: schedule.total_classes != dataset classes");
    const DatasetSplit split = split_by_schedule(source, schedule);

    TrainConfig train = config.train;
    train.seed = seed;

    RunReport report = run_incremental(schedule, split, config.method, train);

    ExperimentConfig echo = config;
    echo.seeds = {seed};
    report.config_text = serialize_config(echo);
    return report;
}

std::string preset_label(const MethodPreset& method) {
    std::string label = to_string(method.name);
    const MethodPreset base = make_preset(method.name);
    const bool hardened = method.main_loss == MainLoss::cwm && method.main_loss != base.main_loss;
    if (hardened) label += "+ours";
    return label;
}

struct VariantPlan {
    std::string variant;
    ExperimentConfig config;
};

std::vector<VariantPlan> sweep_variants(const ExperimentConfig& config) {
    std::vector<VariantPlan> plans;

    ExperimentConfig equal = config;
    equal.schedule.kind = ScheduleKind::equal;
    equal.schedule.explicit_counts.clear();
    plans.push_back({"equ_t", std::move(equal)});

    plans.push_back({"ff_org", config});

    ExperimentConfig ours = config;
    ours.method = ours_variant(config.method);
    plans.push_back({"ff_ours", std::move(ours)});
    return plans;
}

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / xs.size();
}

double std_of(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean_of(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / (xs.size() - 1));
}

}  // namespace

RunReport run_single(const ExperimentConfig& config, std::uint64_t seed) {
    return execute(config, seed);
}

std::string summarize_runs(const std::vector<RunOutcome>& runs) {
    std::ostringstream os;
    os << "preset,schedule_kind,seed,a_T,forgetting,wall_ms\n";
    os << std::fixed << std::setprecision(6);
    for (const auto& run : runs) {
        if (run.failed) continue;
        os << run.preset << "," << run.schedule_kind << "," << run.seed << ","
           << run.report.final_accuracy << "," << run.report.forgetting << ","
           << std::setprecision(1) << run.report.total_wall_ms << std::setprecision(6) << "\n";
    }
    return os.str();
}

std::string comparison_block(const std::vector<RunOutcome>& runs) {
    const std::vector<std::string> order = {"equ_t", "ff_org", "ff_ours"};
    struct Cell {
        std::vector<double> accuracy, forgetting;
    };
    std::vector<Cell> cells(order.size());
    std::vector<std::string> labels(order.size());
    for (const auto& run : runs) {
        if (run.failed) continue;
        const auto it = std::find(order.begin(), order.end(), run.variant);
        if (it == order.end()) continue;
        const auto idx = static_cast<std::size_t>(it - order.begin());
        cells[idx].accuracy.push_back(run.report.final_accuracy);
        cells[idx].forgetting.push_back(run.report.forgetting);
        labels[idx] = run.preset + " / " + run.schedule_kind;
    }

    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    os << "variant   method / schedule             A_T mean+-std      Fgt mean+-std      dA_T      dFgt\n";
    double prev_acc = 0.0, prev_fgt = 0.0;
    bool have_prev = false;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (cells[i].accuracy.empty()) continue;
        const double acc = mean_of(cells[i].accuracy);
        const double fgt = mean_of(cells[i].forgetting);
        os << std::left << std::setw(10) << order[i] << std::setw(30) << labels[i] << std::right;
        os << std::setw(7) << acc << " +- " << std_of(cells[i].accuracy) << "   ";
        os << std::setw(7) << fgt << " +- " << std_of(cells[i].forgetting) << "   ";
        if (have_prev) {
            const double da = acc - prev_acc;
            const double df = fgt - prev_fgt;
            os << (da >= 0 ? "^" : "v") << std::abs(da) << "   " << (df >= 0 ? "^" : "v")
               << std::abs(df);
        } else {
            os << "-         -";
        }
        os << "\n";
        prev_acc = acc;
        prev_fgt = fgt;
        have_prev = true;
    }
    return os.str();
}

SweepResult run_sweep(const ExperimentConfig& config, const std::string& out_dir) {
    const auto plans = sweep_variants(config);

    std::vector<RunOutcome> runs;
    for (const auto& plan : plans) {
        for (std::uint64_t seed : config.seeds) {
            RunOutcome outcome;
            outcome.variant = plan.variant;
            outcome.preset = preset_label(plan.config.method);
            outcome.schedule_kind = to_string(plan.config.schedule.kind);
            outcome.seed = seed;
            runs.push_back(std::move(outcome));
        }
    }

    // Bounded worker pool; every run owns its state, results land in a
    // pre-sized slot, so the outcome order is independent of scheduling.
    std::atomic<std::size_t> next{0};
    const int workers = std::max(1, std::min<int>(config.jobs, static_cast<int>(runs.size())));
    auto work = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= runs.size()) return;
            const auto& plan = plans[i / config.seeds.size()];
            try {
                runs[i].report = execute(plan.config, runs[i].seed);
            } catch (const std::exception& e) {
                runs[i].failed = true;
                runs[i].error = e.what();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    SweepResult result;
    result.runs = std::move(runs);
    result.summary_csv = summarize_runs(result.runs);
    result.comparison = comparison_block(result.runs);

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        for (const auto& run : result.runs) {
            if (run.failed) continue;
            const std::string name =
                "run-" + run.variant + "-seed" + std::to_string(run.seed) + ".json";
            write_run_report((fs::path(out_dir) / name).string(), run.report);
        }
        std::ofstream((fs::path(out_dir) / "summary.csv").string()) << result.summary_csv;
        std::ofstream((fs::path(out_dir) / "comparison.txt").string()) << result.comparison;
    }
    return result;
}

SweepResult reaggregate_reports(const std::string& dir) {
    SweepResult result;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("run-", 0) == 0 && entry.path().extension() == ".json")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("report: no run-*.json files under '" + dir + "'");

    for (const auto& path : files) {
        check_report_file(path.string());

        RunOutcome outcome;
        outcome.report = read_run_report(path.string());
        const std::string stem = path.stem().string();  // run-<variant>-seed<N>
        const std::size_t seed_pos = stem.rfind("-seed");
        outcome.variant = stem.substr(4, seed_pos - 4);
        outcome.seed = std::stoull(stem.substr(seed_pos + 5));

        const ExperimentConfig echoed = parse_config(outcome.report.config_text);
        outcome.preset = preset_label(echoed.method);
        outcome.schedule_kind = to_string(echoed.schedule.kind);
        result.runs.push_back(std::move(outcome));
    }

    result.summary_csv = summarize_runs(result.runs);
    result.comparison = comparison_block(result.runs);
    std::ofstream((fs::path(dir) / "summary.csv").string()) << result.summary_csv;
    std::ofstream((fs::path(dir) / "comparison.txt").string()) << result.comparison;
    return result;
}

std::string resolve_out_dir(const std::string& cli_value, const std::string& config_value) {
    if (!cli_value.empty()) return cli_value;
    if (const char* env = std::getenv("FFCIL_OUT_DIR"); env && *env) return env;
    return config_value;
}

}  // namespace ffcil
