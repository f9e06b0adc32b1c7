#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ffcil/config.hpp"
#include "ffcil/harness.hpp"
#include "ffcil/report.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

ffcil::ExperimentConfig load_config(const std::string& config_path, const std::string& preset,
                                    const std::string& schedule,
                                    const std::vector<std::string>& overrides) {
    std::string text = config_path.empty() ? ffcil::serialize_config(ffcil::default_config())
                                           : read_file(config_path);
    std::vector<std::string> all = overrides;
    if (!preset.empty()) all.push_back("method.preset=" + preset);
    if (!schedule.empty()) all.push_back("schedule.kind=" + schedule);
    return ffcil::parse_config(ffcil::apply_overrides(text, all));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ffcil-lab: free-flow class-incremental learning experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir, preset, schedule_kind;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int jobs = 0;
    std::vector<std::string> overrides;

    // schedule: generate and inspect a class-arrival schedule
    auto* cmd_schedule = app.add_subcommand("schedule", "generate and validate a schedule");
    int sch_total = 20, sch_steps = 4, sch_min = 1, sch_max = 0;
    std::uint64_t sch_seed = 1;
    std::string sch_kind = "fluctuating";
    std::vector<int> sch_counts;
    cmd_schedule->add_option("--schedule", sch_kind, "kind: equal|ascending|descending|fluctuating|extreme|explicit");
    cmd_schedule->add_option("--total", sch_total, "total classes");
    cmd_schedule->add_option("--steps", sch_steps, "number of steps");
    cmd_schedule->add_option("--min", sch_min, "min classes per step");
    cmd_schedule->add_option("--max", sch_max, "max classes per step (0 = no cap)");
    cmd_schedule->add_option("--seed", sch_seed, "schedule seed");
    cmd_schedule->add_option("--counts", sch_counts, "explicit per-step counts");

    // run: one experiment, one seed
    auto* cmd_run = app.add_subcommand("run", "run a single experiment");
    cmd_run->add_option("--config", config_path, "config file");
    cmd_run->add_option("--seed", seed, "seed override")->each([&](const std::string&) { seed_given = true; });
    cmd_run->add_option("--out", out_dir, "output directory");
    cmd_run->add_option("--preset", preset, "method preset override");
    cmd_run->add_option("--schedule", schedule_kind, "schedule kind override");
    cmd_run->add_option("--set", overrides, "section.key=value overrides")->take_all();

    // sweep: variants x seeds
    auto* cmd_sweep = app.add_subcommand("sweep", "run the Equ.T / FF.org / FF.ours comparison");
    cmd_sweep->add_option("--config", config_path, "config file");
    cmd_sweep->add_option("--out", out_dir, "output directory");
    cmd_sweep->add_option("--jobs", jobs, "worker pool size");
    cmd_sweep->add_option("--preset", preset, "method preset override");
    cmd_sweep->add_option("--schedule", schedule_kind, "schedule kind override");
    cmd_sweep->add_option("--set", overrides, "section.key=value overrides")->take_all();

    // report: re-aggregate existing run reports
    auto* cmd_report = app.add_subcommand("report", "validate and re-aggregate run reports");
    cmd_report->add_option("--out", out_dir, "directory with run-*.json files")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_schedule->parsed()) {
            ffcil::ScheduleSpec spec;
            spec.kind = ffcil::schedule_kind_from_string(sch_kind);
            spec.total_classes = sch_total;
            spec.num_steps = sch_steps;
            spec.min_per_step = sch_min;
            spec.max_per_step = sch_max;
            spec.explicit_counts = sch_counts;
            spec.seed = sch_seed;
            if (!sch_counts.empty() && spec.kind != ffcil::ScheduleKind::explicit_counts)
                spec.kind = ffcil::ScheduleKind::explicit_counts;
            const auto schedule = ffcil::generate_schedule(spec);
            std::cout << ffcil::schedule_to_text(schedule);
            const auto validation = ffcil::validate_schedule(schedule, spec.total_classes);
            std::cout << "validation: " << (validation.ok() ? "ok" : to_string(validation.violation))
                      << "\n";
            return validation.ok() ? 0 : 1;
        }

        if (cmd_run->parsed()) {
            auto config = load_config(config_path, preset, schedule_kind, overrides);
            const std::uint64_t run_seed = seed_given ? seed : config.seeds.front();
            const auto report = ffcil::run_single(config, run_seed);
            const std::string dir = ffcil::resolve_out_dir(out_dir, config.out_dir);
            std::filesystem::create_directories(dir);
            const std::string name = "run-" + to_string(config.schedule.kind) + "-" +
                                     to_string(config.method.name) + "-seed" +
                                     std::to_string(run_seed) + ".json";
            const std::string path = (std::filesystem::path(dir) / name).string();
            ffcil::write_run_report(path, report);
            std::cout << "seed " << run_seed << "  A_T " << report.final_accuracy << "  forgetting "
                      << report.forgetting << "  steps " << report.steps.size() << "\n"
                      << "report: " << path << "\n";
            return 0;
        }

        if (cmd_sweep->parsed()) {
            auto config = load_config(config_path, preset, schedule_kind, overrides);
            if (jobs > 0) config.jobs = jobs;
            const std::string dir = ffcil::resolve_out_dir(out_dir, config.out_dir);
            const auto result = ffcil::run_sweep(config, dir);
            int failures = 0;
            for (const auto& run : result.runs) {
                if (!run.failed) continue;
                ++failures;
                std::cerr << "run " << run.variant << " seed " << run.seed << " failed: " << run.error
                          << "\n";
            }
            std::cout << result.comparison;
            std::cout << "reports: " << dir << " (" << result.runs.size() - failures << "/"
                      << result.runs.size() << " runs ok)\n";
            return failures == 0 ? 0 : 1;
        }

        if (cmd_report->parsed()) {
            const auto result = ffcil::reaggregate_reports(out_dir);
            std::cout << result.comparison;
            std::cout << "validated " << result.runs.size() << " reports under " << out_dir << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
