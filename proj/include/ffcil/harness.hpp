#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ffcil/config.hpp"
#include "ffcil/metrics.hpp"

namespace ffcil {

// One completed (or failed) run inside a sweep.
struct RunOutcome {
    std::string variant;   // equ_t | ff_org | ff_ours (or "single")
    std::string preset;    // preset label for the summary table
    std::string schedule_kind;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;
    RunReport report;
};

struct SweepResult {
    std::vector<RunOutcome> runs;
    std::string summary_csv;  // preset,schedule_kind,seed,a_T,forgetting,wall_ms
    std::string comparison;   // Equ.T / FF.org / FF.ours table with delta columns
};

// Builds dataset + schedule from the config for one seed and runs the method.
// The report's config echo pins that seed, so it is re-runnable standalone.
RunReport run_single(const ExperimentConfig& config, std::uint64_t seed);

// The three-arm protocol: the configured method on an equal schedule (equ_t),
// the configured method on the configured schedule (ff_org), and the
// free-flow-hardened variant on the configured schedule (ff_ours), each over
// every seed. Runs execute on a bounded worker pool; per-run failures are
// recorded and the sweep continues. Reports, summary.csv and comparison.txt
// land in out_dir.
SweepResult run_sweep(const ExperimentConfig& config, const std::string& out_dir);

// Re-reads every run-*.json under dir (validating each), then rebuilds and
// rewrites summary.csv and comparison.txt.
SweepResult reaggregate_reports(const std::string& dir);

// Output directory precedence: --out flag, then FFCIL_OUT_DIR, then config.
std::string resolve_out_dir(const std::string& cli_value, const std::string& config_value);

std::string summarize_runs(const std::vector<RunOutcome>& runs);        // CSV text
std::string comparison_block(const std::vector<RunOutcome>& runs);      // aligned text table

}  // namespace ffcil
