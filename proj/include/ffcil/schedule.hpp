#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ffcil {

enum class ScheduleKind { equal, ascending, descending, fluctuating, extreme, explicit_counts };

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& s);

// Parameters for schedule generation. For every kind except explicit_counts
// the feasibility bound num_steps*min_per_step <= total_classes <=
// num_steps*max_per_step must hold.
struct ScheduleSpec {
    ScheduleKind kind = ScheduleKind::equal;
    int total_classes = 0;
    int num_steps = 0;
    int min_per_step = 1;
    int max_per_step = 0;  // 0 means "no cap" (treated as total_classes)
    std::vector<int> explicit_counts;
    std::uint64_t seed = 0;

    int effective_max() const { return max_per_step > 0 ? max_per_step : total_classes; }

    bool operator==(const ScheduleSpec& o) const = default;
};

// A realized class-arrival schedule: per-step new-class counts plus the
// disjoint class-identity sets introduced at each step.
struct IncrementSchedule {
    std::vector<int> counts;
    std::vector<std::vector<int>> class_sets;  // sorted ids, one set per step

    int num_steps() const { return static_cast<int>(counts.size()); }
    int total() const;

    bool operator==(const IncrementSchedule& o) const = default;
};

enum class ScheduleViolation { none, free_flow, size_mismatch, non_repetition, coverage, sum_mismatch };

struct ScheduleValidation {
    ScheduleViolation violation = ScheduleViolation::none;
    std::string detail;

    bool ok() const { return violation == ScheduleViolation::none; }
};

std::string to_string(ScheduleViolation v);

// Builds a schedule of the requested kind. Counts are deterministic given
// (spec, seed); class identities come from a seeded global permutation of
// {0, ..., total_classes-1} sliced by the counts. Throws std::invalid_argument
// naming the violated bound when the spec is infeasible.
IncrementSchedule generate_schedule(const ScheduleSpec& spec);

// Checks the free-flow invariants: counts[t] >= 1, per-step set sizes match
// counts, pairwise-disjoint class sets covering {0, ..., N-1}, and
// sum(counts) == expected_total. The first violated constraint is reported.
ScheduleValidation validate_schedule(const IncrementSchedule& schedule, int expected_total);

// Line-oriented text form: a header line "steps <T> total <N>" followed by
// one line per step, "<step> <count> : <id> <id> ...".
std::string schedule_to_text(const IncrementSchedule& schedule);
IncrementSchedule schedule_from_text(const std::string& text);

}  // namespace ffcil
