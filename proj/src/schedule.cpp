#include "ffcil/schedule.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ffcil/rng.hpp"

namespace ffcil {

namespace {

void check_spec(const ScheduleSpec& spec) {
    if (spec.num_steps < 1) throw std::invalid_argument("schedule: num_steps must be >= 1");
    if (spec.total_classes < 1) throw std::invalid_argument("schedule: total_classes must be >= 1");
    if (spec.min_per_step < 1)
        throw std::invalid_argument("schedule: min_per_step must be >= 1 (free-flow lower bound)");
    const int max = spec.effective_max();
    if (max < spec.min_per_step)
        throw std::invalid_argument("schedule: max_per_step must be >= min_per_step");
    if (spec.kind == ScheduleKind::explicit_counts) {
        if (spec.explicit_counts.empty())
            throw std::invalid_argument("schedule: explicit kind requires explicit_counts");
        if (static_cast<int>(spec.explicit_counts.size()) != spec.num_steps)
            throw std::invalid_argument("schedule: explicit_counts length must equal num_steps");
        long long sum = 0;
        for (int c : spec.explicit_counts) {
            if (c < spec.min_per_step || c > max)
                throw std::invalid_argument("schedule: explicit count " + std::to_string(c) +
                                            " outside [min_per_step, max_per_step]");
            sum += c;
        }
        if (sum != spec.total_classes)
            throw std::invalid_argument("schedule: explicit_counts sum " + std::to_string(sum) +
                                        " != total_classes " + std::to_string(spec.total_classes));
        return;
    }
    const long long lo = static_cast<long long>(spec.num_steps) * spec.min_per_step;
    const long long hi = static_cast<long long>(spec.num_steps) * max;
    if (spec.total_classes < lo)
        throw std::invalid_argument("schedule: total_classes " + std::to_string(spec.total_classes) +
                                    " < num_steps*min_per_step = " + std::to_string(lo));
    if (spec.total_classes > hi)
        throw std::invalid_argument("schedule: total_classes " + std::to_string(spec.total_classes) +
                                    " > num_steps*max_per_step = " + std::to_string(hi));
}

std::vector<int> equal_counts(int total, int steps) {
    std::vector<int> counts(steps, total / steps);
    const int remainder = total % steps;
    for (int t = 0; t < remainder; ++t) counts[t] += 1;  // remainder to the earliest steps
    return counts;
}

// Non-decreasing counts: an arithmetic base with the steepest slope in
// {2, 1, 0} that fits the bounds, then the leftover total is absorbed by
// repeatedly raising the smallest raisable step. Reproduces the canonical
// progressions 1-3-5-7 (16/4) and, reversed, 15-13-12-11 (51/4).
std::vector<int> ascending_counts(int total, int steps, int min_c, int max_c) {
    std::vector<int> counts;
    for (int slope : {2, 1, 0}) {
        const long long slope_sum = static_cast<long long>(slope) * steps * (steps - 1) / 2;
        const long long start = (static_cast<long long>(total) - slope_sum) / steps;  // floor for slope_sum <= total
        if (static_cast<long long>(total) < slope_sum) continue;
        if (start < min_c) continue;
        if (start + static_cast<long long>(slope) * (steps - 1) > max_c) continue;
        counts.assign(steps, 0);
        for (int t = 0; t < steps; ++t) counts[t] = static_cast<int>(start) + slope * t;
        break;
    }
    // slope 0 always qualifies given the feasibility bounds
    long long deficit = total - std::accumulate(counts.begin(), counts.end(), 0LL);
    while (deficit > 0) {
        int pick = -1;
        for (int t = 0; t < steps; ++t) {
            const int cap = std::min(max_c, t + 1 < steps ? counts[t + 1] : max_c);
            if (counts[t] + 1 <= cap) {
                pick = t;
                break;
            }
        }
        if (pick < 0) throw std::logic_error("schedule: ascending repair failed");
        counts[pick] += 1;
        --deficit;
    }
    return counts;
}

bool has_required_fluctuation(const std::vector<int>& counts, int gap) {
    if (counts.size() < 2 || gap <= 0) return true;
    for (std::size_t t = 0; t + 1 < counts.size(); ++t)
        if (std::abs(counts[t] - counts[t + 1]) >= gap) return true;
    return false;
}

std::vector<int> fluctuating_counts(const ScheduleSpec& spec, Rng& rng) {
    const int steps = spec.num_steps;
    const int min_c = spec.min_per_step;
    const int max_c = spec.effective_max();
    const int gap = (max_c - min_c + 1) / 2;  // ceil((max - min) / 2)

    std::vector<int> counts(steps);
    for (int attempt = 0; attempt < 256; ++attempt) {
        long long sum = 0;
        for (int t = 0; t < steps; ++t) {
            counts[t] = static_cast<int>(rng.uniform_int(min_c, max_c));
            sum += counts[t];
        }
        // repair the sum by +-1 adjustments on random positions
        while (sum != spec.total_classes) {
            const int p = static_cast<int>(rng.uniform_int(0, steps - 1));
            if (sum < spec.total_classes && counts[p] < max_c) {
                ++counts[p];
                ++sum;
            } else if (sum > spec.total_classes && counts[p] > min_c) {
                --counts[p];
                --sum;
            }
        }
        if (has_required_fluctuation(counts, gap)) return counts;
    }

    // Deterministic fallback: pin an adjacent pair with the required gap at
    // the front and spread the remainder over the tail.
    for (int a = min_c; a <= max_c; ++a) {
        for (int b : {a + gap, a - gap}) {
            if (b < min_c || b > max_c) continue;
            const long long rest = static_cast<long long>(spec.total_classes) - a - b;
            const long long tail = steps - 2;
            if (tail < 0) continue;
            if (rest < tail * min_c || rest > tail * max_c) continue;
            counts.assign(steps, min_c);
            counts[0] = a;
            counts[1] = b;
            long long deficit = rest - tail * min_c;
            for (int t = 2; t < steps && deficit > 0; ++t) {
                const long long add = std::min<long long>(deficit, max_c - min_c);
                counts[t] += static_cast<int>(add);
                deficit -= add;
            }
            return counts;
        }
    }
    throw std::invalid_argument(
        "schedule: fluctuating kind infeasible; sum bounds leave no room for an adjacent "
        "difference of ceil((max_per_step - min_per_step)/2)");
}

std::vector<int> extreme_counts(const ScheduleSpec& spec, Rng& rng) {
    const int steps = spec.num_steps;
    std::vector<int> counts(steps, 0);
    long long tail = 0;
    for (int t = 1; t < steps; ++t) {
        counts[t] = static_cast<int>(rng.uniform_int(1, 2));
        tail += counts[t];
    }
    long long head = spec.total_classes - tail;
    for (int t = steps - 1; t >= 1 && head < 1; --t) {
        if (counts[t] == 2) {
            counts[t] = 1;
            ++head;
        }
    }
    if (head < 1)
        throw std::invalid_argument("schedule: extreme kind needs total_classes >= num_steps");
    counts[0] = static_cast<int>(head);
    return counts;
}

}  // namespace

int IncrementSchedule::total() const {
    return static_cast<int>(std::accumulate(counts.begin(), counts.end(), 0LL));
}

std::string to_string(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::equal: return "equal";
        case ScheduleKind::ascending: return "ascending";
        case ScheduleKind::descending: return "descending";
        case ScheduleKind::fluctuating: return "fluctuating";
        case ScheduleKind::extreme: return "extreme";
        case ScheduleKind::explicit_counts: return "explicit";
    }
    return "equal";
}

ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "equal") return ScheduleKind::equal;
    if (s == "ascending") return ScheduleKind::ascending;
    if (s == "descending") return ScheduleKind::descending;
    if (s == "fluctuating") return ScheduleKind::fluctuating;
    if (s == "extreme") return ScheduleKind::extreme;
    if (s == "explicit") return ScheduleKind::explicit_counts;
    throw std::invalid_argument("unknown schedule kind '" + s + "'");
}

std::string to_string(ScheduleViolation v) {
    switch (v) {
        case ScheduleViolation::none: return "none";
        case ScheduleViolation::free_flow: return "free-flow";
        case ScheduleViolation::size_mismatch: return "size-mismatch";
        case ScheduleViolation::non_repetition: return "non-repetition";
        case ScheduleViolation::coverage: return "coverage";
        case ScheduleViolation::sum_mismatch: return "sum-mismatch";
    }
    return "none";
}

IncrementSchedule generate_schedule(const ScheduleSpec& spec) {
    check_spec(spec);
    Rng count_rng(derive_seed(spec.seed, streams::kScheduleCounts));

    IncrementSchedule out;
    switch (spec.kind) {
        case ScheduleKind::equal:
            out.counts = equal_counts(spec.total_classes, spec.num_steps);
            break;
        case ScheduleKind::ascending:
            out.counts = ascending_counts(spec.total_classes, spec.num_steps, spec.min_per_step,
                                          spec.effective_max());
            break;
        case ScheduleKind::descending:
            out.counts = ascending_counts(spec.total_classes, spec.num_steps, spec.min_per_step,
                                          spec.effective_max());
            std::reverse(out.counts.begin(), out.counts.end());
            break;
        case ScheduleKind::fluctuating:
            out.counts = fluctuating_counts(spec, count_rng);
            break;
        case ScheduleKind::extreme:
            out.counts = extreme_counts(spec, count_rng);
            break;
        case ScheduleKind::explicit_counts:
            out.counts = spec.explicit_counts;
            break;
    }

    std::vector<int> permutation(spec.total_classes);
    std::iota(permutation.begin(), permutation.end(), 0);
    Rng perm_rng(derive_seed(spec.seed, streams::kSchedulePermutation));
    perm_rng.shuffle(permutation);

    std::size_t pos = 0;
    out.class_sets.reserve(out.counts.size());
    for (int count : out.counts) {
        std::vector<int> ids(permutation.begin() + pos, permutation.begin() + pos + count);
        std::sort(ids.begin(), ids.end());
        out.class_sets.push_back(std::move(ids));
        pos += static_cast<std::size_t>(count);
    }
    return out;
}

ScheduleValidation validate_schedule(const IncrementSchedule& schedule, int expected_total) {
    const int steps = schedule.num_steps();
    for (int t = 0; t < steps; ++t) {
        if (schedule.counts[t] < 1)
            return {ScheduleViolation::free_flow,
                    "step " + std::to_string(t) + " has count " + std::to_string(schedule.counts[t]) +
                        " < 1"};
    }
    if (static_cast<int>(schedule.class_sets.size()) != steps)
        return {ScheduleViolation::size_mismatch, "class_sets length != counts length"};
    for (int t = 0; t < steps; ++t) {
        if (static_cast<int>(schedule.class_sets[t].size()) != schedule.counts[t])
            return {ScheduleViolation::size_mismatch,
                    "step " + std::to_string(t) + " set size != counts[" + std::to_string(t) + "]"};
    }

    const long long total = schedule.total();
    std::vector<int> seen_at(static_cast<std::size_t>(std::max<long long>(total, 1)), -1);
    for (int t = 0; t < steps; ++t) {
        for (int id : schedule.class_sets[t]) {
            if (id >= 0 && id < static_cast<int>(seen_at.size()) && seen_at[id] >= 0)
                return {ScheduleViolation::non_repetition,
                        "class " + std::to_string(id) + " appears in steps " +
                            std::to_string(seen_at[id]) + " and " + std::to_string(t)};
            if (id < 0 || id >= total)
                return {ScheduleViolation::coverage,
                        "class id " + std::to_string(id) + " outside [0, " + std::to_string(total) + ")"};
            seen_at[id] = t;
        }
    }
    for (long long id = 0; id < total; ++id) {
        if (seen_at[id] < 0)
            return {ScheduleViolation::coverage, "class " + std::to_string(id) + " never introduced"};
    }
    if (total != expected_total)
        return {ScheduleViolation::sum_mismatch, "sum(counts) = " + std::to_string(total) +
                                                     " != expected " + std::to_string(expected_total)};
    return {};
}

std::string schedule_to_text(const IncrementSchedule& schedule) {
    std::ostringstream os;
    os << "steps " << schedule.num_steps() << " total " << schedule.total() << "\n";
    for (int t = 0; t < schedule.num_steps(); ++t) {
        os << (t + 1) << " " << schedule.counts[t] << " :";
        for (int id : schedule.class_sets[t]) os << " " << id;
        os << "\n";
    }
    return os.str();
}

IncrementSchedule schedule_from_text(const std::string& text) {
    std::istringstream is(text);
    std::string word;
    int steps = 0, total = 0;
    if (!(is >> word) || word != "steps" || !(is >> steps) || !(is >> word) || word != "total" ||
        !(is >> total))
        throw std::invalid_argument("schedule text: bad header, expected 'steps <T> total <N>'");
    IncrementSchedule schedule;
    schedule.counts.resize(steps);
    schedule.class_sets.resize(steps);
    for (int t = 0; t < steps; ++t) {
        int index = 0, count = 0;
        if (!(is >> index >> count >> word) || word != ":" || index != t + 1)
            throw std::invalid_argument("schedule text: bad step line " + std::to_string(t + 1));
        schedule.counts[t] = count;
        schedule.class_sets[t].resize(count);
        for (int i = 0; i < count; ++i) {
            if (!(is >> schedule.class_sets[t][i]))
                throw std::invalid_argument("schedule text: truncated id list on step " +
                                            std::to_string(t + 1));
        }
    }
    return schedule;
}

}  // namespace ffcil
