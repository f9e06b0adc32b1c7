#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "ffcil/schedule.hpp"

using namespace ffcil;

namespace {

ScheduleSpec spec_of(ScheduleKind kind, int total, int steps, std::uint64_t seed = 1, int min_c = 1,
                     int max_c = 0) {
    ScheduleSpec spec;
    spec.kind = kind;
    spec.total_classes = total;
    spec.num_steps = steps;
    spec.min_per_step = min_c;
    spec.max_per_step = max_c;
    spec.seed = seed;
    return spec;
}

}  // namespace

TEST_SUITE("schedule") {

TEST_CASE("ascending 16 over 4 steps is 1-3-5-7") {
    const auto schedule = generate_schedule(spec_of(ScheduleKind::ascending, 16, 4));
    CHECK(schedule.counts == std::vector<int>{1, 3, 5, 7});
}

TEST_CASE("descending 51 over 4 steps is 15-13-12-11") {
    const auto schedule = generate_schedule(spec_of(ScheduleKind::descending, 51, 4));
    CHECK(schedule.counts == std::vector<int>{15, 13, 12, 11});
}

TEST_CASE("equal 10 over 10 steps is all ones") {
    const auto schedule = generate_schedule(spec_of(ScheduleKind::equal, 10, 10));
    CHECK(schedule.counts == std::vector<int>(10, 1));
}

TEST_CASE("equal remainder goes to the earliest steps") {
    const auto schedule = generate_schedule(spec_of(ScheduleKind::equal, 51, 4));
    CHECK(schedule.counts == std::vector<int>{13, 13, 13, 12});
}

TEST_CASE("extreme head step takes everything the 1-2 tail leaves") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto schedule =
            generate_schedule(spec_of(ScheduleKind::extreme, 100, 7, seed, 1, 25));
        CHECK(schedule.counts[0] >= 88);
        CHECK(schedule.counts[0] <= 94);
        for (int t = 1; t < 7; ++t) {
            CHECK(schedule.counts[t] >= 1);
            CHECK(schedule.counts[t] <= 2);
        }
        CHECK(schedule.total() == 100);
    }
}

TEST_CASE("explicit counts pass through") {
    auto spec = spec_of(ScheduleKind::explicit_counts, 20, 4, 1, 1, 10);
    spec.explicit_counts = {10, 2, 7, 1};
    const auto schedule = generate_schedule(spec);
    CHECK(schedule.counts == std::vector<int>{10, 2, 7, 1});
    CHECK(validate_schedule(schedule, 20).ok());
}

TEST_CASE("validate accepts a constructed valid schedule") {
    const auto schedule = generate_schedule(spec_of(ScheduleKind::ascending, 16, 4));
    const auto result = validate_schedule(schedule, 16);
    CHECK(result.ok());
    CHECK(result.violation == ScheduleViolation::none);
}

TEST_CASE("validate rejects a repeated class as non-repetition") {
    IncrementSchedule schedule;
    schedule.counts = {2, 2};
    schedule.class_sets = {{0, 4}, {1, 4}};  // label 4 appears twice
    const auto result = validate_schedule(schedule, 4);
    CHECK_FALSE(result.ok());
    CHECK(result.violation == ScheduleViolation::non_repetition);
}

TEST_CASE("validate rejects a zero count as free-flow") {
    IncrementSchedule schedule;
    schedule.counts = {2, 0, 2};
    schedule.class_sets = {{0, 1}, {}, {2, 3}};
    const auto result = validate_schedule(schedule, 4);
    CHECK_FALSE(result.ok());
    CHECK(result.violation == ScheduleViolation::free_flow);
}

TEST_CASE("validate rejects a coverage gap") {
    IncrementSchedule schedule;
    schedule.counts = {2, 2};
    schedule.class_sets = {{0, 1}, {2, 5}};  // 5 outside {0..3}, 3 missing
    CHECK(validate_schedule(schedule, 4).violation == ScheduleViolation::coverage);
}

TEST_CASE("validate rejects a total mismatch") {
    const auto schedule = generate_schedule(spec_of(ScheduleKind::equal, 10, 2));
    CHECK(validate_schedule(schedule, 12).violation == ScheduleViolation::sum_mismatch);
}

TEST_CASE("infeasible specs raise errors naming the bound") {
    CHECK_THROWS_WITH_AS(generate_schedule(spec_of(ScheduleKind::equal, 3, 4)),
                         doctest::Contains("num_steps*min_per_step"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(generate_schedule(spec_of(ScheduleKind::equal, 30, 4, 1, 1, 5)),
                         doctest::Contains("num_steps*max_per_step"), std::invalid_argument);
    auto bad_explicit = spec_of(ScheduleKind::explicit_counts, 16, 4);
    bad_explicit.explicit_counts = {1, 3, 5, 6};
    CHECK_THROWS_WITH_AS(generate_schedule(bad_explicit), doctest::Contains("sum"),
                         std::invalid_argument);
}

TEST_CASE("every generated schedule validates, for every kind") {
    const ScheduleKind kinds[] = {ScheduleKind::equal, ScheduleKind::ascending,
                                  ScheduleKind::descending, ScheduleKind::fluctuating,
                                  ScheduleKind::extreme};
    for (ScheduleKind kind : kinds) {
        for (std::uint64_t seed = 0; seed < 25; ++seed) {
            const int total = 10 + static_cast<int>(seed % 41);
            const int steps = 2 + static_cast<int>(seed % 5);
            const auto schedule = generate_schedule(spec_of(kind, total, steps, seed));
            const auto result = validate_schedule(schedule, total);
            INFO(to_string(kind), " total=", total, " steps=", steps, ": ", result.detail);
            CHECK(result.ok());
        }
    }
}

TEST_CASE("same spec and seed give a bit-identical schedule") {
    const auto spec = spec_of(ScheduleKind::fluctuating, 30, 5, 99, 1, 12);
    CHECK(generate_schedule(spec) == generate_schedule(spec));
}

TEST_CASE("fluctuating counts differ across seeds") {
    std::set<std::vector<int>> distinct;
    for (std::uint64_t seed = 0; seed < 100; ++seed)
        distinct.insert(generate_schedule(spec_of(ScheduleKind::fluctuating, 40, 5, seed, 1, 15)).counts);
    CHECK(distinct.size() >= 95);
}

TEST_CASE("fluctuating has one adjacent pair differing by at least half the range") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const int min_c = 1, max_c = 12;
        const auto counts =
            generate_schedule(spec_of(ScheduleKind::fluctuating, 30, 5, seed, min_c, max_c)).counts;
        const int gap = (max_c - min_c + 1) / 2;
        bool found = false;
        for (std::size_t t = 0; t + 1 < counts.size(); ++t)
            if (std::abs(counts[t] - counts[t + 1]) >= gap) found = true;
        CHECK(found);
    }
}

TEST_CASE("monotone kinds are monotone and all kinds hit the total") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const int total = 12 + static_cast<int>(seed);
        const auto up = generate_schedule(spec_of(ScheduleKind::ascending, total, 4, seed)).counts;
        const auto down = generate_schedule(spec_of(ScheduleKind::descending, total, 4, seed)).counts;
        CHECK(std::is_sorted(up.begin(), up.end()));
        CHECK(std::is_sorted(down.rbegin(), down.rend()));
        CHECK(std::accumulate(up.begin(), up.end(), 0) == total);
        CHECK(std::accumulate(down.begin(), down.end(), 0) == total);
    }
}

TEST_CASE("schedule text round-trips") {
    const auto schedule = generate_schedule(spec_of(ScheduleKind::fluctuating, 20, 4, 5, 1, 10));
    CHECK(schedule_from_text(schedule_to_text(schedule)) == schedule);
}

}  // TEST_SUITE
