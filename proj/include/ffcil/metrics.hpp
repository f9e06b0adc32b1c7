#pragma once

#include <string>
#include <vector>

#include "ffcil/core.hpp"
#include "ffcil/schedule.hpp"

namespace ffcil {

// Per-step evaluation outcome over the cumulative test set.
struct StepMetrics {
    int step = 0;                         // 1-based
    double accuracy = 0.0;                // A_t
    std::vector<double> per_task;         // a_{t,j} for tasks j = 1..t
    Matrix confusion;                     // classes-seen x classes-seen; rows are true labels
    std::vector<double> prediction_bias;  // predicted-label mass per step group, sums to 1
    double alignment_scale = 1.0;         // head rescale applied after this step
    double wall_ms = 0.0;

    bool operator==(const StepMetrics& o) const = default;
};

struct RunReport {
    std::string config_text;  // canonical serialized config; re-runnable standalone
    IncrementSchedule schedule;
    std::vector<StepMetrics> steps;
    double final_accuracy = 0.0;         // A_T, equals the last step's accuracy
    double forgetting = 0.0;             // max-over-history convention
    double forgetting_first_seen = 0.0;  // first-seen-minus-final variant
    double mean_step_accuracy = 0.0;     // mean of A_t; not part of headline summaries
    double total_wall_ms = 0.0;
};

enum class ForgettingVariant { max_over_history, first_seen };

// per_task_acc[t][j] is task j's accuracy after step t+1 (0-based rows of a
// lower-triangular matrix; row t has t+1 entries). For T steps returns
// (1/(T-1)) * sum_j [ ref_j - a_{T,j} ] over j < T-1, where ref_j is the best
// historical accuracy (or the first-seen accuracy for the simpler variant).
// Throws for T < 2.
double average_forgetting(const std::vector<std::vector<double>>& per_task_acc,
                          ForgettingVariant variant = ForgettingVariant::max_over_history);

// Fraction of all predictions landing in each schedule step's class group.
std::vector<double> prediction_bias(const Matrix& confusion, const IncrementSchedule& schedule);

double accuracy_from_confusion(const Matrix& confusion);

}  // namespace ffcil
