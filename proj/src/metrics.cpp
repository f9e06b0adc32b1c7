#include "ffcil/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace ffcil {

double average_forgetting(const std::vector<std::vector<double>>& per_task_acc,
                          ForgettingVariant variant) {
    const int steps = static_cast<int>(per_task_acc.size());
    if (steps < 2)
        throw std::invalid_argument("forgetting: needs at least 2 steps, got " +
                                    std::to_string(steps));
    for (int t = 0; t < steps; ++t)
        if (static_cast<int>(per_task_acc[t].size()) != t + 1)
            throw std::invalid_argument("forgetting: row " + std::to_string(t) +
                                        " must have " + std::to_string(t + 1) + " entries");

    double total = 0.0;
    for (int task = 0; task < steps - 1; ++task) {
        double reference = per_task_acc[task][task];
        if (variant == ForgettingVariant::max_over_history)
            for (int t = task; t < steps - 1; ++t)
                reference = std::max(reference, per_task_acc[t][task]);
        total += reference - per_task_acc[steps - 1][task];
    }
    return total / (steps - 1);
}

std::vector<double> prediction_bias(const Matrix& confusion, const IncrementSchedule& schedule) {
    if (confusion.rows != confusion.cols)
        throw std::invalid_argument("prediction_bias: confusion matrix must be square");
    if (schedule.total() != confusion.cols)
        throw std::invalid_argument("prediction_bias: schedule covers " +
                                    std::to_string(schedule.total()) + " classes, confusion has " +
                                    std::to_string(confusion.cols));

    Vector column_mass(confusion.cols, 0.0);
    double total = 0.0;
    for (int r = 0; r < confusion.rows; ++r) {
        for (int c = 0; c < confusion.cols; ++c) {
            column_mass[c] += confusion(r, c);
            total += confusion(r, c);
        }
    }
    std::vector<double> out(schedule.num_steps(), 0.0);
    if (total == 0.0) return out;
    for (int t = 0; t < schedule.num_steps(); ++t)
        for (int id : schedule.class_sets[t]) out[t] += column_mass[id] / total;
    return out;
}

double accuracy_from_confusion(const Matrix& confusion) {
    double correct = 0.0, total = 0.0;
    for (int r = 0; r < confusion.rows; ++r) {
        for (int c = 0; c < confusion.cols; ++c) {
            total += confusion(r, c);
            if (r == c) correct += confusion(r, c);
        }
    }
    return total == 0.0 ? 0.0 : correct / total;
}

}  // namespace ffcil
