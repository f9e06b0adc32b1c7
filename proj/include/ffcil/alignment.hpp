#pragma once

#include <string>
#include <utility>

#include "ffcil/core.hpp"
#include "ffcil/model.hpp"

namespace ffcil {

enum class AlignmentMode { none, wa, diwa };

std::string to_string(AlignmentMode m);
AlignmentMode alignment_mode_from_string(const std::string& s);

struct AlignmentConfig {
    AlignmentMode mode = AlignmentMode::none;
    double eta_min = 0.2;  // baseline intervention strength, in [0, 1]
    double tau = 5.0;      // saturation temperature, > 0

    bool operator==(const AlignmentConfig& o) const = default;
};

// Mean l2 row norms of the head over old rows (first K) and new rows (last
// C_t). Both groups must be non-empty.
std::pair<double, double> row_norm_means(const Matrix& head_w, int old_classes, int new_classes);

// gamma = mu_old / mu_new; errors on a degenerate all-zero new head.
double wa_scale(double mu_old, double mu_new);

// eta = 1 - (1 - eta_min) * exp(-(C_t - 1) / tau). C_t == 1 returns eta_min
// itself so the boundary identity is exact in floating point.
double diwa_eta(int new_classes, double eta_min, double tau);

// gamma = (1 - eta) + eta * mu_old / mu_new.
double diwa_scale(double mu_old, double mu_new, double eta);

// Scales the last new_classes head rows in place by the mode's factor.
// Biases, old rows and hidden parameters are never touched. Returns the
// applied scale (1.0 for mode none).
double apply_alignment(ClassifierModel& model, int old_classes, int new_classes,
                       const AlignmentConfig& config);

}  // namespace ffcil
