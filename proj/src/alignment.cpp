#include "ffcil/alignment.hpp"

#include <cmath>
#include <stdexcept>

namespace ffcil {

std::string to_string(AlignmentMode m) {
    switch (m) {
        case AlignmentMode::none: return "none";
        case AlignmentMode::wa: return "wa";
        case AlignmentMode::diwa: return "diwa";
    }
    return "none";
}

AlignmentMode alignment_mode_from_string(const std::string& s) {
    if (s == "none") return AlignmentMode::none;
    if (s == "wa") return AlignmentMode::wa;
    if (s == "diwa") return AlignmentMode::diwa;
    throw std::invalid_argument("unknown alignment mode '" + s + "'");
}

std::pair<double, double> row_norm_means(const Matrix& head_w, int old_classes, int new_classes) {
    if (old_classes < 1 || new_classes < 1)
        throw std::invalid_argument("alignment: both class groups must be non-empty");
    if (head_w.rows != old_classes + new_classes)
        throw std::invalid_argument("alignment: head has " + std::to_string(head_w.rows) +
                                    " rows, expected " + std::to_string(old_classes + new_classes));
    double mu_old = 0.0, mu_new = 0.0;
    for (int r = 0; r < old_classes; ++r)
        mu_old += l2_norm({head_w.row(r), static_cast<std::size_t>(head_w.cols)});
    for (int r = old_classes; r < head_w.rows; ++r)
        mu_new += l2_norm({head_w.row(r), static_cast<std::size_t>(head_w.cols)});
    return {mu_old / old_classes, mu_new / new_classes};
}

double wa_scale(double mu_old, double mu_new) {
    if (mu_new <= 0.0)
        throw std::invalid_argument(
            "alignment: mu_new is zero (all-zero new head rows); nothing to rescale");
    return mu_old / mu_new;
}

double diwa_eta(int new_classes, double eta_min, double tau) {
    if (new_classes < 1) throw std::invalid_argument("alignment: new_classes must be >= 1");
    if (eta_min < 0.0 || eta_min > 1.0)
        throw std::invalid_argument("alignment: eta_min must lie in [0, 1]");
    if (tau <= 0.0) throw std::invalid_argument("alignment: tau must be positive");
    if (new_classes == 1) return eta_min;  // exp(0) == 1 exactly
    return 1.0 - (1.0 - eta_min) * std::exp(-(static_cast<double>(new_classes) - 1.0) / tau);
}

double diwa_scale(double mu_old, double mu_new, double eta) {
    if (mu_new <= 0.0)
        throw std::invalid_argument(
            "alignment: mu_new is zero (all-zero new head rows); nothing to rescale");
    if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("alignment: eta must lie in [0, 1]");
    return (1.0 - eta) + eta * (mu_old / mu_new);
}

double apply_alignment(ClassifierModel& model, int old_classes, int new_classes,
                       const AlignmentConfig& config) {
    if (config.mode == AlignmentMode::none) return 1.0;
    const auto [mu_old, mu_new] = row_norm_means(model.head_w, old_classes, new_classes);
    const double gamma = config.mode == AlignmentMode::wa
                             ? wa_scale(mu_old, mu_new)
                             : diwa_scale(mu_old, mu_new,
                                          diwa_eta(new_classes, config.eta_min, config.tau));
    for (int r = old_classes; r < model.head_w.rows; ++r) {
        double* row = model.head_w.row(r);
        for (int j = 0; j < model.head_w.cols; ++j) row[j] *= gamma;
    }
    return gamma;
}

}  // namespace ffcil
