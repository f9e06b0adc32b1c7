#include "ffcil/losses.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace ffcil {

std::string to_string(MainLoss m) { return m == MainLoss::instance_mean ? "instance_mean" : "cwm"; }

std::string to_string(KdMode m) {
    switch (m) {
        case KdMode::off: return "off";
        case KdMode::vanilla: return "vanilla";
        case KdMode::replay_only: return "replay_only";
        case KdMode::cwm_no_replay: return "cwm_no_replay";
    }
    return "off";
}

std::string to_string(AuxMode m) {
    switch (m) {
        case AuxMode::off: return "off";
        case AuxMode::instance_mean: return "instance_mean";
        case AuxMode::cwm: return "cwm";
    }
    return "off";
}

MainLoss main_loss_from_string(const std::string& s) {
    if (s == "instance_mean") return MainLoss::instance_mean;
    if (s == "cwm") return MainLoss::cwm;
    throw std::invalid_argument("unknown main loss '" + s + "'");
}

KdMode kd_mode_from_string(const std::string& s) {
    if (s == "off") return KdMode::off;
    if (s == "vanilla") return KdMode::vanilla;
    if (s == "replay_only") return KdMode::replay_only;
    if (s == "cwm_no_replay") return KdMode::cwm_no_replay;
    throw std::invalid_argument("unknown kd mode '" + s + "'");
}

AuxMode aux_mode_from_string(const std::string& s) {
    if (s == "off") return AuxMode::off;
    if (s == "instance_mean") return AuxMode::instance_mean;
    if (s == "cwm") return AuxMode::cwm;
    throw std::invalid_argument("unknown aux mode '" + s + "'");
}

int BatchView::old_count() const {
    int n = 0;
    for (int y : labels)
        if (y < old_classes) ++n;
    return n;
}

Vector ce_per_sample(const Matrix& logits, const std::vector<int>& labels) {
    const int batch = logits.rows;
    if (static_cast<int>(labels.size()) != batch)
        throw std::invalid_argument("loss: labels/logits batch size mismatch");
    Vector out(batch);
    Vector probs(logits.cols);
    for (int i = 0; i < batch; ++i) {
        if (labels[i] < 0 || labels[i] >= logits.cols)
            throw std::invalid_argument("loss: label " + std::to_string(labels[i]) +
                                        " outside logit width " + std::to_string(logits.cols));
        stable_softmax({logits.row(i), static_cast<std::size_t>(logits.cols)}, probs);
        out[i] = -std::log(probs[labels[i]]);
    }
    return out;
}

Vector kd_per_sample(const Matrix& logits, const Matrix& teacher_probs, double temperature,
                     bool renormalize) {
    if (teacher_probs.empty()) throw std::invalid_argument("kd: teacher probabilities missing");
    if (temperature <= 0.0) throw std::invalid_argument("kd: temperature must be positive");
    const int batch = logits.rows;
    const int old_k = teacher_probs.cols;
    if (teacher_probs.rows != batch)
        throw std::invalid_argument("kd: teacher/student batch size mismatch");
    if (old_k < 1 || old_k > logits.cols)
        throw std::invalid_argument("kd: teacher class count outside student head");

    const int support = renormalize ? old_k : logits.cols;
    Vector tempered(support), q(support);
    Vector out(batch);
    for (int i = 0; i < batch; ++i) {
        for (int c = 0; c < support; ++c) tempered[c] = logits(i, c) / temperature;
        stable_softmax(tempered, q);
        double h = 0.0;
        for (int c = 0; c < old_k; ++c) h -= teacher_probs(i, c) * std::log(q[c]);
        out[i] = h;
    }
    return out;
}

std::vector<int> step_relative_labels(const std::vector<int>& labels, int old_classes) {
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        out[i] = labels[i] < old_classes ? 0 : labels[i] - old_classes + 1;
    return out;
}

namespace {

std::map<int, int> class_counts(const std::vector<int>& labels) {
    std::map<int, int> counts;
    for (int y : labels) ++counts[y];
    return counts;
}

}  // namespace

AggregatedLoss aggregate_instance_mean(const Vector& terms) {
    if (terms.empty()) throw std::invalid_argument("aggregate: empty batch");
    const double batch = static_cast<double>(terms.size());
    AggregatedLoss out;
    out.per_sample_weights.assign(terms.size(), 1.0 / batch);
    double sum = 0.0;
    for (double t : terms) sum += t;
    out.value = sum / batch;
    return out;
}

AggregatedLoss aggregate_classwise_decomposed(const Vector& terms, const std::vector<int>& labels) {
    if (terms.empty()) throw std::invalid_argument("aggregate: empty batch");
    if (terms.size() != labels.size())
        throw std::invalid_argument("aggregate: terms/labels size mismatch");
    const double batch = static_cast<double>(terms.size());
    const auto counts = class_counts(labels);

    AggregatedLoss out;
    out.per_sample_weights.assign(terms.size(), 1.0 / batch);
    for (const auto& [cls, n] : counts) {
        double class_sum = 0.0;
        for (std::size_t i = 0; i < terms.size(); ++i)
            if (labels[i] == cls) class_sum += terms[i];
        out.value += (n / batch) * (class_sum / n);
    }
    return out;
}

AggregatedLoss aggregate_cwm(const Vector& terms, const std::vector<int>& labels) {
    if (terms.empty()) throw std::invalid_argument("aggregate: empty batch");
    if (terms.size() != labels.size())
        throw std::invalid_argument("aggregate: terms/labels size mismatch");
    const auto counts = class_counts(labels);
    const double num_classes = static_cast<double>(counts.size());

    AggregatedLoss out;
    out.per_sample_weights.resize(terms.size());
    for (std::size_t i = 0; i < terms.size(); ++i)
        out.per_sample_weights[i] = 1.0 / (num_classes * counts.at(labels[i]));
    for (const auto& [cls, n] : counts) {
        double class_sum = 0.0;
        for (std::size_t i = 0; i < terms.size(); ++i)
            if (labels[i] == cls) class_sum += terms[i];
        out.value += class_sum / n;
    }
    out.value /= num_classes;
    return out;
}

AggregatedLoss instance_mean_ce(const BatchView& view) {
    return aggregate_instance_mean(ce_per_sample(view.logits, view.labels));
}

AggregatedLoss classwise_decomposed_ce(const BatchView& view) {
    return aggregate_classwise_decomposed(ce_per_sample(view.logits, view.labels), view.labels);
}

AggregatedLoss cwm_ce(const BatchView& view) {
    return aggregate_cwm(ce_per_sample(view.logits, view.labels), view.labels);
}

AggregatedLoss vanilla_kd(const BatchView& view, double temperature, bool renormalize) {
    return aggregate_instance_mean(
        kd_per_sample(view.logits, view.teacher_probs, temperature, renormalize));
}

AggregatedLoss replay_only_kd(const BatchView& view, double temperature, bool renormalize) {
    const Vector terms = kd_per_sample(view.logits, view.teacher_probs, temperature, renormalize);
    const int batch = view.batch_size();

    std::map<int, int> old_counts;
    for (int y : view.labels)
        if (y < view.old_classes) ++old_counts[y];

    AggregatedLoss out;
    out.per_sample_weights.assign(terms.size(), 0.0);
    if (old_counts.empty()) return out;  // no replayed samples: loss is exactly 0

    int old_total = 0;
    for (const auto& [cls, n] : old_counts) old_total += n;
    const double replay_fraction = static_cast<double>(old_total) / batch;
    const double num_old_classes = static_cast<double>(old_counts.size());

    for (std::size_t i = 0; i < terms.size(); ++i) {
        const int y = view.labels[i];
        if (y >= view.old_classes) continue;
        out.per_sample_weights[i] = replay_fraction / (num_old_classes * old_counts.at(y));
        out.value += out.per_sample_weights[i] * terms[i];
    }
    return out;
}

AggregatedLoss cwm_kd(const BatchView& view, double temperature, bool renormalize) {
    return aggregate_cwm(kd_per_sample(view.logits, view.teacher_probs, temperature, renormalize),
                         view.labels);
}

AggregatedLoss aux_ce(const BatchView& view) {
    if (view.aux_logits.empty()) throw std::invalid_argument("aux: auxiliary logits missing");
    const auto relative = step_relative_labels(view.labels, view.old_classes);
    return aggregate_instance_mean(ce_per_sample(view.aux_logits, relative));
}

AggregatedLoss cwm_aux_ce(const BatchView& view) {
    if (view.aux_logits.empty()) throw std::invalid_argument("aux: auxiliary logits missing");
    const auto relative = step_relative_labels(view.labels, view.old_classes);
    return aggregate_cwm(ce_per_sample(view.aux_logits, relative), relative);
}

double normalize_infonce(double raw, int n_eff) {
    if (n_eff < 2)
        throw std::invalid_argument("normalize_infonce: n_eff must be >= 2, got " +
                                    std::to_string(n_eff));
    return raw / std::log(static_cast<double>(n_eff));
}

double normalize_kl(double raw, int c_t) {
    if (c_t < 1)
        throw std::invalid_argument("normalize_kl: c_t must be >= 1, got " + std::to_string(c_t));
    return raw / static_cast<double>(c_t);
}

double combine_weighted(std::span<const std::pair<double, double>> terms) {
    double total = 0.0;
    for (const auto& [value, coeff] : terms) total += coeff * value;
    return total;
}

}  // namespace ffcil
