#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ffcil/core.hpp"

namespace ffcil {

enum class MainLoss { instance_mean, cwm };
enum class KdMode { off, vanilla, replay_only, cwm_no_replay };
enum class AuxMode { off, instance_mean, cwm };

std::string to_string(MainLoss m);
std::string to_string(KdMode m);
std::string to_string(AuxMode m);
MainLoss main_loss_from_string(const std::string& s);
KdMode kd_mode_from_string(const std::string& s);
AuxMode aux_mode_from_string(const std::string& s);

// Everything the aggregation objectives need to know about one mini-batch.
// Per-class counts, old/new partitions and step-relative labels are all
// derived from these fields.
struct BatchView {
    Matrix logits;            // B x C student logits
    std::vector<int> labels;  // absolute labels y_i
    int old_classes = 0;      // K: classes the teacher knows
    int step_classes = 0;     // |C_t|: classes introduced this step
    Matrix teacher_probs;     // B x K tempered teacher soft targets; empty without a teacher
    Matrix aux_logits;        // B x (step_classes + 1); empty without an aux head

    int batch_size() const { return static_cast<int>(labels.size()); }
    int old_count() const;  // B_old = |{i : y_i < K}|
};

// Value plus the per-sample weights that realize it, so that
// value == sum_i weights[i] * term_i for the relevant per-sample term. The
// weights are what the backward pass consumes; every objective here is a
// weighted sum of per-sample terms.
struct AggregatedLoss {
    double value = 0.0;
    Vector per_sample_weights;
};

// --- per-sample terms ---

// -log softmax(logits_i)[y_i], max-subtracted.
Vector ce_per_sample(const Matrix& logits, const std::vector<int>& labels);

// Tempered distillation cross-entropy -sum_{c<K} p_i(c) log q_i(c) where the
// student distribution q is softmax(logits/T) renormalized over the first K
// logits (default), or sliced from the full softmax when renormalize is false.
Vector kd_per_sample(const Matrix& logits, const Matrix& teacher_probs, double temperature,
                     bool renormalize = true);

// 0 for old-class samples (y < K), y - K + 1 otherwise.
std::vector<int> step_relative_labels(const std::vector<int>& labels, int old_classes);

// --- aggregators: per-sample terms -> value + weights ---

AggregatedLoss aggregate_instance_mean(const Vector& terms);
// Same value as the instance mean, computed by the class-decomposed route:
// sum over classes of (n_c / B) times the class mean.
AggregatedLoss aggregate_classwise_decomposed(const Vector& terms, const std::vector<int>& labels);
// Uniform average of per-class means; removes the implicit n_c / B prior.
AggregatedLoss aggregate_cwm(const Vector& terms, const std::vector<int>& labels);

// --- objectives over a batch view ---

AggregatedLoss instance_mean_ce(const BatchView& view);
AggregatedLoss classwise_decomposed_ce(const BatchView& view);
AggregatedLoss cwm_ce(const BatchView& view);

AggregatedLoss vanilla_kd(const BatchView& view, double temperature, bool renormalize = true);
// Distillation restricted to old-class samples, class-wise averaged and
// calibrated by the replay fraction B_old / B; exactly zero (value and every
// weight) when the batch has no old-class samples.
AggregatedLoss replay_only_kd(const BatchView& view, double temperature, bool renormalize = true);
AggregatedLoss cwm_kd(const BatchView& view, double temperature, bool renormalize = true);

AggregatedLoss aux_ce(const BatchView& view);
AggregatedLoss cwm_aux_ce(const BatchView& view);

// --- scale normalizers and the weighted combiner ---

double normalize_infonce(double raw, int n_eff);  // raw / ln(n_eff), n_eff >= 2
double normalize_kl(double raw, int c_t);         // raw / c_t, c_t >= 1
double combine_weighted(std::span<const std::pair<double, double>> terms);  // sum of value * coeff

}  // namespace ffcil
