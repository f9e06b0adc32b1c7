#include "ffcil/trainer.hpp"

#include <chrono>
#include <optional>
#include <stdexcept>

namespace ffcil {

std::string to_string(PresetName p) {
    switch (p) {
        case PresetName::replay: return "replay";
        case PresetName::kd_replay: return "kd_replay";
        case PresetName::wa_kd: return "wa_kd";
        case PresetName::aux_expand: return "aux_expand";
    }
    return "replay";
}

PresetName preset_name_from_string(const std::string& s) {
    if (s == "replay") return PresetName::replay;
    if (s == "kd_replay") return PresetName::kd_replay;
    if (s == "wa_kd") return PresetName::wa_kd;
    if (s == "aux_expand") return PresetName::aux_expand;
    throw std::invalid_argument("unknown preset '" + s + "'");
}

MethodPreset make_preset(PresetName name) {
    MethodPreset preset;
    preset.name = name;
    switch (name) {
        case PresetName::replay: break;
        case PresetName::kd_replay:
            preset.kd = KdMode::vanilla;
            break;
        case PresetName::wa_kd:
            preset.kd = KdMode::vanilla;
            preset.alignment.mode = AlignmentMode::wa;
            break;
        case PresetName::aux_expand:
            preset.aux = AuxMode::instance_mean;
            break;
    }
    return preset;
}

MethodPreset ours_variant(MethodPreset preset) {
    preset.main_loss = MainLoss::cwm;
    if (preset.kd == KdMode::vanilla) preset.kd = KdMode::replay_only;
    if (preset.aux == AuxMode::instance_mean) preset.aux = AuxMode::cwm;
    if (preset.alignment.mode == AlignmentMode::wa) preset.alignment.mode = AlignmentMode::diwa;
    preset.normalize_surrogates = true;
    return preset;
}

EvalResult evaluate(const ClassifierModel& model,
                    const std::vector<std::vector<LabeledExample>>& test_steps, int steps_done) {
    if (steps_done < 1 || steps_done > static_cast<int>(test_steps.size()))
        throw std::invalid_argument("evaluate: steps_done out of range");

    EvalResult result;
    result.confusion = Matrix(model.num_classes, model.num_classes);
    result.per_task.resize(steps_done, 0.0);

    long long correct_total = 0, count_total = 0;
    for (int task = 0; task < steps_done; ++task) {
        long long correct = 0;
        for (const auto& example : test_steps[task]) {
            if (example.label >= model.num_classes)
                throw std::invalid_argument("evaluate: label " + std::to_string(example.label) +
                                            " outside model classes");
            const int predicted = predict(model, example.features);
            result.confusion(example.label, predicted) += 1.0;
            if (predicted == example.label) ++correct;
        }
        const auto task_size = static_cast<long long>(test_steps[task].size());
        result.per_task[task] = task_size == 0 ? 0.0 : static_cast<double>(correct) / task_size;
        correct_total += correct;
        count_total += task_size;
    }
    result.accuracy = count_total == 0 ? 0.0 : static_cast<double>(correct_total) / count_total;
    return result;
}

namespace {

IncrementSchedule schedule_prefix(const IncrementSchedule& schedule, int steps) {
    IncrementSchedule prefix;
    prefix.counts.assign(schedule.counts.begin(), schedule.counts.begin() + steps);
    prefix.class_sets.assign(schedule.class_sets.begin(), schedule.class_sets.begin() + steps);
    return prefix;
}

}  // namespace

RunReport run_incremental(const IncrementSchedule& schedule, const DatasetSplit& split,
                          const MethodPreset& preset, const TrainConfig& config,
                          const StepObserver& on_step) {
    const auto validation = validate_schedule(schedule, schedule.total());
    if (!validation.ok())
        throw std::invalid_argument("run: invalid schedule (" + to_string(validation.violation) +
                                    ": " + validation.detail + ")");
    if (split.num_steps() != schedule.num_steps())
        throw std::invalid_argument("run: dataset split does not match the schedule");

    const auto run_start = std::chrono::steady_clock::now();

    Rng model_rng(derive_seed(config.seed, streams::kModelInit));
    ClassifierModel model = make_model(split.dim, config.hidden_width, model_rng);

    ReplayBuffer buffer;
    buffer.budget = config.buffer_budget;
    buffer.selection = config.buffer_selection;

    const SgdConfig sgd{config.learning_rate, config.weight_decay, config.momentum};

    RunReport report;
    report.schedule = schedule;

    std::vector<std::vector<double>> per_task_history;
    std::optional<TeacherSnapshot> teacher;

    for (int step = 0; step < schedule.num_steps(); ++step) {
        try {
            const auto step_start = std::chrono::steady_clock::now();
            const int old_classes = model.num_classes;

            if (preset.kd != KdMode::off && step >= 1) teacher = snapshot(model);

            Rng head_rng(derive_seed(derive_seed(config.seed, streams::kHeadInit), step));
            expand_head(model, schedule.counts[step], config.head_init, head_rng);

            // The aux head needs old classes to merge into its "other" slot,
            // so it only participates from step 2 onward.
            std::optional<AuxHead> aux_head;
            AuxSgdState aux_velocity;
            if (preset.aux != AuxMode::off && old_classes >= 1) {
                Rng aux_rng(derive_seed(derive_seed(config.seed, streams::kAuxInit), step));
                aux_head = make_aux_head(schedule.counts[step], model.feature_dim(),
                                         HeadInit::small_uniform, aux_rng);
            }

            LossSpec spec;
            spec.main = preset.main_loss;
            spec.old_classes = old_classes;
            if (teacher.has_value()) {
                spec.kd = preset.kd;
                spec.kd_coeff = preset.kd_coeff;
                spec.kd_temperature = preset.kd_temperature;
                spec.kd_renormalize = preset.kd_renormalize;
                spec.teacher = &teacher.value();
            }
            if (aux_head.has_value()) {
                spec.aux = preset.aux;
                spec.aux_coeff = preset.aux_coeff;
                spec.aux_head = &aux_head.value();
            }

            SgdState velocity;  // fresh optimizer state for each incremental step
            Rng shuffle_rng(derive_seed(derive_seed(config.seed, streams::kBatchShuffle), step));
            for (int epoch = 0; epoch < config.epochs; ++epoch) {
                const auto batches =
                    epoch_batches(split.train_steps[step], buffer, config.batch_size, shuffle_rng);
                for (const auto& batch : batches) {
                    const BackwardResult back = backward(model, batch, spec);
                    sgd_step(model, back.grads, sgd, velocity);
                    if (aux_head.has_value()) sgd_step(*aux_head, back.grads, sgd, aux_velocity);
                }
            }

            double alignment_scale = 1.0;
            if (old_classes >= 1)
                alignment_scale =
                    apply_alignment(model, old_classes, schedule.counts[step], preset.alignment);

            Rng buffer_rng(derive_seed(derive_seed(config.seed, streams::kBufferSelect), step));
            const FeatureMap feature_map = [&model](const Vector& x) {
                return extract_features(model, x);
            };
            buffer_update(buffer, split.train_steps[step], schedule.class_sets[step], buffer_rng,
                          feature_map);

            const EvalResult eval = evaluate(model, split.test_steps, step + 1);
            per_task_history.push_back(eval.per_task);

            StepMetrics metrics;
            metrics.step = step + 1;
            metrics.accuracy = eval.accuracy;
            metrics.per_task = eval.per_task;
            metrics.confusion = eval.confusion;
            metrics.prediction_bias =
                prediction_bias(eval.confusion, schedule_prefix(schedule, step + 1));
            metrics.alignment_scale = alignment_scale;
            metrics.wall_ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - step_start)
                                  .count();
            report.steps.push_back(std::move(metrics));

            if (on_step)
                on_step(StepContext{step + 1, model, teacher ? &teacher.value() : nullptr, buffer});
        } catch (const std::exception& e) {
            throw std::runtime_error("step " + std::to_string(step + 1) + ": " + e.what());
        }
    }

    report.final_accuracy = report.steps.back().accuracy;
    if (schedule.num_steps() >= 2) {
        report.forgetting = average_forgetting(per_task_history, ForgettingVariant::max_over_history);
        report.forgetting_first_seen =
            average_forgetting(per_task_history, ForgettingVariant::first_seen);
    }
    double accuracy_sum = 0.0;
    for (const auto& step_metrics : report.steps) accuracy_sum += step_metrics.accuracy;
    report.mean_step_accuracy = accuracy_sum / report.steps.size();
    report.total_wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - run_start)
            .count();
    return report;
}

}  // namespace ffcil
