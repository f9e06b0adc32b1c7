#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ffcil/alignment.hpp"
#include "ffcil/dataset.hpp"
#include "ffcil/losses.hpp"
#include "ffcil/metrics.hpp"
#include "ffcil/model.hpp"
#include "ffcil/replay_buffer.hpp"
#include "ffcil/schedule.hpp"

namespace ffcil {

enum class PresetName { replay, kd_replay, wa_kd, aux_expand };

std::string to_string(PresetName p);
PresetName preset_name_from_string(const std::string& s);

// A mechanism bundle: which aggregation the main loss uses, which distillation
// variant runs against the frozen teacher, whether a step-local auxiliary head
// adds training signal, and the post-hoc alignment mode.
struct MethodPreset {
    PresetName name = PresetName::replay;
    MainLoss main_loss = MainLoss::instance_mean;
    KdMode kd = KdMode::off;
    double kd_coeff = 1.0;
    double kd_temperature = 2.0;
    bool kd_renormalize = true;
    AuxMode aux = AuxMode::off;
    double aux_coeff = 1.0;
    AlignmentConfig alignment;
    bool normalize_surrogates = false;

    bool operator==(const MethodPreset& o) const = default;
};

// replay: CE only. kd_replay: CE + vanilla KD. wa_kd: CE + KD + WA.
// aux_expand: CE + auxiliary (|C_t|+1)-way head.
MethodPreset make_preset(PresetName name);

// The free-flow hardening of a preset: CWM main loss, replay-only KD in place
// of vanilla, CWM auxiliary aggregation, DIWA in place of WA, and surrogate
// scale normalization on.
MethodPreset ours_variant(MethodPreset preset);

struct TrainConfig {
    int epochs = 15;
    int batch_size = 32;
    double learning_rate = 0.05;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    int buffer_budget = 100;
    ExemplarSelection buffer_selection = ExemplarSelection::herding;
    int hidden_width = 32;
    HeadInit head_init = HeadInit::small_uniform;
    std::uint64_t seed = 1;

    bool operator==(const TrainConfig& o) const = default;
};

struct EvalResult {
    double accuracy = 0.0;
    Matrix confusion;              // rows: true label, cols: predicted
    std::vector<double> per_task;  // accuracy restricted to each step's test classes
};

// Accuracy, confusion and per-task accuracies over the union of the first
// steps_done test sets.
EvalResult evaluate(const ClassifierModel& model,
                    const std::vector<std::vector<LabeledExample>>& test_steps, int steps_done);

// End-of-step snapshot handed to the optional observer.
struct StepContext {
    int step = 0;  // 1-based
    const ClassifierModel& model;
    const TeacherSnapshot* teacher;  // teacher used during this step, if any
    const ReplayBuffer& buffer;
};

using StepObserver = std::function<void(const StepContext&)>;

// Runs the full incremental protocol: per step, snapshot the teacher (from
// step 2, when distillation is on), expand the head, train over mixed
// current+replay mini-batches with the preset's composed objective, apply
// alignment, refresh the buffer, and evaluate on the cumulative test set.
// Deterministic given config.seed. Module errors propagate with the step
// index attached.
RunReport run_incremental(const IncrementSchedule& schedule, const DatasetSplit& split,
                          const MethodPreset& preset, const TrainConfig& config,
                          const StepObserver& on_step = {});

}  // namespace ffcil
