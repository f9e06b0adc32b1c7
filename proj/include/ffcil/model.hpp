#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ffcil/core.hpp"
#include "ffcil/dataset.hpp"
#include "ffcil/losses.hpp"
#include "ffcil/rng.hpp"

namespace ffcil {

enum class HeadInit { zero, small_uniform };

std::string to_string(HeadInit h);
HeadInit head_init_from_string(const std::string& s);

// Small differentiable classifier: optional tanh hidden layer followed by an
// expanding linear softmax head. All parameters are 64-bit. hidden_width == 0
// puts the head directly on the raw features.
struct ClassifierModel {
    int input_dim = 0;
    int hidden_width = 0;
    Matrix hidden_w;  // hidden_width x input_dim
    Vector hidden_b;  // hidden_width
    Matrix head_w;    // num_classes x feature_dim()
    Vector head_b;    // num_classes
    int num_classes = 0;

    int feature_dim() const { return hidden_width > 0 ? hidden_width : input_dim; }

    bool operator==(const ClassifierModel& o) const = default;
};

// Fresh model with zero classes; hidden layer seeded uniform in
// [-1/sqrt(input_dim), +1/sqrt(input_dim)].
ClassifierModel make_model(int input_dim, int hidden_width, Rng& rng);

struct ForwardResult {
    Vector logits;
    Vector probs;
};

ForwardResult forward(const ClassifierModel& model, const Vector& x);

struct BatchForward {
    Matrix features;  // B x feature_dim (tanh activations, or the inputs)
    Matrix logits;    // B x C
    Matrix probs;     // B x C
};

BatchForward forward_batch(const ClassifierModel& model, const Matrix& inputs);

Vector extract_features(const ClassifierModel& model, const Vector& x);

int predict(const ClassifierModel& model, const Vector& x);

// Appends num_new head rows; existing rows and all other parameters are left
// bit-identical. zero makes the new rows indistinguishable (test use only);
// small_uniform draws each entry from [-0.01, 0.01].
void expand_head(ClassifierModel& model, int num_new, HeadInit init, Rng& rng);

// Frozen deep copy of the model at snapshot time.
class TeacherSnapshot {
public:
    explicit TeacherSnapshot(const ClassifierModel& model) : model_(model) {}
    const ClassifierModel& model() const { return model_; }
    int num_classes() const { return model_.num_classes; }

private:
    ClassifierModel model_;
};

TeacherSnapshot snapshot(const ClassifierModel& model);

// softmax(z / temperature) over the teacher's classes, one row per input.
Matrix teacher_soft_targets(const TeacherSnapshot& teacher, const Matrix& inputs,
                            double temperature);

// Step-local (|C_t| + 1)-way classifier over the shared features. Row 0 is the
// merged "other" category for all old classes. Created fresh each step and
// discarded afterwards.
struct AuxHead {
    Matrix w;  // (step_classes + 1) x feature_dim
    Vector b;

    int ways() const { return w.rows; }

    bool operator==(const AuxHead& o) const = default;
};

AuxHead make_aux_head(int step_classes, int feature_dim, HeadInit init, Rng& rng);

Matrix aux_forward(const AuxHead& aux, const Matrix& features);

// Gradient structure mirroring the parameters. aux_w/aux_b are sized only
// when the objective had an active auxiliary term.
struct ModelGradients {
    Matrix hidden_w;
    Vector hidden_b;
    Matrix head_w;
    Vector head_b;
    Matrix aux_w;
    Vector aux_b;
};

// Composed objective: main CE + kd_coeff * KD + aux_coeff * aux CE. A term is
// inactive when its mode is off, its coefficient is zero, or its teacher/aux
// head is absent; inactive terms contribute nothing (no epsilon writes).
struct LossSpec {
    MainLoss main = MainLoss::instance_mean;
    KdMode kd = KdMode::off;
    double kd_coeff = 1.0;
    double kd_temperature = 2.0;
    bool kd_renormalize = true;
    const TeacherSnapshot* teacher = nullptr;
    int old_classes = 0;  // K before this step
    AuxMode aux = AuxMode::off;
    double aux_coeff = 1.0;
    const AuxHead* aux_head = nullptr;
};

struct BackwardResult {
    double loss = 0.0;        // main + kd_coeff * kd + aux_coeff * aux
    double main_value = 0.0;
    double kd_value = 0.0;
    double aux_value = 0.0;
    ModelGradients grads;
};

// Analytic gradients of the composed objective; throws on a non-finite term,
// naming it.
BackwardResult backward(const ClassifierModel& model, const MiniBatch& batch, const LossSpec& spec);

struct SgdConfig {
    double learning_rate = 0.1;
    double weight_decay = 0.0;
    double momentum = 0.0;
};

// Velocity buffers for classical momentum. Head rows grow (zero-filled) when
// the model head expanded since the previous step.
struct SgdState {
    Matrix hidden_w;
    Vector hidden_b;
    Matrix head_w;
    Vector head_b;
};

struct AuxSgdState {
    Matrix w;
    Vector b;
};

// v <- momentum * v + (g + weight_decay * theta); theta <- theta - lr * v.
void sgd_step(ClassifierModel& model, const ModelGradients& grads, const SgdConfig& cfg,
              SgdState& state);
void sgd_step(AuxHead& aux, const ModelGradients& grads, const SgdConfig& cfg, AuxSgdState& state);

// Flattened parameter vector: hidden_w, hidden_b, head_w, head_b, then the
// aux head when given. Order matches flatten_gradients.
Vector flatten_parameters(const ClassifierModel& model, const AuxHead* aux = nullptr);
void set_parameters(ClassifierModel& model, AuxHead* aux, const Vector& theta);
Vector flatten_gradients(const ModelGradients& grads, bool include_aux = false);

// One-line versioned header followed by shapes and row-major values.
void save_model(const ClassifierModel& model, const std::string& path);
ClassifierModel load_model(const std::string& path);

}  // namespace ffcil
