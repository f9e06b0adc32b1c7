#include "ffcil/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace ffcil {

std::string to_string(HeadInit h) { return h == HeadInit::zero ? "zero" : "small_uniform"; }

HeadInit head_init_from_string(const std::string& s) {
    if (s == "zero") return HeadInit::zero;
    if (s == "small_uniform") return HeadInit::small_uniform;
    throw std::invalid_argument("unknown head init '" + s + "'");
}

ClassifierModel make_model(int input_dim, int hidden_width, Rng& rng) {
    if (input_dim < 1) throw std::invalid_argument("model: input_dim must be >= 1");
    if (hidden_width < 0) throw std::invalid_argument("model: hidden_width must be >= 0");
    ClassifierModel model;
    model.input_dim = input_dim;
    model.hidden_width = hidden_width;
    if (hidden_width > 0) {
        model.hidden_w = Matrix(hidden_width, input_dim);
        model.hidden_b.assign(hidden_width, 0.0);
        const double scale = 1.0 / std::sqrt(static_cast<double>(input_dim));
        for (double& w : model.hidden_w.data) w = rng.uniform(-scale, scale);
    }
    model.head_w = Matrix(0, model.feature_dim());
    return model;
}

Vector extract_features(const ClassifierModel& model, const Vector& x) {
    if (static_cast<int>(x.size()) != model.input_dim)
        throw std::invalid_argument("model: input has dimension " + std::to_string(x.size()) +
                                    ", expected " + std::to_string(model.input_dim));
    if (model.hidden_width == 0) return x;
    Vector features(model.hidden_width);
    for (int h = 0; h < model.hidden_width; ++h) {
        double z = model.hidden_b[h];
        const double* w = model.hidden_w.row(h);
        for (int j = 0; j < model.input_dim; ++j) z += w[j] * x[j];
        features[h] = std::tanh(z);
    }
    return features;
}

ForwardResult forward(const ClassifierModel& model, const Vector& x) {
    const Vector features = extract_features(model, x);
    ForwardResult out;
    out.logits.resize(model.num_classes);
    for (int c = 0; c < model.num_classes; ++c) {
        double z = model.head_b[c];
        const double* w = model.head_w.row(c);
        for (int j = 0; j < model.feature_dim(); ++j) z += w[j] * features[j];
        out.logits[c] = z;
    }
    out.probs.resize(model.num_classes);
    stable_softmax(out.logits, out.probs);
    return out;
}

BatchForward forward_batch(const ClassifierModel& model, const Matrix& inputs) {
    if (inputs.cols != model.input_dim)
        throw std::invalid_argument("model: batch has dimension " + std::to_string(inputs.cols) +
                                    ", expected " + std::to_string(model.input_dim));
    const int batch = inputs.rows;
    const int feat_dim = model.feature_dim();

    BatchForward out;
    if (model.hidden_width > 0) {
        out.features = Matrix(batch, feat_dim);
        for (int i = 0; i < batch; ++i) {
            const double* x = inputs.row(i);
            for (int h = 0; h < model.hidden_width; ++h) {
                double z = model.hidden_b[h];
                const double* w = model.hidden_w.row(h);
                for (int j = 0; j < model.input_dim; ++j) z += w[j] * x[j];
                out.features(i, h) = std::tanh(z);
            }
        }
    } else {
        out.features = inputs;
    }

    out.logits = Matrix(batch, model.num_classes);
    out.probs = Matrix(batch, model.num_classes);
    for (int i = 0; i < batch; ++i) {
        const double* f = out.features.row(i);
        for (int c = 0; c < model.num_classes; ++c) {
            double z = model.head_b[c];
            const double* w = model.head_w.row(c);
            for (int j = 0; j < feat_dim; ++j) z += w[j] * f[j];
            out.logits(i, c) = z;
        }
        stable_softmax({out.logits.row(i), static_cast<std::size_t>(model.num_classes)},
                       {out.probs.row(i), static_cast<std::size_t>(model.num_classes)});
    }
    return out;
}

int predict(const ClassifierModel& model, const Vector& x) {
    return argmax(forward(model, x).logits);
}

void expand_head(ClassifierModel& model, int num_new, HeadInit init, Rng& rng) {
    if (num_new < 1) throw std::invalid_argument("model: expand_head needs num_new >= 1");
    const int feat_dim = model.feature_dim();
    const int old_rows = model.num_classes;
    Matrix grown(old_rows + num_new, feat_dim);
    std::copy(model.head_w.data.begin(), model.head_w.data.end(), grown.data.begin());
    for (int r = old_rows; r < grown.rows; ++r)
        for (int j = 0; j < feat_dim; ++j)
            grown(r, j) = init == HeadInit::zero ? 0.0 : rng.uniform(-0.01, 0.01);
    model.head_w = std::move(grown);
    model.head_b.resize(old_rows + num_new, 0.0);
    model.num_classes += num_new;
}

TeacherSnapshot snapshot(const ClassifierModel& model) { return TeacherSnapshot(model); }

Matrix teacher_soft_targets(const TeacherSnapshot& teacher, const Matrix& inputs,
                            double temperature) {
    if (temperature <= 0.0) throw std::invalid_argument("teacher: temperature must be positive");
    const ClassifierModel& m = teacher.model();
    const BatchForward fw = forward_batch(m, inputs);
    Matrix probs(inputs.rows, m.num_classes);
    Vector tempered(m.num_classes);
    for (int i = 0; i < inputs.rows; ++i) {
        for (int c = 0; c < m.num_classes; ++c) tempered[c] = fw.logits(i, c) / temperature;
        stable_softmax(tempered, {probs.row(i), static_cast<std::size_t>(m.num_classes)});
    }
    return probs;
}

AuxHead make_aux_head(int step_classes, int feature_dim, HeadInit init, Rng& rng) {
    if (step_classes < 1) throw std::invalid_argument("aux: step_classes must be >= 1");
    AuxHead aux;
    aux.w = Matrix(step_classes + 1, feature_dim);
    aux.b.assign(step_classes + 1, 0.0);
    if (init == HeadInit::small_uniform)
        for (double& w : aux.w.data) w = rng.uniform(-0.01, 0.01);
    return aux;
}

Matrix aux_forward(const AuxHead& aux, const Matrix& features) {
    if (features.cols != aux.w.cols)
        throw std::invalid_argument("aux: feature dimension mismatch");
    Matrix logits(features.rows, aux.ways());
    for (int i = 0; i < features.rows; ++i) {
        const double* f = features.row(i);
        for (int k = 0; k < aux.ways(); ++k) {
            double z = aux.b[k];
            const double* w = aux.w.row(k);
            for (int j = 0; j < aux.w.cols; ++j) z += w[j] * f[j];
            logits(i, k) = z;
        }
    }
    return logits;
}

namespace {

void require_finite(double value, const char* term) {
    if (!std::isfinite(value))
        throw std::runtime_error(std::string("backward: non-finite ") + term + " loss");
}

}  // namespace

BackwardResult backward(const ClassifierModel& model, const MiniBatch& batch, const LossSpec& spec) {
    const int batch_size = batch.size();
    if (batch_size < 1) throw std::invalid_argument("backward: empty batch");
    if (batch.inputs.rows != batch_size)
        throw std::invalid_argument("backward: inputs/labels size mismatch");

    const int num_classes = model.num_classes;
    const int feat_dim = model.feature_dim();
    const BatchForward fw = forward_batch(model, batch.inputs);

    BackwardResult res;
    res.grads.head_w = Matrix(num_classes, feat_dim);
    res.grads.head_b.assign(num_classes, 0.0);
    if (model.hidden_width > 0) {
        res.grads.hidden_w = Matrix(model.hidden_width, model.input_dim);
        res.grads.hidden_b.assign(model.hidden_width, 0.0);
    }

    Matrix dlogits(batch_size, num_classes);
    Matrix dfeatures(batch_size, feat_dim);

    // main CE
    {
        const Vector terms = ce_per_sample(fw.logits, batch.labels);
        const AggregatedLoss agg = spec.main == MainLoss::cwm
                                       ? aggregate_cwm(terms, batch.labels)
                                       : aggregate_instance_mean(terms);
        require_finite(agg.value, "main_ce");
        res.main_value = agg.value;
        for (int i = 0; i < batch_size; ++i) {
            const double w = agg.per_sample_weights[i];
            for (int c = 0; c < num_classes; ++c)
                dlogits(i, c) = w * (fw.probs(i, c) - (c == batch.labels[i] ? 1.0 : 0.0));
        }
    }

    // distillation
    const bool kd_active = spec.kd != KdMode::off && spec.kd_coeff != 0.0 && spec.teacher != nullptr;
    if (kd_active) {
        const int old_k = spec.teacher->num_classes();
        if (old_k != spec.old_classes)
            throw std::invalid_argument("backward: teacher classes != old_classes");
        BatchView view;
        view.logits = fw.logits;
        view.labels = batch.labels;
        view.old_classes = old_k;
        view.teacher_probs = teacher_soft_targets(*spec.teacher, batch.inputs, spec.kd_temperature);

        AggregatedLoss agg;
        switch (spec.kd) {
            case KdMode::vanilla:
                agg = vanilla_kd(view, spec.kd_temperature, spec.kd_renormalize);
                break;
            case KdMode::replay_only:
                agg = replay_only_kd(view, spec.kd_temperature, spec.kd_renormalize);
                break;
            case KdMode::cwm_no_replay:
                agg = cwm_kd(view, spec.kd_temperature, spec.kd_renormalize);
                break;
            case KdMode::off: break;
        }
        require_finite(agg.value, "kd");
        res.kd_value = agg.value;

        const int support = spec.kd_renormalize ? old_k : num_classes;
        Vector tempered(support), q(support);
        for (int i = 0; i < batch_size; ++i) {
            const double w = agg.per_sample_weights[i];
            if (w == 0.0) continue;  // replay-only: new-class samples get exactly zero gradient
            for (int c = 0; c < support; ++c) tempered[c] = fw.logits(i, c) / spec.kd_temperature;
            stable_softmax(tempered, q);
            const double scale = spec.kd_coeff * w / spec.kd_temperature;
            for (int c = 0; c < support; ++c) {
                const double target = c < old_k ? view.teacher_probs(i, c) : 0.0;
                dlogits(i, c) += scale * (q[c] - target);
            }
        }
    }

    // auxiliary head
    const bool aux_active =
        spec.aux != AuxMode::off && spec.aux_coeff != 0.0 && spec.aux_head != nullptr;
    if (aux_active) {
        const AuxHead& aux = *spec.aux_head;
        const std::vector<int> relative = step_relative_labels(batch.labels, spec.old_classes);
        const Matrix aux_logits = aux_forward(aux, fw.features);
        const Vector terms = ce_per_sample(aux_logits, relative);
        const AggregatedLoss agg = spec.aux == AuxMode::cwm ? aggregate_cwm(terms, relative)
                                                            : aggregate_instance_mean(terms);
        require_finite(agg.value, "aux");
        res.aux_value = agg.value;

        res.grads.aux_w = Matrix(aux.ways(), feat_dim);
        res.grads.aux_b.assign(aux.ways(), 0.0);
        Vector probs(aux.ways());
        for (int i = 0; i < batch_size; ++i) {
            stable_softmax({aux_logits.row(i), static_cast<std::size_t>(aux.ways())}, probs);
            const double w = spec.aux_coeff * agg.per_sample_weights[i];
            const double* f = fw.features.row(i);
            for (int k = 0; k < aux.ways(); ++k) {
                const double g = w * (probs[k] - (k == relative[i] ? 1.0 : 0.0));
                res.grads.aux_b[k] += g;
                double* gw = res.grads.aux_w.row(k);
                const double* aw = aux.w.row(k);
                for (int j = 0; j < feat_dim; ++j) {
                    gw[j] += g * f[j];
                    dfeatures(i, j) += g * aw[j];
                }
            }
        }
    }

    // head gradients and feature backprop
    for (int i = 0; i < batch_size; ++i) {
        const double* f = fw.features.row(i);
        for (int c = 0; c < num_classes; ++c) {
            const double g = dlogits(i, c);
            if (g == 0.0) continue;
            res.grads.head_b[c] += g;
            double* gw = res.grads.head_w.row(c);
            const double* w = model.head_w.row(c);
            for (int j = 0; j < feat_dim; ++j) {
                gw[j] += g * f[j];
                dfeatures(i, j) += g * w[j];
            }
        }
    }

    if (model.hidden_width > 0) {
        for (int i = 0; i < batch_size; ++i) {
            const double* f = fw.features.row(i);
            const double* x = batch.inputs.row(i);
            for (int h = 0; h < model.hidden_width; ++h) {
                const double da = dfeatures(i, h) * (1.0 - f[h] * f[h]);  // tanh'
                if (da == 0.0) continue;
                res.grads.hidden_b[h] += da;
                double* gw = res.grads.hidden_w.row(h);
                for (int j = 0; j < model.input_dim; ++j) gw[j] += da * x[j];
            }
        }
    }

    res.loss = res.main_value + spec.kd_coeff * res.kd_value + spec.aux_coeff * res.aux_value;
    return res;
}

namespace {

void momentum_update(std::vector<double>& params, const std::vector<double>& grads,
                     std::vector<double>& velocity, const SgdConfig& cfg) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i] + cfg.weight_decay * params[i];
        velocity[i] = cfg.momentum * velocity[i] + g;
        params[i] -= cfg.learning_rate * velocity[i];
    }
}

void grow_rows(Matrix& m, int rows, int cols) {
    if (m.rows == rows && m.cols == cols) return;
    Matrix grown(rows, cols);
    std::copy(m.data.begin(), m.data.end(), grown.data.begin());
    m = std::move(grown);
}

}  // namespace

void sgd_step(ClassifierModel& model, const ModelGradients& grads, const SgdConfig& cfg,
              SgdState& state) {
    if (grads.head_w.rows != model.head_w.rows || grads.head_w.cols != model.head_w.cols)
        throw std::invalid_argument("sgd: gradient/parameter shape mismatch");
    grow_rows(state.head_w, model.head_w.rows, model.head_w.cols);
    state.head_b.resize(model.head_b.size(), 0.0);
    if (model.hidden_width > 0) {
        grow_rows(state.hidden_w, model.hidden_w.rows, model.hidden_w.cols);
        state.hidden_b.resize(model.hidden_b.size(), 0.0);
        momentum_update(model.hidden_w.data, grads.hidden_w.data, state.hidden_w.data, cfg);
        momentum_update(model.hidden_b, grads.hidden_b, state.hidden_b, cfg);
    }
    momentum_update(model.head_w.data, grads.head_w.data, state.head_w.data, cfg);
    momentum_update(model.head_b, grads.head_b, state.head_b, cfg);
}

void sgd_step(AuxHead& aux, const ModelGradients& grads, const SgdConfig& cfg, AuxSgdState& state) {
    if (grads.aux_w.rows != aux.w.rows || grads.aux_w.cols != aux.w.cols)
        throw std::invalid_argument("sgd: aux gradient/parameter shape mismatch");
    grow_rows(state.w, aux.w.rows, aux.w.cols);
    state.b.resize(aux.b.size(), 0.0);
    momentum_update(aux.w.data, grads.aux_w.data, state.w.data, cfg);
    momentum_update(aux.b, grads.aux_b, state.b, cfg);
}

Vector flatten_parameters(const ClassifierModel& model, const AuxHead* aux) {
    Vector theta;
    theta.insert(theta.end(), model.hidden_w.data.begin(), model.hidden_w.data.end());
    theta.insert(theta.end(), model.hidden_b.begin(), model.hidden_b.end());
    theta.insert(theta.end(), model.head_w.data.begin(), model.head_w.data.end());
    theta.insert(theta.end(), model.head_b.begin(), model.head_b.end());
    if (aux) {
        theta.insert(theta.end(), aux->w.data.begin(), aux->w.data.end());
        theta.insert(theta.end(), aux->b.begin(), aux->b.end());
    }
    return theta;
}

void set_parameters(ClassifierModel& model, AuxHead* aux, const Vector& theta) {
    std::size_t pos = 0;
    auto take = [&](double* dst, std::size_t n) {
        std::copy(theta.begin() + pos, theta.begin() + pos + n, dst);
        pos += n;
    };
    take(model.hidden_w.data.data(), model.hidden_w.data.size());
    take(model.hidden_b.data(), model.hidden_b.size());
    take(model.head_w.data.data(), model.head_w.data.size());
    take(model.head_b.data(), model.head_b.size());
    if (aux) {
        take(aux->w.data.data(), aux->w.data.size());
        take(aux->b.data(), aux->b.size());
    }
    if (pos != theta.size()) throw std::invalid_argument("set_parameters: size mismatch");
}

Vector flatten_gradients(const ModelGradients& grads, bool include_aux) {
    Vector g;
    g.insert(g.end(), grads.hidden_w.data.begin(), grads.hidden_w.data.end());
    g.insert(g.end(), grads.hidden_b.begin(), grads.hidden_b.end());
    g.insert(g.end(), grads.head_w.data.begin(), grads.head_w.data.end());
    g.insert(g.end(), grads.head_b.begin(), grads.head_b.end());
    if (include_aux) {
        g.insert(g.end(), grads.aux_w.data.begin(), grads.aux_w.data.end());
        g.insert(g.end(), grads.aux_b.begin(), grads.aux_b.end());
    }
    return g;
}

void save_model(const ClassifierModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("model: cannot write '" + path + "'");
    out.precision(17);
    out << "ffcil-model v1\n";
    out << model.input_dim << " " << model.hidden_width << " " << model.num_classes << "\n";
    auto dump = [&out](const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i)
            out << values[i] << (i + 1 == values.size() ? "" : " ");
        out << "\n";
    };
    dump(model.hidden_w.data);
    dump(model.hidden_b);
    dump(model.head_w.data);
    dump(model.head_b);
}

ClassifierModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("model: cannot open '" + path + "'");
    std::string tag, version;
    in >> tag >> version;
    if (tag != "ffcil-model" || version != "v1")
        throw std::runtime_error("model: unsupported checkpoint header in '" + path + "'");
    ClassifierModel model;
    in >> model.input_dim >> model.hidden_width >> model.num_classes;
    if (!in || model.input_dim < 1 || model.hidden_width < 0 || model.num_classes < 0)
        throw std::runtime_error("model: corrupt checkpoint shapes in '" + path + "'");
    const int feat_dim = model.hidden_width > 0 ? model.hidden_width : model.input_dim;
    model.hidden_w = Matrix(model.hidden_width, model.hidden_width > 0 ? model.input_dim : 0);
    model.hidden_b.assign(model.hidden_width, 0.0);
    model.head_w = Matrix(model.num_classes, feat_dim);
    model.head_b.assign(model.num_classes, 0.0);
    auto slurp = [&in, &path](std::vector<double>& values) {
        for (double& v : values)
            if (!(in >> v)) throw std::runtime_error("model: truncated checkpoint '" + path + "'");
    };
    slurp(model.hidden_w.data);
    slurp(model.hidden_b);
    slurp(model.head_w.data);
    slurp(model.head_b);
    return model;
}

}  // namespace ffcil
