#include <cmath>
#include <cstdio>

#include "doctest.h"
#include "ffcil/model.hpp"

using namespace ffcil;

namespace {

MiniBatch random_batch(Rng& rng, int batch, int dim, int classes) {
    MiniBatch out;
    out.inputs = Matrix(batch, dim);
    for (double& x : out.inputs.data) x = rng.uniform(-2.0, 2.0);
    out.labels.resize(batch);
    for (int& y : out.labels) y = static_cast<int>(rng.uniform_int(0, classes - 1));
    return out;
}

ClassifierModel random_model(Rng& rng, int dim, int hidden, int classes) {
    ClassifierModel model = make_model(dim, hidden, rng);
    expand_head(model, classes, HeadInit::small_uniform, rng);
    for (double& w : model.head_w.data) w = rng.uniform(-0.8, 0.8);
    for (double& b : model.head_b) b = rng.uniform(-0.5, 0.5);
    if (hidden > 0)
        for (double& b : model.hidden_b) b = rng.uniform(-0.3, 0.3);
    return model;
}

double composed_loss(const ClassifierModel& model, const AuxHead* aux, const MiniBatch& batch,
                     LossSpec spec) {
    spec.aux_head = aux;
    return backward(model, batch, spec).loss;
}

// Central finite differences over every parameter, compared against the
// analytic gradient at relative tolerance 1e-5.
void check_gradients(const ClassifierModel& model, AuxHead* aux, const MiniBatch& batch,
                     const LossSpec& spec) {
    const BackwardResult res = backward(model, batch, spec);
    const Vector analytic = flatten_gradients(res.grads, aux != nullptr);
    Vector theta = flatten_parameters(model, aux);
    REQUIRE(analytic.size() == theta.size());

    ClassifierModel probe = model;
    AuxHead aux_probe = aux ? *aux : AuxHead{};
    AuxHead* aux_ptr = aux ? &aux_probe : nullptr;
    const double step = 1e-5;
    for (std::size_t p = 0; p < theta.size(); ++p) {
        const double saved = theta[p];
        theta[p] = saved + step;
        set_parameters(probe, aux_ptr, theta);
        const double up = composed_loss(probe, aux_ptr, batch, spec);
        theta[p] = saved - step;
        set_parameters(probe, aux_ptr, theta);
        const double down = composed_loss(probe, aux_ptr, batch, spec);
        theta[p] = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double scale = std::max({1.0, std::abs(numeric), std::abs(analytic[p])});
        CHECK(std::abs(numeric - analytic[p]) <= 1e-5 * scale);
    }
    set_parameters(probe, aux_ptr, theta);
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("all-zero parameters give uniform probabilities") {
    Rng rng(1);
    ClassifierModel model = make_model(4, 0, rng);
    expand_head(model, 5, HeadInit::zero, rng);
    const auto out = forward(model, {0.3, -0.4, 1.0, 2.0});
    for (double p : out.probs) CHECK(p == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("logits (0, ln 3) give probabilities (0.25, 0.75)") {
    Rng rng(1);
    ClassifierModel model = make_model(2, 0, rng);
    expand_head(model, 2, HeadInit::zero, rng);
    model.head_b = {0.0, std::log(3.0)};
    const auto out = forward(model, {0.0, 0.0});
    CHECK(out.probs[0] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(out.probs[1] == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("probabilities normalize and shifting every logit changes nothing") {
    Rng rng(2);
    ClassifierModel model = random_model(rng, 4, 6, 5);
    const Vector x = {0.5, -1.0, 2.0, 0.1};
    const auto before = forward(model, x);
    double sum = 0.0;
    for (double p : before.probs) sum += p;
    CHECK(std::abs(sum - 1.0) <= 1e-12);

    for (double& b : model.head_b) b += 17.5;  // constant shift on every logit
    const auto after = forward(model, x);
    for (int c = 0; c < 5; ++c) CHECK(std::abs(after.probs[c] - before.probs[c]) <= 1e-12);
}

TEST_CASE("dimension mismatch raises") {
    Rng rng(3);
    ClassifierModel model = random_model(rng, 4, 0, 3);
    CHECK_THROWS_AS(forward(model, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("expand_head keeps old rows bitwise and old logits exactly") {
    Rng rng(4);
    ClassifierModel model = random_model(rng, 3, 5, 4);
    const Matrix old_w = model.head_w;
    const Vector probe = {0.7, -0.2, 1.1};
    const auto before = forward(model, probe);

    expand_head(model, 3, HeadInit::small_uniform, rng);
    CHECK(model.num_classes == 7);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < model.head_w.cols; ++c) CHECK(model.head_w(r, c) == old_w(r, c));

    const auto after = forward(model, probe);
    for (int c = 0; c < 4; ++c) CHECK(after.logits[c] == before.logits[c]);
}

TEST_CASE("zero-init expansion makes the new classes indistinguishable") {
    Rng rng(5);
    ClassifierModel model = random_model(rng, 3, 4, 2);
    expand_head(model, 3, HeadInit::zero, rng);
    const auto out = forward(model, {0.2, 0.9, -0.4});
    CHECK(out.probs[2] == doctest::Approx(out.probs[3]).epsilon(1e-15));
    CHECK(out.probs[3] == doctest::Approx(out.probs[4]).epsilon(1e-15));
}

TEST_CASE("seeded expansion is reproducible") {
    Rng rng_a(77), rng_b(77);
    ClassifierModel a = random_model(rng_a, 3, 0, 2);
    ClassifierModel b = random_model(rng_b, 3, 0, 2);
    expand_head(a, 2, HeadInit::small_uniform, rng_a);
    expand_head(b, 2, HeadInit::small_uniform, rng_b);
    CHECK(a == b);
}

TEST_CASE("zero-model single-sample CE gradient is (softmax - onehot) x features") {
    Rng rng(6);
    ClassifierModel model = make_model(3, 0, rng);
    expand_head(model, 4, HeadInit::zero, rng);

    MiniBatch batch;
    batch.inputs = Matrix(1, 3);
    batch.inputs.row(0)[0] = 0.5;
    batch.inputs.row(0)[1] = -1.0;
    batch.inputs.row(0)[2] = 2.0;
    batch.labels = {2};

    const auto res = backward(model, batch, LossSpec{});
    for (int c = 0; c < 4; ++c) {
        const double coeff = 0.25 - (c == 2 ? 1.0 : 0.0);  // uniform softmax minus onehot
        for (int j = 0; j < 3; ++j)
            CHECK(res.grads.head_w(c, j) ==
                  doctest::Approx(coeff * batch.inputs(0, j)).epsilon(1e-14));
        CHECK(res.grads.head_b[c] == doctest::Approx(coeff).epsilon(1e-14));
    }
}

TEST_CASE("duplicating every sample leaves instance-mean gradients unchanged") {
    Rng rng(7);
    ClassifierModel model = random_model(rng, 4, 5, 3);
    MiniBatch batch = random_batch(rng, 6, 4, 3);

    MiniBatch doubled;
    doubled.inputs = Matrix(12, 4);
    doubled.labels.resize(12);
    for (int i = 0; i < 12; ++i) {
        const int src = i % 6;
        std::copy(batch.inputs.row(src), batch.inputs.row(src) + 4, doubled.inputs.row(i));
        doubled.labels[i] = batch.labels[src];
    }
    const auto g1 = flatten_gradients(backward(model, batch, LossSpec{}).grads);
    const auto g2 = flatten_gradients(backward(model, doubled, LossSpec{}).grads);
    for (std::size_t p = 0; p < g1.size(); ++p) CHECK(std::abs(g1[p] - g2[p]) <= 1e-14);
}

TEST_CASE("finite differences confirm every objective composition") {
    Rng rng(8);
    const int dim = 4, classes = 3;
    const int checks_per_case = 4;

    struct Case {
        MainLoss main;
        KdMode kd;
        AuxMode aux;
        bool renormalize;
    };
    const Case cases[] = {
        {MainLoss::instance_mean, KdMode::off, AuxMode::off, true},
        {MainLoss::cwm, KdMode::off, AuxMode::off, true},
        {MainLoss::instance_mean, KdMode::vanilla, AuxMode::off, true},
        {MainLoss::instance_mean, KdMode::vanilla, AuxMode::off, false},
        {MainLoss::instance_mean, KdMode::replay_only, AuxMode::off, true},
        {MainLoss::cwm, KdMode::cwm_no_replay, AuxMode::off, true},
        {MainLoss::instance_mean, KdMode::off, AuxMode::instance_mean, true},
        {MainLoss::cwm, KdMode::off, AuxMode::cwm, true},
        {MainLoss::cwm, KdMode::replay_only, AuxMode::cwm, true},
    };

    for (const auto& test_case : cases) {
        for (int check = 0; check < checks_per_case; ++check) {
            const int hidden = (check % 2 == 0) ? 5 : 0;
            const int old_k = 2;
            ClassifierModel teacher_model = random_model(rng, dim, hidden, old_k);
            const TeacherSnapshot teacher = snapshot(teacher_model);

            ClassifierModel model = teacher_model;
            expand_head(model, classes - old_k, HeadInit::small_uniform, rng);
            for (double& w : model.head_w.data) w += rng.uniform(-0.2, 0.2);

            AuxHead aux = make_aux_head(classes - old_k, model.feature_dim(),
                                        HeadInit::small_uniform, rng);
            for (double& w : aux.w.data) w += rng.uniform(-0.3, 0.3);

            MiniBatch batch = random_batch(rng, 7, dim, classes);
            batch.labels[0] = 0;  // keep at least one old and one new class present
            batch.labels[1] = classes - 1;

            LossSpec spec;
            spec.main = test_case.main;
            spec.old_classes = old_k;
            if (test_case.kd != KdMode::off) {
                spec.kd = test_case.kd;
                spec.kd_coeff = 0.7;
                spec.kd_temperature = 2.0;
                spec.kd_renormalize = test_case.renormalize;
                spec.teacher = &teacher;
            }
            AuxHead* aux_ptr = nullptr;
            if (test_case.aux != AuxMode::off) {
                spec.aux = test_case.aux;
                spec.aux_coeff = 0.5;
                spec.aux_head = &aux;
                aux_ptr = &aux;
            }
            check_gradients(model, aux_ptr, batch, spec);
        }
    }
}

TEST_CASE("non-finite loss names the offending term") {
    Rng rng(9);
    ClassifierModel model = make_model(2, 0, rng);
    expand_head(model, 2, HeadInit::zero, rng);
    model.head_w(0, 0) = 1e308;  // saturates the softmax to an exact zero for class 1
    model.head_w(1, 0) = -1e308;

    MiniBatch batch;
    batch.inputs = Matrix(1, 2);
    batch.inputs(0, 0) = 1.0;
    batch.labels = {1};
    CHECK_THROWS_WITH_AS(backward(model, batch, LossSpec{}), doctest::Contains("main_ce"),
                         std::runtime_error);
}

TEST_CASE("sgd with zero learning rate leaves the model unchanged") {
    Rng rng(10);
    ClassifierModel model = random_model(rng, 3, 4, 3);
    const ClassifierModel before = model;
    MiniBatch batch = random_batch(rng, 5, 3, 3);
    const auto res = backward(model, batch, LossSpec{});
    SgdState state;
    sgd_step(model, res.grads, SgdConfig{0.0, 0.0, 0.9}, state);
    CHECK(model == before);
}

TEST_CASE("plain sgd is theta minus lr times gradient") {
    Rng rng(11);
    ClassifierModel model = random_model(rng, 3, 0, 2);
    const ClassifierModel before = model;
    MiniBatch batch = random_batch(rng, 4, 3, 2);
    const auto res = backward(model, batch, LossSpec{});
    SgdState state;
    sgd_step(model, res.grads, SgdConfig{0.25, 0.0, 0.0}, state);
    for (std::size_t i = 0; i < model.head_w.data.size(); ++i)
        CHECK(model.head_w.data[i] ==
              doctest::Approx(before.head_w.data[i] - 0.25 * res.grads.head_w.data[i])
                  .epsilon(1e-15));
}

TEST_CASE("two momentum steps against a constant gradient displace by lr*g*(1 + 1.9)") {
    Rng rng(12);
    ClassifierModel model = make_model(2, 0, rng);
    expand_head(model, 2, HeadInit::zero, rng);

    ModelGradients grads;
    grads.head_w = Matrix(2, 2, 1.0);  // constant gradient
    grads.head_b.assign(2, 1.0);

    const SgdConfig cfg{0.1, 0.0, 0.9};
    SgdState state;
    sgd_step(model, grads, cfg, state);
    sgd_step(model, grads, cfg, state);
    for (double w : model.head_w.data)
        CHECK(w == doctest::Approx(-0.1 * (1.0 + 1.9)).epsilon(1e-14));
}

TEST_CASE("teacher snapshots are frozen deep copies") {
    Rng rng(13);
    ClassifierModel model = random_model(rng, 3, 4, 3);
    const TeacherSnapshot teacher = snapshot(model);
    const Vector probe = {0.4, -0.8, 0.3};
    const auto student_out = forward(model, probe);
    const auto teacher_out = forward(teacher.model(), probe);
    for (int c = 0; c < 3; ++c) CHECK(student_out.logits[c] == teacher_out.logits[c]);

    MiniBatch batch = random_batch(rng, 5, 3, 3);
    const auto res = backward(model, batch, LossSpec{});
    SgdState state;
    sgd_step(model, res.grads, SgdConfig{0.5, 0.0, 0.0}, state);
    expand_head(model, 2, HeadInit::small_uniform, rng);

    const auto teacher_after = forward(teacher.model(), probe);
    for (int c = 0; c < 3; ++c) CHECK(teacher_after.logits[c] == teacher_out.logits[c]);
    CHECK(teacher.num_classes() == 3);
    CHECK(model.num_classes == 5);
}

TEST_CASE("checkpoints round-trip") {
    Rng rng(14);
    ClassifierModel model = random_model(rng, 5, 6, 4);
    const std::string path = "ffcil_test_model.txt";
    save_model(model, path);
    const ClassifierModel loaded = load_model(path);
    CHECK(loaded == model);
    std::remove(path.c_str());
}

}  // TEST_SUITE
