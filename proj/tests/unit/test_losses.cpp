#include <array>
#include <cmath>

#include "doctest.h"
#include "ffcil/losses.hpp"
#include "ffcil/rng.hpp"

using namespace ffcil;

namespace {

// Random batch view: C-class logits, labels, and a teacher over the first K.
BatchView random_view(Rng& rng, int batch, int classes, int old_classes) {
    BatchView view;
    view.logits = Matrix(batch, classes);
    for (double& z : view.logits.data) z = rng.uniform(-3.0, 3.0);
    view.labels.resize(batch);
    for (int& y : view.labels) y = static_cast<int>(rng.uniform_int(0, classes - 1));
    view.old_classes = old_classes;
    if (old_classes > 0) {
        view.teacher_probs = Matrix(batch, old_classes);
        for (int i = 0; i < batch; ++i) {
            double sum = 0.0;
            for (int c = 0; c < old_classes; ++c) {
                view.teacher_probs(i, c) = rng.uniform(0.01, 1.0);
                sum += view.teacher_probs(i, c);
            }
            for (int c = 0; c < old_classes; ++c) view.teacher_probs(i, c) /= sum;
        }
    }
    return view;
}

double weighted_sum(const AggregatedLoss& agg, const Vector& terms) {
    double v = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) v += agg.per_sample_weights[i] * terms[i];
    return v;
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("instance mean of [1,2,3] is 2") {
    const auto agg = aggregate_instance_mean({1.0, 2.0, 3.0});
    CHECK(agg.value == doctest::Approx(2.0).epsilon(1e-15));
    for (double w : agg.per_sample_weights) CHECK(w == doctest::Approx(1.0 / 3).epsilon(1e-15));
}

TEST_CASE("single sample aggregates to itself") {
    CHECK(aggregate_instance_mean({1.75}).value == doctest::Approx(1.75).epsilon(1e-15));
    CHECK(aggregate_cwm({1.75}, {4}).value == doctest::Approx(1.75).epsilon(1e-15));
}

TEST_CASE("uniform predictions cost ln C") {
    const int classes = 7;
    BatchView view;
    view.logits = Matrix(3, classes, 0.0);
    view.labels = {0, 3, 6};
    CHECK(instance_mean_ce(view).value ==
          doctest::Approx(std::log(double(classes))).epsilon(1e-15));
}

TEST_CASE("classwise decomposition of labels [a,a,b] with terms [1,2,3] is 2") {
    const auto agg = aggregate_classwise_decomposed({1.0, 2.0, 3.0}, {0, 0, 1});
    CHECK(agg.value == doctest::Approx((2.0 / 3) * 1.5 + (1.0 / 3) * 3.0).epsilon(1e-15));
    CHECK(agg.value == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("cwm of labels [a,a,b] with terms [1,2,3] is 2.25") {
    const auto agg = aggregate_cwm({1.0, 2.0, 3.0}, {0, 0, 1});
    CHECK(agg.value == doctest::Approx(2.25).epsilon(1e-15));
    CHECK(agg.per_sample_weights[0] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(agg.per_sample_weights[2] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("instance-mean equals the class decomposition on 1000 random batches") {
    Rng rng(123);
    for (int trial = 0; trial < 1000; ++trial) {
        const int batch = 1 + static_cast<int>(rng.uniform_int(0, 63));
        const int classes = 2 + static_cast<int>(rng.uniform_int(0, 18));
        const auto view = random_view(rng, batch, classes, 0);
        const double lhs = instance_mean_ce(view).value;
        const double rhs = classwise_decomposed_ce(view).value;
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
}

TEST_CASE("a balanced batch makes cwm equal the instance mean") {
    Rng rng(9);
    auto view = random_view(rng, 12, 4, 0);
    view.labels = {0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3};
    CHECK(cwm_ce(view).value ==
          doctest::Approx(instance_mean_ce(view).value).epsilon(1e-13));
}

TEST_CASE("duplicating one class moves the instance mean but not cwm") {
    const Vector terms = {1.0, 2.0, 3.0};
    const std::vector<int> labels = {0, 0, 1};
    const double cwm_before = aggregate_cwm(terms, labels).value;
    const double mean_before = aggregate_instance_mean(terms).value;

    for (int k = 2; k <= 5; ++k) {
        Vector dup_terms = terms;
        std::vector<int> dup_labels = labels;
        for (int copy = 1; copy < k; ++copy) {
            dup_terms.push_back(terms[2]);  // duplicate the single class-1 sample
            dup_labels.push_back(1);
        }
        CHECK(std::abs(aggregate_cwm(dup_terms, dup_labels).value - cwm_before) < 1e-12);
        // the instance mean shifts exactly as the reweighted class decomposition predicts
        const double batch = static_cast<double>(dup_terms.size());
        const double predicted = (2.0 / batch) * 1.5 + (k / batch) * 3.0;
        CHECK(aggregate_instance_mean(dup_terms).value ==
              doctest::Approx(predicted).epsilon(1e-14));
        CHECK(aggregate_instance_mean(dup_terms).value != doctest::Approx(mean_before));
    }
}

TEST_CASE("self-distillation at temperature 1 costs the teacher entropy") {
    Rng rng(5);
    const int batch = 6, old_k = 4;
    auto view = random_view(rng, batch, 6, old_k);
    // teacher targets derived from the student's own first-K logits
    Vector slice(old_k), probs(old_k);
    double expected = 0.0;
    for (int i = 0; i < batch; ++i) {
        for (int c = 0; c < old_k; ++c) slice[c] = view.logits(i, c);
        stable_softmax(slice, probs);
        for (int c = 0; c < old_k; ++c) {
            view.teacher_probs(i, c) = probs[c];
            expected -= probs[c] * std::log(probs[c]);
        }
    }
    expected /= batch;
    CHECK(vanilla_kd(view, 1.0).value == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("one-hot teacher against a uniform student costs ln K") {
    const int batch = 3, old_k = 5;
    BatchView view;
    view.logits = Matrix(batch, 7, 0.0);  // equal logits -> uniform over the first K
    view.labels = {5, 6, 0};
    view.old_classes = old_k;
    view.teacher_probs = Matrix(batch, old_k, 0.0);
    for (int i = 0; i < batch; ++i) view.teacher_probs(i, 0) = 1.0;
    CHECK(vanilla_kd(view, 1.0).value == doctest::Approx(std::log(5.0)).epsilon(1e-14));
}

TEST_CASE("vanilla kd splits into old/new subset means weighted by fractions") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const int batch = 2 + static_cast<int>(rng.uniform_int(0, 30));
        const int old_k = 2 + static_cast<int>(rng.uniform_int(0, 3));
        const auto view = random_view(rng, batch, old_k + 3, old_k);
        const Vector terms = kd_per_sample(view.logits, view.teacher_probs, 2.0);

        double old_sum = 0.0, new_sum = 0.0;
        int old_n = 0;
        for (int i = 0; i < batch; ++i) {
            if (view.labels[i] < old_k) {
                old_sum += terms[i];
                ++old_n;
            } else {
                new_sum += terms[i];
            }
        }
        const int new_n = batch - old_n;
        double expected = 0.0;
        if (old_n > 0) expected += (double(old_n) / batch) * (old_sum / old_n);
        if (new_n > 0) expected += (double(new_n) / batch) * (new_sum / new_n);
        CHECK(vanilla_kd(view, 2.0).value == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("replay-only kd weights realize the hand example value 0.15") {
    // B = 4 with two old-class samples of distinct classes: weights must be
    // (B_old/B) / (|C_old| * n_c) = 0.25 on old samples and 0 on new ones,
    // so per-sample terms of magnitude [0.2, 0.4] aggregate to 0.15.
    Rng rng(2);
    auto view = random_view(rng, 4, 6, 2);
    view.labels = {0, 1, 4, 5};
    const auto agg = replay_only_kd(view, 2.0);
    CHECK(agg.per_sample_weights[0] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(agg.per_sample_weights[1] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(agg.per_sample_weights[2] == 0.0);
    CHECK(agg.per_sample_weights[3] == 0.0);
    CHECK(0.25 * 0.2 + 0.25 * 0.4 == doctest::Approx(0.15).epsilon(1e-15));
    const Vector terms = kd_per_sample(view.logits, view.teacher_probs, 2.0);
    CHECK(agg.value == doctest::Approx(weighted_sum(agg, terms)).epsilon(1e-13));
}

TEST_CASE("replay-only kd without old samples is exactly zero") {
    Rng rng(3);
    auto view = random_view(rng, 5, 6, 2);
    view.labels = {2, 3, 4, 5, 3};  // all new
    const auto agg = replay_only_kd(view, 2.0);
    CHECK(agg.value == 0.0);
    for (double w : agg.per_sample_weights) CHECK(w == 0.0);
}

TEST_CASE("one-per-class old-only batch makes replay-only equal vanilla") {
    Rng rng(4);
    auto view = random_view(rng, 3, 5, 3);
    view.labels = {0, 1, 2};
    CHECK(replay_only_kd(view, 2.0).value ==
          doctest::Approx(vanilla_kd(view, 2.0).value).epsilon(1e-13));
}

TEST_CASE("cwm kd on a balanced batch equals vanilla kd") {
    Rng rng(6);
    auto view = random_view(rng, 8, 6, 3);
    view.labels = {0, 0, 1, 1, 3, 3, 4, 4};
    CHECK(cwm_kd(view, 2.0).value == doctest::Approx(vanilla_kd(view, 2.0).value).epsilon(1e-13));
}

TEST_CASE("cwm kd hand example: labels [a,a,b], terms [0.2,0.4,0.6] give 0.45") {
    const auto agg = aggregate_cwm({0.2, 0.4, 0.6}, {0, 0, 1});
    CHECK(agg.value == doctest::Approx(0.45).epsilon(1e-15));
}

TEST_CASE("single-class batch cwm kd is the negated class mean of paper terms") {
    Rng rng(7);
    auto view = random_view(rng, 4, 5, 3);
    view.labels = {1, 1, 1, 1};
    const Vector terms = kd_per_sample(view.logits, view.teacher_probs, 2.0);
    double mean = 0.0;
    for (double t : terms) mean += t / 4;
    CHECK(cwm_kd(view, 2.0).value == doctest::Approx(mean).epsilon(1e-13));
}

TEST_CASE("an all-zero aux head costs ln(m+1)") {
    const int step_classes = 4;
    BatchView view;
    view.old_classes = 3;
    view.step_classes = step_classes;
    view.labels = {0, 3, 5, 6};
    view.logits = Matrix(4, 7, 0.0);
    view.aux_logits = Matrix(4, step_classes + 1, 0.0);
    CHECK(aux_ce(view).value ==
          doctest::Approx(std::log(double(step_classes + 1))).epsilon(1e-14));
}

TEST_CASE("aux ce equals instance-mean ce on the relabeled batch") {
    Rng rng(8);
    const int old_k = 3, step_classes = 2;
    auto view = random_view(rng, 6, old_k + step_classes, old_k);
    view.step_classes = step_classes;
    view.aux_logits = Matrix(6, step_classes + 1);
    for (double& z : view.aux_logits.data) z = rng.uniform(-2.0, 2.0);

    const auto relative = step_relative_labels(view.labels, old_k);
    const auto direct = aggregate_instance_mean(ce_per_sample(view.aux_logits, relative));
    CHECK(aux_ce(view).value == doctest::Approx(direct.value).epsilon(1e-14));
}

TEST_CASE("relative labels collapse old classes to the other slot") {
    CHECK(step_relative_labels({0, 2, 3, 5}, 3) == std::vector<int>{0, 0, 1, 3});
}

TEST_CASE("cwm aux hand example: groups [0,0,1] with terms [1,3,2] give 2") {
    const auto agg = aggregate_cwm({1.0, 3.0, 2.0}, {0, 0, 1});
    CHECK(agg.value == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("cwm aux with equal group sizes equals aux ce; old-only batch is one group") {
    Rng rng(10);
    const int old_k = 2, step_classes = 2;
    auto view = random_view(rng, 4, old_k + step_classes, old_k);
    view.step_classes = step_classes;
    view.aux_logits = Matrix(4, step_classes + 1);
    for (double& z : view.aux_logits.data) z = rng.uniform(-2.0, 2.0);

    view.labels = {2, 2, 3, 3};  // relative groups 1,1,2,2: equal sizes
    CHECK(cwm_aux_ce(view).value == doctest::Approx(aux_ce(view).value).epsilon(1e-13));

    view.labels = {0, 1, 0, 1};  // all old: single relative group
    const auto relative = step_relative_labels(view.labels, old_k);
    const auto terms = ce_per_sample(view.aux_logits, relative);
    double mean = 0.0;
    for (double t : terms) mean += t / 4;
    CHECK(cwm_aux_ce(view).value == doctest::Approx(mean).epsilon(1e-13));
}

TEST_CASE("every aggregate satisfies value == sum of weighted terms") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int batch = 1 + static_cast<int>(rng.uniform_int(0, 40));
        Vector terms(batch);
        std::vector<int> labels(batch);
        for (int i = 0; i < batch; ++i) {
            terms[i] = rng.uniform(-4.0, 4.0);
            labels[i] = static_cast<int>(rng.uniform_int(0, 5));
        }
        for (const auto& agg :
             {aggregate_instance_mean(terms), aggregate_classwise_decomposed(terms, labels),
              aggregate_cwm(terms, labels)}) {
            CHECK(std::abs(agg.value - weighted_sum(agg, terms)) <= 1e-12);
            for (double w : agg.per_sample_weights) CHECK(w >= 0.0);
        }
    }
}

TEST_CASE("infonce normalization is raw over ln n_eff") {
    CHECK(normalize_infonce(std::log(10.0), 10) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(normalize_infonce(0.0, 5) == 0.0);
    CHECK(normalize_infonce(2.3, 10) == doctest::Approx(2.3 / std::log(10.0)).epsilon(1e-15));
    CHECK_THROWS_AS(normalize_infonce(1.0, 1), std::invalid_argument);
}

TEST_CASE("kl normalization divides by the step class count, linearly") {
    CHECK(normalize_kl(1.7, 1) == 1.7);
    CHECK(normalize_kl(6.0, 3) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(normalize_kl(4.0 * 1.5, 4) == doctest::Approx(1.5 * normalize_kl(4.0, 4)).epsilon(1e-15));
    CHECK_THROWS_AS(normalize_kl(1.0, 0), std::invalid_argument);
}

TEST_CASE("weighted combination sums coefficient times value") {
    const std::array<std::pair<double, double>, 2> terms{{{2.0, 0.5}, {4.0, 0.25}}};
    CHECK(combine_weighted(terms) == doctest::Approx(2.0).epsilon(1e-15));
    const std::array<std::pair<double, double>, 1> one{{{3.25, 1.0}}};
    CHECK(combine_weighted(one) == 3.25);
    const std::array<std::pair<double, double>, 3> zeros{{{5.0, 0.0}, {7.0, 0.0}, {-2.0, 0.0}}};
    CHECK(combine_weighted(zeros) == 0.0);
}

TEST_CASE("missing teacher raises an error") {
    Rng rng(12);
    auto view = random_view(rng, 4, 5, 0);  // no teacher
    CHECK_THROWS_AS(vanilla_kd(view, 2.0), std::invalid_argument);
}

}  // TEST_SUITE
