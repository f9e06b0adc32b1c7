#include "ffcil/replay_buffer.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ffcil {

std::string to_string(ExemplarSelection s) {
    return s == ExemplarSelection::random ? "random" : "herding";
}

ExemplarSelection exemplar_selection_from_string(const std::string& s) {
    if (s == "random") return ExemplarSelection::random;
    if (s == "herding") return ExemplarSelection::herding;
    throw std::invalid_argument("unknown exemplar selection '" + s + "'");
}

int ReplayBuffer::total_stored() const {
    int n = 0;
    for (const auto& [label, exemplars] : store) n += static_cast<int>(exemplars.size());
    return n;
}

std::vector<LabeledExample> ReplayBuffer::all_examples() const {
    std::vector<LabeledExample> out;
    out.reserve(total_stored());
    for (const auto& [label, exemplars] : store)
        out.insert(out.end(), exemplars.begin(), exemplars.end());
    return out;
}

std::vector<int> herding_order(const std::vector<Vector>& candidates) {
    const int m = static_cast<int>(candidates.size());
    if (m == 0) return {};
    const int dim = static_cast<int>(candidates[0].size());

    Vector mean(dim, 0.0);
    for (const auto& v : candidates)
        for (int j = 0; j < dim; ++j) mean[j] += v[j];
    for (int j = 0; j < dim; ++j) mean[j] /= m;

    std::vector<int> order;
    order.reserve(m);
    std::vector<bool> taken(m, false);
    Vector chosen_sum(dim, 0.0);
    for (int k = 1; k <= m; ++k) {
        int best = -1;
        double best_err = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
            if (taken[i]) continue;
            double err = 0.0;
            for (int j = 0; j < dim; ++j) {
                const double running = (chosen_sum[j] + candidates[i][j]) / k;
                const double diff = mean[j] - running;
                err += diff * diff;
            }
            if (err < best_err) {
                best_err = err;
                best = i;
            }
        }
        taken[best] = true;
        order.push_back(best);
        for (int j = 0; j < dim; ++j) chosen_sum[j] += candidates[best][j];
    }
    return order;
}

void buffer_update(ReplayBuffer& buffer, const std::vector<LabeledExample>& step_train,
                   const std::vector<int>& new_classes, Rng& rng, const FeatureMap& feature_map) {
    const int seen = buffer.classes_seen() + static_cast<int>(new_classes.size());
    if (seen == 0) return;
    if (buffer.budget < seen)
        throw std::invalid_argument("buffer: budget " + std::to_string(buffer.budget) +
                                    " cannot keep one exemplar for each of " + std::to_string(seen) +
                                    " classes");
    const int quota = buffer.budget / seen;

    // existing classes keep only the head of their priority order
    for (auto& [label, exemplars] : buffer.store)
        if (static_cast<int>(exemplars.size()) > quota) exemplars.resize(quota);

    for (int label : new_classes) {
        std::vector<const LabeledExample*> pool;
        for (const auto& ex : step_train)
            if (ex.label == label) pool.push_back(&ex);
        if (pool.empty())
            throw std::invalid_argument("buffer: no training samples for new class " +
                                        std::to_string(label));

        std::vector<int> order(pool.size());
        std::iota(order.begin(), order.end(), 0);
        if (buffer.selection == ExemplarSelection::random) {
            rng.shuffle(order);
        } else {
            std::vector<Vector> embedded(pool.size());
            for (std::size_t i = 0; i < pool.size(); ++i)
                embedded[i] = feature_map ? feature_map(pool[i]->features) : pool[i]->features;
            order = herding_order(embedded);
        }

        std::vector<LabeledExample> kept;
        const int take = std::min<int>(quota, static_cast<int>(pool.size()));
        kept.reserve(take);
        for (int i = 0; i < take; ++i) kept.push_back(*pool[order[i]]);
        buffer.store[label] = std::move(kept);
    }
}

std::vector<MiniBatch> epoch_batches(const std::vector<LabeledExample>& current,
                                 const ReplayBuffer& buffer, int batch_size, Rng& rng) {
    if (current.empty()) throw std::invalid_argument("sampler: current-step data is empty");
    if (batch_size < 1) throw std::invalid_argument("sampler: batch_size must be >= 1");

    std::vector<const LabeledExample*> pool;
    pool.reserve(current.size() + buffer.total_stored());
    for (const auto& ex : current) pool.push_back(&ex);
    for (const auto& [label, exemplars] : buffer.store)
        for (const auto& ex : exemplars) pool.push_back(&ex);
    rng.shuffle(pool);

    const int dim = static_cast<int>(pool[0]->features.size());
    std::vector<MiniBatch> batches;
    for (std::size_t start = 0; start < pool.size(); start += batch_size) {
        const int n = static_cast<int>(std::min<std::size_t>(batch_size, pool.size() - start));
        MiniBatch batch;
        batch.inputs = Matrix(n, dim);
        batch.labels.resize(n);
        for (int i = 0; i < n; ++i) {
            const LabeledExample* ex = pool[start + i];
            std::copy(ex->features.begin(), ex->features.end(), batch.inputs.row(i));
            batch.labels[i] = ex->label;
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

MiniBatch sample_batch(const ReplayBuffer& buffer, const std::vector<LabeledExample>& current,
                   int batch_size, Rng& rng) {
    return epoch_batches(current, buffer, batch_size, rng).front();
}

}  // namespace ffcil
