#pragma once

#include <functional>
#include <map>
#include <vector>

#include "ffcil/core.hpp"
#include "ffcil/dataset.hpp"
#include "ffcil/rng.hpp"

namespace ffcil {

enum class ExemplarSelection { random, herding };

std::string to_string(ExemplarSelection s);
ExemplarSelection exemplar_selection_from_string(const std::string& s);

// Optional embedding applied before herding distances; raw features if empty.
using FeatureMap = std::function<Vector(const Vector&)>;

// Fixed-budget per-class exemplar store. Stored lists are kept in selection
// priority order (herding order, or the seeded random draw order), so
// shrinking quotas always keep the best prefix.
struct ReplayBuffer {
    int budget = 0;
    ExemplarSelection selection = ExemplarSelection::random;
    std::map<int, std::vector<LabeledExample>> store;

    int classes_seen() const { return static_cast<int>(store.size()); }
    int total_stored() const;
    std::vector<LabeledExample> all_examples() const;  // concatenated in class order
};

// Greedy mean-matching order over `candidates`: pick k such that the running
// mean of the chosen prefix best approximates the candidate mean. Returns
// candidate indices in pick order.
std::vector<int> herding_order(const std::vector<Vector>& candidates);

// Re-quotas every stored class to floor(budget / classes_seen) and admits the
// step's new classes, filling each by the buffer's selection rule. Throws when
// the budget cannot keep at least one exemplar per seen class.
void buffer_update(ReplayBuffer& buffer, const std::vector<LabeledExample>& step_train,
                   const std::vector<int>& new_classes, Rng& rng, const FeatureMap& feature_map = {});

// One epoch of mixed mini-batches: a seeded shuffle of current-step data
// concatenated with everything in the buffer, chunked into batches. The last
// batch may be smaller. Every example appears exactly once per epoch.
std::vector<MiniBatch> epoch_batches(const std::vector<LabeledExample>& current,
                                     const ReplayBuffer& buffer, int batch_size, Rng& rng);

// The first mini-batch of a fresh shuffled epoch.
MiniBatch sample_batch(const ReplayBuffer& buffer, const std::vector<LabeledExample>& current,
                       int batch_size, Rng& rng);

}  // namespace ffcil
