#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ffcil/core.hpp"
#include "ffcil/schedule.hpp"

namespace ffcil {

struct LabeledExample {
    Vector features;
    int label = 0;

    bool operator==(const LabeledExample& o) const = default;
};

// Mini-batch of raw inputs plus labels, as produced by the batch sampler.
struct MiniBatch {
    Matrix inputs;  // B x d
    std::vector<int> labels;

    int size() const { return static_cast<int>(labels.size()); }
};

// A full labeled dataset before scheduling: every class's train and test
// samples, plus the generating class centers when synthetic.
struct DatasetSource {
    int num_classes = 0;
    int dim = 0;
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> test;
    Matrix class_centers;  // num_classes x dim; empty for imported data

    bool operator==(const DatasetSource& o) const = default;
};

// Per-step train/test partitions induced by an increment schedule.
struct DatasetSplit {
    int dim = 0;
    std::vector<std::vector<LabeledExample>> train_steps;
    std::vector<std::vector<LabeledExample>> test_steps;

    int num_steps() const { return static_cast<int>(train_steps.size()); }
};

// Synthetic class-conditional data: class c is an isotropic unit-variance
// Gaussian centered on a seeded random direction scaled by `separation`.
// Deterministic given the seed.
DatasetSource make_gaussian_dataset(int num_classes, int dim, int train_per_class,
                                    int test_per_class, double separation, std::uint64_t seed);

// Routes each class's samples to the step that introduces it. Source order is
// preserved within a step. Throws when schedule total != source num_classes.
DatasetSplit split_by_schedule(const DatasetSource& source, const IncrementSchedule& schedule);

// Plain-text matrix format: header line "d N", then N lines "label f_1 ... f_d".
std::vector<LabeledExample> read_examples_file(const std::string& path, int& dim_out);
void write_examples_file(const std::string& path, const std::vector<LabeledExample>& examples,
                         int dim);

// Builds a DatasetSource from two files in the plain-text matrix format.
DatasetSource import_dataset(const std::string& train_path, const std::string& test_path);

}  // namespace ffcil
