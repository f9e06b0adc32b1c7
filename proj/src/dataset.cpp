#include "ffcil/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ffcil/rng.hpp"

namespace ffcil {

namespace {

Vector random_direction(int dim, Rng& rng) {
    Vector v(dim);
    double norm = 0.0;
    do {
        for (int i = 0; i < dim; ++i) v[i] = rng.normal();
        norm = l2_norm(v);
    } while (norm < 1e-12);
    for (int i = 0; i < dim; ++i) v[i] /= norm;
    return v;
}

std::vector<LabeledExample> sample_class_block(const Matrix& centers, int per_class, Rng& rng) {
    std::vector<LabeledExample> out;
    out.reserve(static_cast<std::size_t>(centers.rows) * per_class);
    for (int c = 0; c < centers.rows; ++c) {
        for (int i = 0; i < per_class; ++i) {
            LabeledExample ex;
            ex.label = c;
            ex.features.resize(centers.cols);
            for (int j = 0; j < centers.cols; ++j) ex.features[j] = centers(c, j) + rng.normal();
            out.push_back(std::move(ex));
        }
    }
    return out;
}

}  // namespace

DatasetSource make_gaussian_dataset(int num_classes, int dim, int train_per_class,
                                    int test_per_class, double separation, std::uint64_t seed) {
    if (num_classes < 1 || train_per_class < 1 || test_per_class < 1)
        throw std::invalid_argument("dataset: class and per-class counts must be positive");
    if (dim < 2) throw std::invalid_argument("dataset: dim must be >= 2");
    if (separation < 0.0) throw std::invalid_argument("dataset: separation must be >= 0");

    DatasetSource source;
    source.num_classes = num_classes;
    source.dim = dim;
    source.class_centers = Matrix(num_classes, dim);

    Rng center_rng(derive_seed(seed, streams::kDatasetCenters));
    for (int c = 0; c < num_classes; ++c) {
        const Vector dir = random_direction(dim, center_rng);
        for (int j = 0; j < dim; ++j) source.class_centers(c, j) = separation * dir[j];
    }

    Rng train_rng(derive_seed(seed, streams::kDatasetTrain));
    source.train = sample_class_block(source.class_centers, train_per_class, train_rng);
    Rng test_rng(derive_seed(seed, streams::kDatasetTest));
    source.test = sample_class_block(source.class_centers, test_per_class, test_rng);
    return source;
}

DatasetSplit split_by_schedule(const DatasetSource& source, const IncrementSchedule& schedule) {
    if (schedule.total() != source.num_classes)
        throw std::invalid_argument("split: schedule total " + std::to_string(schedule.total()) +
                                    " != dataset classes " + std::to_string(source.num_classes));

    std::vector<int> step_of_class(source.num_classes, -1);
    for (int t = 0; t < schedule.num_steps(); ++t)
        for (int id : schedule.class_sets[t]) step_of_class[id] = t;

    DatasetSplit split;
    split.dim = source.dim;
    split.train_steps.resize(schedule.num_steps());
    split.test_steps.resize(schedule.num_steps());
    for (const auto& ex : source.train) split.train_steps[step_of_class[ex.label]].push_back(ex);
    for (const auto& ex : source.test) split.test_steps[step_of_class[ex.label]].push_back(ex);
    return split;
}

std::vector<LabeledExample> read_examples_file(const std::string& path, int& dim_out) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("dataset: cannot open '" + path + "'");
    int dim = 0;
    long long count = 0;
    if (!(in >> dim >> count) || dim < 1 || count < 0)
        throw std::runtime_error("dataset: bad header in '" + path + "', expected 'd N'");
    std::vector<LabeledExample> out;
    out.reserve(static_cast<std::size_t>(count));
    for (long long i = 0; i < count; ++i) {
        LabeledExample ex;
        if (!(in >> ex.label) || ex.label < 0)
            throw std::runtime_error("dataset: bad label on row " + std::to_string(i) + " of '" +
                                     path + "'");
        ex.features.resize(dim);
        for (int j = 0; j < dim; ++j) {
            if (!(in >> ex.features[j]))
                throw std::runtime_error("dataset: truncated row " + std::to_string(i) + " of '" +
                                         path + "'");
        }
        out.push_back(std::move(ex));
    }
    dim_out = dim;
    return out;
}

void write_examples_file(const std::string& path, const std::vector<LabeledExample>& examples,
                         int dim) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("dataset: cannot write '" + path + "'");
    out.precision(17);
    out << dim << " " << examples.size() << "\n";
    for (const auto& ex : examples) {
        out << ex.label;
        for (double f : ex.features) out << " " << f;
        out << "\n";
    }
}

DatasetSource import_dataset(const std::string& train_path, const std::string& test_path) {
    DatasetSource source;
    int train_dim = 0, test_dim = 0;
    source.train = read_examples_file(train_path, train_dim);
    source.test = read_examples_file(test_path, test_dim);
    if (train_dim != test_dim)
        throw std::runtime_error("dataset: train dim " + std::to_string(train_dim) +
                                 " != test dim " + std::to_string(test_dim));
    source.dim = train_dim;
    int max_label = -1;
    for (const auto& ex : source.train) max_label = std::max(max_label, ex.label);
    for (const auto& ex : source.test) max_label = std::max(max_label, ex.label);
    source.num_classes = max_label + 1;
    return source;
}

}  // namespace ffcil
