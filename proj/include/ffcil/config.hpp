#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ffcil/dataset.hpp"
#include "ffcil/schedule.hpp"
#include "ffcil/trainer.hpp"

namespace ffcil {

// Parse failure with the offending line and key attached.
class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, std::string key, const std::string& message)
        : std::runtime_error("config line " + std::to_string(line) + " (" + key + "): " + message),
          line_(line),
          key_(std::move(key)) {}

    int line() const { return line_; }
    const std::string& key() const { return key_; }

private:
    int line_;
    std::string key_;
};

struct DatasetConfig {
    enum class Kind { synthetic, import };
    Kind kind = Kind::synthetic;
    int classes = 20;
    int dim = 16;
    int train_per_class = 30;
    int test_per_class = 20;
    double separation = 3.0;
    std::string train_path;
    std::string test_path;

    bool operator==(const DatasetConfig& o) const = default;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    ScheduleSpec schedule;  // per-run seed injected at run time
    MethodPreset method;
    TrainConfig train;
    std::vector<std::uint64_t> seeds = {1};
    std::string out_dir = "ffcil-out";
    int jobs = 1;

    bool operator==(const ExperimentConfig& o) const = default;
};

// Config defaults: 20-class synthetic Gaussians, a 4-step equal schedule over
// all classes, the kd_replay preset, one seed.
ExperimentConfig default_config();

// Parses the section-header + `key = value` grammar ('#' and ';' start
// comments). Unknown keys, type mismatches and violated invariants raise
// ConfigError with the line and key. Omitted keys keep their defaults;
// schedule.total_classes defaults to dataset.classes.
ExperimentConfig parse_config(const std::string& text);

// Canonical text form with every effective value spelled out;
// parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

// Applies `section.key=value` assignments on top of a config text.
std::string apply_overrides(const std::string& text, const std::vector<std::string>& overrides);

std::string format_double(double v);  // shortest round-trip decimal form

}  // namespace ffcil
