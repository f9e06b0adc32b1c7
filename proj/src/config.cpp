#include "ffcil/config.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

namespace ffcil {

namespace {

std::string trim(const std::string& s) {
    std::size_t begin = 0, end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

struct Entry {
    std::string value;
    int line = 0;
    bool used = false;
};

using EntryMap = std::map<std::string, Entry>;

EntryMap tokenize(const std::string& text) {
    EntryMap entries;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(line_no, line, "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError(line_no, line, "empty section name");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(line_no, line, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(line_no, line, "empty key");
        if (section.empty()) throw ConfigError(line_no, key, "key outside any [section]");
        entries[section + "." + key] = Entry{trim(line.substr(eq + 1)), line_no, false};
    }
    return entries;
}

class Reader {
public:
    explicit Reader(EntryMap entries) : entries_(std::move(entries)) {}

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        it->second.used = true;
        return it->second.value;
    }

    long long get_int(const std::string& key, long long fallback) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        it->second.used = true;
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(it->second.value, &pos);
            if (pos != it->second.value.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw ConfigError(it->second.line, key, "expected an integer, got '" + it->second.value + "'");
        }
    }

    double get_double(const std::string& key, double fallback) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        it->second.used = true;
        try {
            std::size_t pos = 0;
            const double v = std::stod(it->second.value, &pos);
            if (pos != it->second.value.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw ConfigError(it->second.line, key, "expected a number, got '" + it->second.value + "'");
        }
    }

    bool get_bool(const std::string& key, bool fallback) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        it->second.used = true;
        const std::string& v = it->second.value;
        if (v == "true" || v == "yes" || v == "1") return true;
        if (v == "false" || v == "no" || v == "0") return false;
        throw ConfigError(it->second.line, key, "expected a boolean, got '" + v + "'");
    }

    template <typename T>
    std::vector<T> get_list(const std::string& key, const std::vector<T>& fallback) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        it->second.used = true;
        std::vector<T> out;
        std::istringstream is(it->second.value);
        std::string token;
        while (is >> token) {
            try {
                if constexpr (std::is_same_v<T, int>) {
                    out.push_back(std::stoi(token));
                } else {
                    out.push_back(static_cast<T>(std::stoull(token)));
                }
            } catch (...) {
                throw ConfigError(it->second.line, key, "bad list element '" + token + "'");
            }
        }
        return out;
    }

    // Enum-ish values parsed through their from_string converters.
    template <typename T, typename Fn>
    T get_enum(const std::string& key, T fallback, Fn from_string) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        it->second.used = true;
        try {
            return from_string(it->second.value);
        } catch (const std::exception& e) {
            throw ConfigError(it->second.line, key, e.what());
        }
    }

    void check_range(bool ok, const std::string& key, const std::string& message) const {
        if (ok) return;
        auto it = entries_.find(key);
        const int line = it == entries_.end() ? 0 : it->second.line;
        throw ConfigError(line, key, message);
    }

    void reject_unknown() const {
        for (const auto& [key, entry] : entries_)
            if (!entry.used) throw ConfigError(entry.line, key, "unknown key");
    }

private:
    EntryMap entries_;
};

}  // namespace

ExperimentConfig default_config() { return ExperimentConfig{}; }

ExperimentConfig parse_config(const std::string& text) {
    Reader reader(tokenize(text));
    ExperimentConfig config;

    // [dataset]
    {
        const std::string kind = reader.get_string("dataset.kind", "synthetic");
        if (kind == "synthetic") {
            config.dataset.kind = DatasetConfig::Kind::synthetic;
        } else if (kind == "import") {
            config.dataset.kind = DatasetConfig::Kind::import;
        } else {
            reader.check_range(false, "dataset.kind", "must be 'synthetic' or 'import'");
        }
        config.dataset.classes = static_cast<int>(reader.get_int("dataset.classes", config.dataset.classes));
        config.dataset.dim = static_cast<int>(reader.get_int("dataset.dim", config.dataset.dim));
        config.dataset.train_per_class =
            static_cast<int>(reader.get_int("dataset.train_per_class", config.dataset.train_per_class));
        config.dataset.test_per_class =
            static_cast<int>(reader.get_int("dataset.test_per_class", config.dataset.test_per_class));
        config.dataset.separation = reader.get_double("dataset.separation", config.dataset.separation);
        config.dataset.train_path = reader.get_string("dataset.train_path", "");
        config.dataset.test_path = reader.get_string("dataset.test_path", "");
        reader.check_range(config.dataset.classes >= 1, "dataset.classes", "must be >= 1");
        reader.check_range(config.dataset.dim >= 2, "dataset.dim", "must be >= 2");
        reader.check_range(config.dataset.train_per_class >= 1, "dataset.train_per_class", "must be >= 1");
        reader.check_range(config.dataset.test_per_class >= 1, "dataset.test_per_class", "must be >= 1");
        reader.check_range(config.dataset.separation >= 0.0, "dataset.separation", "must be >= 0");
        if (config.dataset.kind == DatasetConfig::Kind::import) {
            reader.check_range(!config.dataset.train_path.empty(), "dataset.train_path",
                               "required for import datasets");
            reader.check_range(!config.dataset.test_path.empty(), "dataset.test_path",
                               "required for import datasets");
        }
    }

    // [schedule]
    {
        config.schedule.kind = reader.get_enum("schedule.kind", ScheduleKind::equal,
                                               schedule_kind_from_string);
        config.schedule.total_classes = static_cast<int>(
            reader.get_int("schedule.total_classes", 0));
        if (config.schedule.total_classes == 0)
            config.schedule.total_classes = config.dataset.classes;
        config.schedule.num_steps = static_cast<int>(reader.get_int("schedule.num_steps", 4));
        config.schedule.min_per_step = static_cast<int>(reader.get_int("schedule.min_per_step", 1));
        config.schedule.max_per_step = static_cast<int>(reader.get_int("schedule.max_per_step", 0));
        config.schedule.explicit_counts = reader.get_list<int>("schedule.counts", {});
        reader.check_range(config.schedule.num_steps >= 1, "schedule.num_steps", "must be >= 1");
        reader.check_range(config.schedule.min_per_step >= 1, "schedule.min_per_step",
                           "must be >= 1 (free-flow lower bound)");
        reader.check_range(config.schedule.max_per_step == 0 ||
                               config.schedule.max_per_step >= config.schedule.min_per_step,
                           "schedule.max_per_step", "must be 0 (no cap) or >= min_per_step");
        if (config.schedule.kind != ScheduleKind::explicit_counts) {
            const long long lo =
                static_cast<long long>(config.schedule.num_steps) * config.schedule.min_per_step;
            const long long hi = static_cast<long long>(config.schedule.num_steps) *
                                 config.schedule.effective_max();
            reader.check_range(config.schedule.total_classes >= lo, "schedule.total_classes",
                               "below num_steps * min_per_step");
            reader.check_range(config.schedule.total_classes <= hi, "schedule.total_classes",
                               "above num_steps * max_per_step");
        } else {
            reader.check_range(!config.schedule.explicit_counts.empty(), "schedule.counts",
                               "required for the explicit kind");
        }
    }

    // [method]
    {
        config.method = make_preset(reader.get_enum("method.preset", PresetName::kd_replay,
                                                    preset_name_from_string));
        config.method.main_loss = reader.get_enum("method.main_loss", config.method.main_loss,
                                                  main_loss_from_string);
        config.method.kd = reader.get_enum("method.kd", config.method.kd, kd_mode_from_string);
        config.method.kd_coeff = reader.get_double("method.kd_coeff", config.method.kd_coeff);
        config.method.kd_temperature =
            reader.get_double("method.kd_temperature", config.method.kd_temperature);
        config.method.kd_renormalize =
            reader.get_bool("method.kd_renormalize", config.method.kd_renormalize);
        config.method.aux = reader.get_enum("method.aux", config.method.aux, aux_mode_from_string);
        config.method.aux_coeff = reader.get_double("method.aux_coeff", config.method.aux_coeff);
        config.method.normalize_surrogates =
            reader.get_bool("method.normalize_surrogates", config.method.normalize_surrogates);
        reader.check_range(config.method.kd_coeff >= 0.0, "method.kd_coeff", "must be >= 0");
        reader.check_range(config.method.kd_temperature > 0.0, "method.kd_temperature",
                           "must be > 0");
        reader.check_range(config.method.aux_coeff >= 0.0, "method.aux_coeff", "must be >= 0");
    }

    // [alignment]
    {
        config.method.alignment.mode = reader.get_enum("alignment.mode", config.method.alignment.mode,
                                                       alignment_mode_from_string);
        config.method.alignment.eta_min =
            reader.get_double("alignment.eta_min", config.method.alignment.eta_min);
        config.method.alignment.tau = reader.get_double("alignment.tau", config.method.alignment.tau);
        reader.check_range(
            config.method.alignment.eta_min >= 0.0 && config.method.alignment.eta_min <= 1.0,
            "alignment.eta_min", "must lie in [0, 1]");
        reader.check_range(config.method.alignment.tau > 0.0, "alignment.tau", "must be > 0");
    }

    // [train]
    {
        config.train.epochs = static_cast<int>(reader.get_int("train.epochs", config.train.epochs));
        config.train.batch_size =
            static_cast<int>(reader.get_int("train.batch_size", config.train.batch_size));
        config.train.learning_rate =
            reader.get_double("train.learning_rate", config.train.learning_rate);
        config.train.momentum = reader.get_double("train.momentum", config.train.momentum);
        config.train.weight_decay =
            reader.get_double("train.weight_decay", config.train.weight_decay);
        config.train.buffer_budget =
            static_cast<int>(reader.get_int("train.buffer_budget", config.train.buffer_budget));
        config.train.buffer_selection = reader.get_enum(
            "train.buffer_selection", config.train.buffer_selection, exemplar_selection_from_string);
        config.train.hidden_width =
            static_cast<int>(reader.get_int("train.hidden_width", config.train.hidden_width));
        config.train.head_init =
            reader.get_enum("train.head_init", config.train.head_init, head_init_from_string);
        reader.check_range(config.train.epochs >= 1, "train.epochs", "must be >= 1");
        reader.check_range(config.train.batch_size >= 1, "train.batch_size", "must be >= 1");
        reader.check_range(config.train.learning_rate > 0.0, "train.learning_rate", "must be > 0");
        reader.check_range(config.train.momentum >= 0.0 && config.train.momentum < 1.0,
                           "train.momentum", "must lie in [0, 1)");
        reader.check_range(config.train.weight_decay >= 0.0, "train.weight_decay", "must be >= 0");
        reader.check_range(config.train.buffer_budget >= 1, "train.buffer_budget", "must be >= 1");
        reader.check_range(config.train.hidden_width >= 0, "train.hidden_width", "must be >= 0");
    }

    // [run]
    {
        config.seeds = reader.get_list<std::uint64_t>("run.seeds", config.seeds);
        config.out_dir = reader.get_string("run.out_dir", config.out_dir);
        config.jobs = static_cast<int>(reader.get_int("run.jobs", config.jobs));
        reader.check_range(!config.seeds.empty(), "run.seeds", "must list at least one seed");
        reader.check_range(config.jobs >= 1, "run.jobs", "must be >= 1");
    }

    reader.reject_unknown();
    return config;
}

std::string format_double(double v) {
    for (int precision = 1; precision <= 17; ++precision) {
        std::ostringstream os;
        os.precision(precision);
        os << v;
        double parsed = 0.0;
        std::istringstream(os.str()) >> parsed;
        if (parsed == v) return os.str();
    }
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string serialize_config(const ExperimentConfig& config) {
    std::ostringstream os;
    os << "[dataset]\n";
    os << "kind = " << (config.dataset.kind == DatasetConfig::Kind::synthetic ? "synthetic" : "import")
       << "\n";
    if (config.dataset.kind == DatasetConfig::Kind::import) {
        os << "train_path = " << config.dataset.train_path << "\n";
        os << "test_path = " << config.dataset.test_path << "\n";
    }
    os << "classes = " << config.dataset.classes << "\n";
    os << "dim = " << config.dataset.dim << "\n";
    os << "train_per_class = " << config.dataset.train_per_class << "\n";
    os << "test_per_class = " << config.dataset.test_per_class << "\n";
    os << "separation = " << format_double(config.dataset.separation) << "\n";

    os << "\n[schedule]\n";
    os << "kind = " << to_string(config.schedule.kind) << "\n";
    os << "total_classes = " << config.schedule.total_classes << "\n";
    os << "num_steps = " << config.schedule.num_steps << "\n";
    os << "min_per_step = " << config.schedule.min_per_step << "\n";
    os << "max_per_step = " << config.schedule.max_per_step << "\n";
    if (!config.schedule.explicit_counts.empty()) {
        os << "counts =";
        for (int c : config.schedule.explicit_counts) os << " " << c;
        os << "\n";
    }

    os << "\n[method]\n";
    os << "preset = " << to_string(config.method.name) << "\n";
    os << "main_loss = " << to_string(config.method.main_loss) << "\n";
    os << "kd = " << to_string(config.method.kd) << "\n";
    os << "kd_coeff = " << format_double(config.method.kd_coeff) << "\n";
    os << "kd_temperature = " << format_double(config.method.kd_temperature) << "\n";
    os << "kd_renormalize = " << (config.method.kd_renormalize ? "true" : "false") << "\n";
    os << "aux = " << to_string(config.method.aux) << "\n";
    os << "aux_coeff = " << format_double(config.method.aux_coeff) << "\n";
    os << "normalize_surrogates = " << (config.method.normalize_surrogates ? "true" : "false")
       << "\n";

    os << "\n[alignment]\n";
    os << "mode = " << to_string(config.method.alignment.mode) << "\n";
    os << "eta_min = " << format_double(config.method.alignment.eta_min) << "\n";
    os << "tau = " << format_double(config.method.alignment.tau) << "\n";

    os << "\n[train]\n";
    os << "epochs = " << config.train.epochs << "\n";
    os << "batch_size = " << config.train.batch_size << "\n";
    os << "learning_rate = " << format_double(config.train.learning_rate) << "\n";
    os << "momentum = " << format_double(config.train.momentum) << "\n";
    os << "weight_decay = " << format_double(config.train.weight_decay) << "\n";
    os << "buffer_budget = " << config.train.buffer_budget << "\n";
    os << "buffer_selection = " << to_string(config.train.buffer_selection) << "\n";
    os << "hidden_width = " << config.train.hidden_width << "\n";
    os << "head_init = " << to_string(config.train.head_init) << "\n";

    os << "\n[run]\n";
    os << "seeds =";
    for (std::uint64_t s : config.seeds) os << " " << s;
    os << "\n";
    os << "out_dir = " << config.out_dir << "\n";
    os << "jobs = " << config.jobs << "\n";
    return os.str();
}

std::string apply_overrides(const std::string& text, const std::vector<std::string>& overrides) {
    if (overrides.empty()) return text;
    std::ostringstream os;
    os << text;
    for (const std::string& item : overrides) {
        const std::size_t eq = item.find('=');
        const std::size_t dot = item.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw std::invalid_argument("override '" + item + "' must look like section.key=value");
        const std::string section = trim(item.substr(0, dot));
        const std::string key = trim(item.substr(dot + 1, eq - dot - 1));
        const std::string value = trim(item.substr(eq + 1));
        os << "\n[" << section << "]\n" << key << " = " << value << "\n";
    }
    return os.str();
}

}  // namespace ffcil
