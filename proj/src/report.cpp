#include "ffcil/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace ffcil {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (int r = 0; r < m.rows; ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols; ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& rows) {
    Matrix m;
    m.rows = static_cast<int>(rows.size());
    m.cols = m.rows == 0 ? 0 : static_cast<int>(rows.at(0).size());
    m.data.reserve(static_cast<std::size_t>(m.rows) * m.cols);
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != m.cols)
            throw std::runtime_error("report: ragged confusion matrix");
        for (const auto& v : row) m.data.push_back(v.get<double>());
    }
    return m;
}

json report_to_json(const RunReport& report, bool include_timing) {
    json j;
    j["config"] = report.config_text;
    j["schedule"]["counts"] = report.schedule.counts;
    j["schedule"]["class_sets"] = report.schedule.class_sets;
    j["schedule"]["text"] = schedule_to_text(report.schedule);

    json steps = json::array();
    for (const auto& s : report.steps) {
        json step;
        step["step"] = s.step;
        step["accuracy"] = s.accuracy;
        step["per_task"] = s.per_task;
        step["confusion"] = matrix_to_json(s.confusion);
        step["prediction_bias"] = s.prediction_bias;
        step["alignment_scale"] = s.alignment_scale;
        if (include_timing) step["wall_ms"] = s.wall_ms;
        steps.push_back(std::move(step));
    }
    j["steps"] = std::move(steps);

    j["final"]["a_T"] = report.final_accuracy;
    j["final"]["forgetting"] = report.forgetting;
    j["final"]["forgetting_first_seen"] = report.forgetting_first_seen;
    j["final"]["mean_step_accuracy"] = report.mean_step_accuracy;
    if (include_timing) j["final"]["total_wall_ms"] = report.total_wall_ms;
    return j;
}

}  // namespace

std::string report_to_json_text(const RunReport& report, bool include_timing) {
    return report_to_json(report, include_timing).dump(2) + "\n";
}

std::string canonical_report_text(const RunReport& report) {
    return report_to_json_text(report, false);
}

void write_run_report(const std::string& path, const RunReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("report: cannot write '" + path + "'");
    out << report_to_json_text(report, true);
}

RunReport read_run_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("report: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("report: '" + path + "' is not valid JSON: " + e.what());
    }

    RunReport report;
    report.config_text = j.at("config").get<std::string>();
    report.schedule.counts = j.at("schedule").at("counts").get<std::vector<int>>();
    report.schedule.class_sets =
        j.at("schedule").at("class_sets").get<std::vector<std::vector<int>>>();
    for (const auto& step : j.at("steps")) {
        StepMetrics s;
        s.step = step.at("step").get<int>();
        s.accuracy = step.at("accuracy").get<double>();
        s.per_task = step.at("per_task").get<std::vector<double>>();
        s.confusion = matrix_from_json(step.at("confusion"));
        s.prediction_bias = step.at("prediction_bias").get<std::vector<double>>();
        s.alignment_scale = step.at("alignment_scale").get<double>();
        if (step.contains("wall_ms")) s.wall_ms = step.at("wall_ms").get<double>();
        report.steps.push_back(std::move(s));
    }
    report.final_accuracy = j.at("final").at("a_T").get<double>();
    report.forgetting = j.at("final").at("forgetting").get<double>();
    report.forgetting_first_seen = j.at("final").at("forgetting_first_seen").get<double>();
    report.mean_step_accuracy = j.at("final").at("mean_step_accuracy").get<double>();
    if (j.at("final").contains("total_wall_ms"))
        report.total_wall_ms = j.at("final").at("total_wall_ms").get<double>();
    return report;
}

void check_report_file(const std::string& path) {
    const RunReport report = read_run_report(path);
    if (report.config_text.empty()) throw std::runtime_error(path + ": empty config echo");
    if (report.steps.empty()) throw std::runtime_error(path + ": no steps");
    const auto validation = validate_schedule(report.schedule, report.schedule.total());
    if (!validation.ok())
        throw std::runtime_error(path + ": invalid schedule (" + validation.detail + ")");
    if (static_cast<int>(report.steps.size()) != report.schedule.num_steps())
        throw std::runtime_error(path + ": step count != schedule length");
    if (report.final_accuracy != report.steps.back().accuracy)
        throw std::runtime_error(path + ": a_T differs from the last step accuracy");
    for (const auto& s : report.steps) {
        if (static_cast<int>(s.per_task.size()) != s.step)
            throw std::runtime_error(path + ": step " + std::to_string(s.step) +
                                     " has a bad per_task length");
        double bias_sum = 0.0;
        for (double b : s.prediction_bias) bias_sum += b;
        if (std::abs(bias_sum - 1.0) > 1e-9)
            throw std::runtime_error(path + ": step " + std::to_string(s.step) +
                                     " prediction bias does not sum to 1");
        const double trace_accuracy = accuracy_from_confusion(s.confusion);
        if (std::abs(trace_accuracy - s.accuracy) > 1e-9)
            throw std::runtime_error(path + ": step " + std::to_string(s.step) +
                                     " accuracy differs from confusion trace");
    }
}

}  // namespace ffcil
