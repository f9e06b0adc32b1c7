#pragma once

#include <string>

#include "ffcil/metrics.hpp"

namespace ffcil {

// JSON form of a run report. The canonical text excludes wall-clock fields,
// which are the one nondeterministic part of a run; determinism guarantees
// are stated over the canonical form.
std::string report_to_json_text(const RunReport& report, bool include_timing = true);
std::string canonical_report_text(const RunReport& report);

void write_run_report(const std::string& path, const RunReport& report);
RunReport read_run_report(const std::string& path);

// Structural validation of an emitted report file: required keys, matching
// array lengths, A_T equal to the last step accuracy, prediction bias summing
// to one. Throws std::runtime_error describing the first problem.
void check_report_file(const std::string& path);

}  // namespace ffcil
