#pragma once

#include <optional>
#include <string>
#include <vector>

#include "driftwatch/datagen.hpp"
#include "driftwatch/detector.hpp"

namespace driftwatch {

struct StreamCsv {
  std::size_t dimensions = 0;
  std::vector<StreamSample> samples;
  // Present when the header ends with a `label` column.
  std::optional<std::vector<int>> labels;
};

/// Header `t,value` or `t,dim_0,...,dim_{d-1}`, optionally followed by
/// `label`. Throws InputError with the line number on malformed input.
StreamCsv parse_stream_csv(const std::string& text);

/// Writes the scenario in the layout parse_stream_csv reads; labeled
/// scenarios get a trailing label column.
std::string scenario_to_csv(const Scenario& s);

std::string trace_to_csv(const std::vector<TraceRow>& rows);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

}  // namespace driftwatch
