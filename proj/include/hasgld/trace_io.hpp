#pragma once

#include "hasgld/samplers.hpp"
#include "hasgld/targets.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace hasgld {

// Shortest decimal form that parses back to the identical double; "inf",
// "-inf" and "nan" spellings round-trip too.
std::string format_double(double v);
double parse_double(const std::string& s);

// One row per retained sample: step index, then the parameter coordinates.
void write_trace_csv(const Trace& trace, const std::filesystem::path& path);

struct LoadedTrace {
  std::vector<Eigen::VectorXd> samples;
  std::vector<std::int64_t> sample_steps;
};

LoadedTrace read_trace_csv(const std::filesystem::path& path);

// Train and test rows in one file (split column), with generator settings in
// a JSON sidecar so a run can be replayed from disk.
void write_regression_dataset(const RegressionDataset& data, const std::filesystem::path& csv_path,
                              const std::filesystem::path& meta_path);
RegressionDataset read_regression_dataset(const std::filesystem::path& csv_path,
                                          const std::filesystem::path& meta_path);

}  // namespace hasgld
