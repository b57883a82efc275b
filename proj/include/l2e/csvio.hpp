#pragma once

#include <string>
#include <utility>
#include <vector>

#include "l2e/core.hpp"
#include "l2e/curvefit.hpp"

namespace l2e {

struct IngestResult {
  Dataset data;
  std::string response_name;
  std::vector<std::string> feature_names;
  // Original response values mapped to 1/0 (classification only).
  double positive_label = 1.0;
  double negative_label = 0.0;
};

// Reads a numeric CSV with a header row. The response column is chosen by
// name, or by zero-based index when `response_column` is an integer that
// matches no header name. A response with exactly two distinct values
// becomes a classification target (larger value maps to 1); more values
// make a regression target; a constant response is rejected.
IngestResult ingest_csv(const std::string& path,
                        const std::string& response_column);

// Writes the dataset back out as CSV (response last). Used for fixtures
// and round-trip checks.
void write_dataset_csv(const std::string& path, const Dataset& data,
                       const std::vector<std::string>& feature_names = {},
                       const std::string& response_name = "response");

// Two-column trajectory file with header names n,estimate (extra columns
// are ignored). Rows must be ascending in n.
std::vector<std::pair<int, double>> read_trajectory_csv(
    const std::string& path);

// Samples the fitted curve at `points` evenly spaced values of n over
// [n_lo, n_hi], written as n,value rows.
void write_curve_csv(const std::string& path, const LearningCurve& curve,
                     double n_lo, double n_hi, int points = 200);

// Shortest round-trip decimal formatting shared by every writer, so
// identical runs produce identical bytes.
std::string format_double(double v);

}  // namespace l2e
