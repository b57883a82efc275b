#pragma once

#include <string>

#include "l2e/config.hpp"
#include "l2e/csvio.hpp"
#include "l2e/estimator.hpp"
#include "l2e/simharness.hpp"

namespace l2e {

// Full evaluation report as a JSON document: config echo, dataset
// summary, trajectory with per-split records, fitted curve parameters,
// and the bound block. Key order and number formatting are fixed so
// identical runs produce identical bytes.
std::string report_json(const RunConfig& config, const IngestResult& ingest,
                        const BoundReport& report);

// Curve parameters plus fitted values at the trajectory abscissas, for
// the standalone curve-fitting verb.
std::string curve_json(const LearningCurve& curve,
                       const LearningTrajectory& trajectory);

// Self-contained SVG: trajectory dots, fitted curve, point-estimate
// marker at the full size, a vertical line at n_opt, and the bound and
// bias-corrected bound as triangles.
std::string curve_svg(const BoundReport& report, int full_size);

// Study tables, one row per replicate. Cells for failed replicates or
// inapplicable fields (a baseline without a bias-corrected bound, a
// method without an n_opt) are left empty. Column names are
// "<method label>:<field>".
std::string coverage_csv(const CoverageStudy& study, Metric metric);
std::string rmse_bias_csv(const CoverageStudy& study);
std::string nopt_csv(const CoverageStudy& study);
// Signed conservative distance between bound and truth: truth - bound
// for an increasing metric's lower bound, bound - truth for a decreasing
// metric's upper bound. Nonnegative exactly when the bound covers.
std::string bound_distance_csv(const CoverageStudy& study, Metric metric);

// One row per method with the aggregates from MethodSummary.
std::string study_summary_csv(const CoverageStudy& study);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace l2e
