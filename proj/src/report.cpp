#include "l2e/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "l2e/curvefit.hpp"

namespace l2e {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json config_block(const RunConfig& c) {
  ordered_json j;
  j["input"] = c.input;
  j["response"] = c.response;
  j["task"] = c.task;
  j["metric"] = c.metric;
  j["learner"] = c.learner;
  j["penalty"] = c.penalty;
  j["cv_folds"] = c.cv_folds;
  j["cv_repeats"] = c.cv_repeats;
  j["grid_size"] = c.grid_size;
  j["trees"] = c.trees;
  j["mtry"] = c.mtry;
  j["min_leaf"] = c.min_leaf;
  j["fitter"] = c.fitter;
  j["selection"] = c.selection;
  j["margin"] = c.margin;
  j["alpha"] = c.alpha;
  j["spline_degree"] = c.spline_degree;
  j["spline_knots"] = c.spline_knots;
  j["n_min"] = c.n_min;
  j["n_max"] = c.n_max;
  j["grid_count"] = c.grid_count;
  j["repeats"] = c.repeats;
  j["min_test"] = c.min_test;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["output_dir"] = c.output_dir;
  return j;
}

ordered_json split_block(const SplitEstimate& s) {
  ordered_json j;
  j["repeat"] = s.repeat_index;
  j["estimate"] = s.estimate;
  j["bound"] = s.bound;
  j["test_pos"] = s.test_pos;
  j["test_neg"] = s.test_neg;
  return j;
}

ordered_json curve_block(const LearningCurve& curve) {
  ordered_json j;
  if (const auto* p = std::get_if<PowerLawFit>(&curve)) {
    j["model"] = "power_law";
    j["direction"] =
        p->direction == Direction::increasing ? "increasing" : "decreasing";
    j["delta"] = p->delta;
    j["beta"] = p->beta;
    j["gamma"] = p->gamma;
    j["residual_sse"] = p->residual_sse;
    j["degenerate"] = p->degenerate;
  } else {
    const auto& s = std::get<SplineFit>(curve);
    j["model"] = "spline";
    j["direction"] =
        s.direction == Direction::increasing ? "increasing" : "decreasing";
    j["degree"] = s.basis.degree();
    j["lo"] = s.basis.lo();
    j["hi"] = s.basis.hi();
    j["interior_knots"] = s.basis.interior_knots();
    std::vector<double> theta(s.theta.data(), s.theta.data() + s.theta.size());
    j["coefficients"] = theta;
    j["l1_objective"] = s.l1_objective;
    j["active_monotone"] = s.active_monotone;
    j["active_curvature"] = s.active_curvature;
  }
  return j;
}

std::string fixed2(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

bool usable(double v) { return std::isfinite(v); }

void append_cell(std::string& out, double v) {
  out += ',';
  if (usable(v)) out += format_double(v);
}

}  // namespace

std::string report_json(const RunConfig& config, const IngestResult& ingest,
                        const BoundReport& report) {
  ordered_json j;
  j["config"] = config_block(config);

  ordered_json d;
  d["rows"] = ingest.data.n_rows();
  d["features"] = ingest.data.n_features();
  d["response"] = ingest.response_name;
  d["task"] = to_string(ingest.data.task);
  d["metric"] = to_string(report.metric);
  if (ingest.data.task == Task::classification) {
    const int pos = ingest.data.count_positive();
    d["positives"] = pos;
    d["negatives"] = ingest.data.n_rows() - pos;
    d["positive_label"] = ingest.positive_label;
    d["negative_label"] = ingest.negative_label;
  }
  j["dataset"] = d;

  const LearningTrajectory& tr = report.trajectory;
  ordered_json t;
  t["metric"] = to_string(tr.metric);
  t["alpha"] = tr.alpha;
  t["repeats"] = tr.repeats;
  t["points"] = ordered_json::array();
  for (std::size_t i = 0; i < tr.points.size(); ++i) {
    ordered_json p;
    p["n"] = tr.points[i].size;
    p["estimate"] = tr.points[i].estimate;
    p["penalty"] = tr.penalties[i];
    ordered_json splits = ordered_json::array();
    for (const auto& s : tr.splits[i]) splits.push_back(split_block(s));
    p["splits"] = std::move(splits);
    t["points"].push_back(std::move(p));
  }
  j["trajectory"] = std::move(t);

  j["curve"] = curve_block(report.curve);
  j["fitter_used"] = to_string(report.fitter_used);

  ordered_json e;
  e["point_estimate"] = report.point_estimate;
  e["n_opt"] = report.n_opt;
  e["bound"] = report.bound;
  e["bound_bc"] = report.bound_bc;
  e["empirical_bias"] = report.empirical_bias;
  e["alpha"] = report.alpha;
  e["selection_rule"] = to_string(report.selection_rule);
  j["estimate"] = std::move(e);

  ordered_json bs = ordered_json::array();
  for (const auto& s : report.bound_splits) bs.push_back(split_block(s));
  j["bound_splits"] = std::move(bs);

  ordered_json flags;
  flags["margin_violated"] = report.margin_violated;
  flags["s_shape_refit"] = report.s_shape_refit;
  flags["recommend_more_samples"] = report.recommend_more_samples;
  j["flags"] = std::move(flags);

  return j.dump(2) + "\n";
}

std::string curve_json(const LearningCurve& curve,
                       const LearningTrajectory& trajectory) {
  ordered_json j;
  j["metric"] = to_string(trajectory.metric);
  j["curve"] = curve_block(curve);
  ordered_json fitted = ordered_json::array();
  for (const auto& p : trajectory.points) {
    ordered_json row;
    row["n"] = p.size;
    row["estimate"] = p.estimate;
    row["value"] = evaluate_curve(curve, p.size);
    fitted.push_back(std::move(row));
  }
  j["fitted"] = std::move(fitted);
  return j.dump(2) + "\n";
}

std::string curve_svg(const BoundReport& report, int full_size) {
  const auto& points = report.trajectory.points;
  const double n_lo = points.front().size;
  const double n_hi = full_size;

  const int samples = 200;
  std::vector<std::pair<double, double>> curve(samples);
  for (int i = 0; i < samples; ++i) {
    const double n = n_lo + (n_hi - n_lo) * i / (samples - 1);
    curve[i] = {n, evaluate_curve(report.curve, n)};
  }

  double y_min = report.point_estimate, y_max = report.point_estimate;
  auto fold = [&](double v) {
    if (!std::isfinite(v)) return;
    y_min = std::min(y_min, v);
    y_max = std::max(y_max, v);
  };
  for (const auto& p : points) fold(p.estimate);
  for (const auto& [n, v] : curve) fold(v);
  fold(report.bound);
  fold(report.bound_bc);
  double pad = 0.05 * (y_max - y_min);
  if (pad <= 0.0) pad = 0.05;
  y_min -= pad;
  y_max += pad;

  const double left = 70, right = 780, top = 30, bottom = 450;
  auto sx = [&](double n) {
    return left + (n - n_lo) / (n_hi - n_lo) * (right - left);
  };
  auto sy = [&](double v) {
    return bottom - (v - y_min) / (y_max - y_min) * (bottom - top);
  };

  std::stringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" "
         "height=\"500\" viewBox=\"0 0 800 500\">\n";
  svg << "  <rect width=\"800\" height=\"500\" fill=\"#ffffff\"/>\n";

  // axes with five ticks per side
  svg << "  <g stroke=\"#000000\" stroke-width=\"1\">\n";
  svg << "    <line x1=\"" << fixed2(left) << "\" y1=\"" << fixed2(bottom)
      << "\" x2=\"" << fixed2(right) << "\" y2=\"" << fixed2(bottom)
      << "\"/>\n";
  svg << "    <line x1=\"" << fixed2(left) << "\" y1=\"" << fixed2(top)
      << "\" x2=\"" << fixed2(left) << "\" y2=\"" << fixed2(bottom)
      << "\"/>\n";
  svg << "  </g>\n";
  svg << "  <g font-family=\"sans-serif\" font-size=\"12\" "
         "fill=\"#000000\">\n";
  for (int i = 0; i < 5; ++i) {
    const double n = n_lo + (n_hi - n_lo) * i / 4.0;
    svg << "    <line x1=\"" << fixed2(sx(n)) << "\" y1=\"" << fixed2(bottom)
        << "\" x2=\"" << fixed2(sx(n)) << "\" y2=\"" << fixed2(bottom + 5)
        << "\" stroke=\"#000000\"/>\n";
    svg << "    <text x=\"" << fixed2(sx(n)) << "\" y=\"" << fixed2(bottom + 18)
        << "\" text-anchor=\"middle\">" << tick_label(n) << "</text>\n";
  }
  for (int i = 0; i < 5; ++i) {
    const double v = y_min + (y_max - y_min) * i / 4.0;
    svg << "    <line x1=\"" << fixed2(left - 5) << "\" y1=\"" << fixed2(sy(v))
        << "\" x2=\"" << fixed2(left) << "\" y2=\"" << fixed2(sy(v))
        << "\" stroke=\"#000000\"/>\n";
    svg << "    <text x=\"" << fixed2(left - 8) << "\" y=\""
        << fixed2(sy(v) + 4) << "\" text-anchor=\"end\">" << tick_label(v)
        << "</text>\n";
  }
  svg << "    <text x=\"" << fixed2((left + right) / 2) << "\" y=\"490\" "
         "text-anchor=\"middle\">n</text>\n";
  svg << "    <text x=\"16\" y=\"" << fixed2((top + bottom) / 2)
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << fixed2((top + bottom) / 2) << ")\">" << to_string(report.metric)
      << "</text>\n";
  svg << "  </g>\n";

  // n_opt marker
  const double x_opt = sx(report.n_opt);
  svg << "  <line x1=\"" << fixed2(x_opt) << "\" y1=\"" << fixed2(top)
      << "\" x2=\"" << fixed2(x_opt) << "\" y2=\"" << fixed2(bottom)
      << "\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n";
  svg << "  <text x=\"" << fixed2(x_opt + 4) << "\" y=\"" << fixed2(top + 12)
      << "\" font-family=\"sans-serif\" font-size=\"12\" "
         "fill=\"#555555\">n_opt</text>\n";

  // fitted curve
  svg << "  <polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" "
         "points=\"";
  for (int i = 0; i < samples; ++i) {
    if (i) svg << ' ';
    svg << fixed2(sx(curve[i].first)) << ',' << fixed2(sy(curve[i].second));
  }
  svg << "\"/>\n";

  // trajectory means
  for (const auto& p : points) {
    svg << "  <circle cx=\"" << fixed2(sx(p.size)) << "\" cy=\""
        << fixed2(sy(p.estimate))
        << "\" r=\"3.5\" fill=\"#333333\"/>\n";
  }

  // point estimate at the full size
  svg << "  <circle cx=\"" << fixed2(sx(n_hi)) << "\" cy=\""
      << fixed2(sy(report.point_estimate))
      << "\" r=\"5\" fill=\"#d62728\"/>\n";

  // bounds as triangles at the full size; the raw bound points toward the
  // estimate, the corrected one is drawn smaller on top of it
  auto triangle = [&](double y, double size, const char* fill) {
    const double x = sx(n_hi);
    const bool up = report.metric == Metric::auc;  // lower bound points up
    const double tip = up ? -size : size;
    const double base = up ? size * 0.8 : -size * 0.8;
    std::stringstream t;
    t << "  <polygon points=\"" << fixed2(x) << ',' << fixed2(sy(y) + tip)
      << ' ' << fixed2(x - size) << ',' << fixed2(sy(y) + base) << ' '
      << fixed2(x + size) << ',' << fixed2(sy(y) + base) << "\" fill=\""
      << fill << "\"/>\n";
    return t.str();
  };
  if (std::isfinite(report.bound)) svg << triangle(report.bound, 7, "#2ca02c");
  if (std::isfinite(report.bound_bc))
    svg << triangle(report.bound_bc, 5, "#9467bd");

  svg << "</svg>\n";
  return svg.str();
}

std::string coverage_csv(const CoverageStudy& study, Metric metric) {
  std::string out = "replicate";
  for (const auto& m : study.methods) {
    out += ',' + m.label + ":truth," + m.label + ":bound," + m.label +
           ":covered," + m.label + ":bound_bc," + m.label + ":covered_bc";
  }
  out += '\n';
  const std::size_t reps = study.records.empty() ? 0 : study.records[0].size();
  for (std::size_t r = 0; r < reps; ++r) {
    out += std::to_string(r);
    for (std::size_t m = 0; m < study.methods.size(); ++m) {
      const ReplicateRecord& rec = study.records[m][r];
      if (!rec.ok) {
        out += ",,,,,";
        continue;
      }
      append_cell(out, rec.truth);
      append_cell(out, rec.bound);
      out += ',';
      if (usable(rec.bound))
        out += (metric == Metric::auc ? rec.bound <= rec.truth
                                      : rec.bound >= rec.truth)
                   ? '1'
                   : '0';
      append_cell(out, rec.bound_bc);
      out += ',';
      if (usable(rec.bound_bc))
        out += (metric == Metric::auc ? rec.bound_bc <= rec.truth
                                      : rec.bound_bc >= rec.truth)
                   ? '1'
                   : '0';
    }
    out += '\n';
  }
  return out;
}

std::string rmse_bias_csv(const CoverageStudy& study) {
  std::string out = "replicate";
  for (const auto& m : study.methods) {
    out += ',' + m.label + ":truth," + m.label + ":estimate," + m.label +
           ":error";
  }
  out += '\n';
  const std::size_t reps = study.records.empty() ? 0 : study.records[0].size();
  for (std::size_t r = 0; r < reps; ++r) {
    out += std::to_string(r);
    for (std::size_t m = 0; m < study.methods.size(); ++m) {
      const ReplicateRecord& rec = study.records[m][r];
      if (!rec.ok) {
        out += ",,,";
        continue;
      }
      append_cell(out, rec.truth);
      append_cell(out, rec.estimate);
      append_cell(out, rec.estimate - rec.truth);
    }
    out += '\n';
  }
  return out;
}

std::string nopt_csv(const CoverageStudy& study) {
  std::string out = "replicate";
  for (const auto& m : study.methods) out += ',' + m.label + ":n_opt";
  out += '\n';
  const std::size_t reps = study.records.empty() ? 0 : study.records[0].size();
  for (std::size_t r = 0; r < reps; ++r) {
    out += std::to_string(r);
    for (std::size_t m = 0; m < study.methods.size(); ++m) {
      const ReplicateRecord& rec = study.records[m][r];
      out += ',';
      if (rec.ok && rec.n_opt >= 0) out += std::to_string(rec.n_opt);
    }
    out += '\n';
  }
  return out;
}

std::string bound_distance_csv(const CoverageStudy& study, Metric metric) {
  std::string out = "replicate";
  for (const auto& m : study.methods)
    out += ',' + m.label + ":gap," + m.label + ":gap_bc";
  out += '\n';
  const std::size_t reps = study.records.empty() ? 0 : study.records[0].size();
  for (std::size_t r = 0; r < reps; ++r) {
    out += std::to_string(r);
    for (std::size_t m = 0; m < study.methods.size(); ++m) {
      const ReplicateRecord& rec = study.records[m][r];
      if (!rec.ok) {
        out += ",,";
        continue;
      }
      const double gap = metric == Metric::auc ? rec.truth - rec.bound
                                               : rec.bound - rec.truth;
      const double gap_bc = metric == Metric::auc
                                ? rec.truth - rec.bound_bc
                                : rec.bound_bc - rec.truth;
      append_cell(out, gap);
      append_cell(out, gap_bc);
    }
    out += '\n';
  }
  return out;
}

std::string study_summary_csv(const CoverageStudy& study) {
  std::string out =
      "method,used,failed,rmse,bias,coverage,coverage_bc,mean_bound_gap,"
      "mean_bound_gap_bc,mean_n_opt\n";
  const std::size_t reps = study.records.empty() ? 0 : study.records[0].size();
  for (std::size_t m = 0; m < study.methods.size(); ++m) {
    const MethodSummary& s = study.summaries[m];
    out += study.methods[m].label;
    out += ',' + std::to_string(static_cast<int>(reps) - s.failed);
    out += ',' + std::to_string(s.failed);
    append_cell(out, s.rmse);
    append_cell(out, s.bias);
    append_cell(out, s.coverage);
    append_cell(out, s.coverage_bc);
    append_cell(out, s.mean_bound_gap);
    append_cell(out, s.mean_bound_gap_bc);
    append_cell(out, s.mean_n_opt);
    out += '\n';
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace l2e
