#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "l2e/report.hpp"

namespace fs = std::filesystem;

namespace {

// Writes each (path, content) pair; on failure removes everything already
// written so an aborted run leaves no partial outputs behind.
class OutputSet {
 public:
  void add(fs::path path, std::string content) {
    files_.emplace_back(std::move(path), std::move(content));
  }

  void commit() {
    std::vector<fs::path> written;
    try {
      for (const auto& [path, content] : files_) {
        written.push_back(path);
        l2e::write_text_file(path.string(), content);
      }
    } catch (...) {
      std::error_code ec;
      for (const auto& p : written) fs::remove(p, ec);
      throw;
    }
  }

 private:
  std::vector<std::pair<fs::path, std::string>> files_;
};

l2e::Task resolve_task(const l2e::RunConfig& rc, const l2e::Dataset& data) {
  if (rc.task == "classification" && data.task != l2e::Task::classification)
    throw l2e::InvalidInput(
        "task = classification, but the response is not binary");
  if (rc.task == "regression" && data.task != l2e::Task::regression)
    throw l2e::InvalidInput(
        "task = regression, but the response is binary; remap the labels "
        "to numeric outcomes first");
  return data.task;
}

l2e::Metric resolve_metric(const l2e::RunConfig& rc, l2e::Task task) {
  const l2e::Metric fallback = l2e::default_metric(task);
  if (rc.metric == "auto") return fallback;
  const l2e::Metric wanted =
      rc.metric == "auc" ? l2e::Metric::auc : l2e::Metric::pmse;
  if (wanted != fallback)
    throw l2e::InvalidInput("metric '" + rc.metric +
                            "' does not apply to a " +
                            std::string(l2e::to_string(task)) + " task");
  return wanted;
}

int cmd_evaluate(const std::string& config_path) {
  const l2e::RunConfig rc = l2e::parse_run_config(l2e::read_text_file(config_path));
  const l2e::IngestResult ingest = l2e::ingest_csv(rc.input, rc.response);
  const l2e::Task task = resolve_task(rc, ingest.data);
  const l2e::Metric metric = resolve_metric(rc, task);

  l2e::LearnerSpec learner = l2e::learner_from_run_config(rc, task);
  learner.validate();

  l2e::EstimatorConfig ec;
  ec.fitter = rc.fitter == "power_law" ? l2e::FitterKind::power_law
              : rc.fitter == "spline"  ? l2e::FitterKind::spline
                                       : l2e::FitterKind::auto_s_shape;
  ec.selection = rc.selection == "mse_min" ? l2e::SelectionRule::mse_min
                                           : l2e::SelectionRule::bias_margin;
  ec.margin_fraction = rc.margin;
  ec.alpha = rc.alpha;
  ec.spline_degree = rc.spline_degree;
  ec.spline_knots = rc.spline_knots;
  ec.workers = rc.workers;

  const int total = ingest.data.n_rows();
  const int n_max = rc.n_max > 0 ? rc.n_max : total - rc.min_test;
  ec.plan.sizes = l2e::homogeneous_grid(rc.n_min, n_max, rc.grid_count);
  ec.plan.repeats = rc.repeats;
  ec.plan.balanced = task == l2e::Task::classification;
  ec.plan.seed = rc.seed;
  ec.plan.min_test = rc.min_test;
  ec.plan.validate(ingest.data);

  const l2e::BoundReport report =
      l2e::learn2evaluate(ingest.data, learner, metric, ec);

  const fs::path dir(rc.output_dir);
  fs::create_directories(dir);
  OutputSet outputs;
  outputs.add(dir / "report.json", l2e::report_json(rc, ingest, report));
  outputs.add(dir / "curve.svg", l2e::curve_svg(report, total));
  outputs.commit();
  const fs::path curve_path = dir / "curve.csv";
  try {
    l2e::write_curve_csv(curve_path.string(), report.curve,
                         report.trajectory.points.front().size, total, 200);
  } catch (...) {
    std::error_code ecode;
    fs::remove(dir / "report.json", ecode);
    fs::remove(dir / "curve.svg", ecode);
    fs::remove(curve_path, ecode);
    throw;
  }

  std::cout << "metric = " << l2e::to_string(metric) << '\n'
            << "point_estimate = " << l2e::format_double(report.point_estimate)
            << '\n'
            << "n_opt = " << report.n_opt << '\n'
            << "bound = " << l2e::format_double(report.bound) << '\n'
            << "bound_bc = " << l2e::format_double(report.bound_bc) << '\n'
            << "empirical_bias = " << l2e::format_double(report.empirical_bias)
            << '\n';
  if (report.recommend_more_samples)
    std::cout << "note = trajectory still rises steeply; acquire more "
                 "samples before trusting the extrapolation\n";
  std::cout << "output = " << (dir / "report.json").string() << '\n';
  return 0;
}

int cmd_simulate(const std::string& config_path) {
  const l2e::SimConfig sc = l2e::parse_sim_config(l2e::read_text_file(config_path));
  const l2e::Metric metric = l2e::default_metric(sc.scenario.task);
  const l2e::CoverageStudy study =
      l2e::run_coverage_study(sc.scenario, sc.methods, sc.study);

  const fs::path dir(sc.output_dir);
  fs::create_directories(dir);
  OutputSet outputs;
  outputs.add(dir / "coverage.csv", l2e::coverage_csv(study, metric));
  outputs.add(dir / "rmse_bias.csv", l2e::rmse_bias_csv(study));
  outputs.add(dir / "nopt.csv", l2e::nopt_csv(study));
  outputs.add(dir / "bound_distance.csv",
              l2e::bound_distance_csv(study, metric));
  outputs.add(dir / "summary.csv", l2e::study_summary_csv(study));
  outputs.commit();

  std::cout << l2e::study_summary_csv(study);
  std::cout << "output = " << (dir / "summary.csv").string() << '\n';
  return 0;
}

int cmd_fit_curve(const std::string& trajectory_path, const std::string& metric,
                  const std::string& fitter, int degree, int knots) {
  const auto rows = l2e::read_trajectory_csv(trajectory_path);
  l2e::LearningTrajectory trajectory;
  trajectory.metric = metric == "pmse" ? l2e::Metric::pmse : l2e::Metric::auc;
  trajectory.repeats = 0;
  for (const auto& [n, estimate] : rows)
    trajectory.points.push_back({n, estimate});
  trajectory.splits.resize(trajectory.points.size());
  trajectory.penalties.assign(trajectory.points.size(),
                              std::numeric_limits<double>::quiet_NaN());

  l2e::LearningCurve curve;
  if (fitter == "spline")
    curve = l2e::fit_spline(trajectory, degree, knots);
  else
    curve = l2e::fit_power_law(trajectory);
  std::cout << l2e::curve_json(curve, trajectory);
  return 0;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const l2e::LearnerNonConvergence& e) {
    std::cerr << "l2e: numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const l2e::SplitFailure& e) {
    std::cerr << "l2e: numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const l2e::FitFailure& e) {
    std::cerr << "l2e: numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const l2e::InsufficientPoints& e) {
    std::cerr << "l2e: numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const l2e::InsufficientRange& e) {
    std::cerr << "l2e: numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const l2e::DegenerateScenario& e) {
    std::cerr << "l2e: numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const l2e::Error& e) {
    std::cerr << "l2e: error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "l2e: error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Learning-curve extrapolation with confidence bounds for predictive "
      "performance"};
  app.require_subcommand(1);

  std::string eval_config;
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Estimate full-data performance with a lower/upper bound");
  evaluate->add_option("--config", eval_config, "run configuration file")
      ->required();

  std::string sim_config;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Coverage study on synthetic scenarios");
  simulate->add_option("--config", sim_config, "scenario configuration file")
      ->required();

  std::string traj_path, fc_metric = "auc", fc_fitter = "power_law";
  int fc_degree = 2, fc_knots = -1;
  CLI::App* fit_curve = app.add_subcommand(
      "fit-curve", "Fit a learning curve to a precomputed trajectory CSV");
  fit_curve->add_option("--trajectory", traj_path, "CSV with columns n,estimate")
      ->required();
  fit_curve->add_option("--metric", fc_metric, "auc or pmse (default auc)")
      ->check(CLI::IsMember({"auc", "pmse"}));
  fit_curve
      ->add_option("--fitter", fc_fitter, "power_law or spline (default power_law)")
      ->check(CLI::IsMember({"power_law", "spline"}));
  fit_curve->add_option("--degree", fc_degree, "spline degree (default 2)");
  fit_curve->add_option("--knots", fc_knots,
                        "interior knots; negative selects automatically");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (evaluate->parsed())
    return guarded([&] { return cmd_evaluate(eval_config); });
  if (simulate->parsed())
    return guarded([&] { return cmd_simulate(sim_config); });
  return guarded([&] {
    return cmd_fit_curve(traj_path, fc_metric, fc_fitter, fc_degree, fc_knots);
  });
}
