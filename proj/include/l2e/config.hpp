#pragma once

#include <string>
#include <vector>

#include "l2e/estimator.hpp"
#include "l2e/simharness.hpp"

namespace l2e {

// Configuration for the `evaluate` verb. Parsed from a flat key = value
// file; unknown keys are rejected so typos fail loudly.
struct RunConfig {
  std::string input;            // required: dataset CSV path
  std::string response;         // required: response column name or index
  std::string task = "auto";    // auto | classification | regression
  std::string metric = "auto";  // auto | auc | pmse

  std::string learner = "ridge";  // ridge | lasso | random_forest
  std::string penalty = "auto";   // auto | nonnegative number
  int cv_folds = 10;
  int cv_repeats = 5;
  int grid_size = 50;
  int trees = 250;
  int mtry = 0;  // 0 selects ceil(sqrt(p))
  int min_leaf = 5;

  std::string fitter = "power_law";  // power_law | spline | auto_s_shape
  std::string selection = "mse_min";  // mse_min | bias_margin
  double margin = 0.02;
  double alpha = 0.05;
  int spline_degree = 2;
  int spline_knots = -1;

  int n_min = 20;
  int n_max = 0;  // 0 selects N - min_test
  int grid_count = 10;
  int repeats = 50;
  int min_test = 10;
  std::uint64_t seed = 0;
  int workers = 0;  // 0 selects automatically
  std::string output_dir = ".";
};

// Configuration for the `simulate` verb.
struct SimConfig {
  SimScenario scenario;
  std::vector<StudyMethod> methods;
  StudyConfig study;
  // Learner settings shared by every method.
  std::string penalty = "auto";
  int tuning_folds = 10;
  int tuning_repeats = 5;
  int tuning_grid = 50;
  int trees = 250;
  int mtry = 0;
  int min_leaf = 5;
  std::string output_dir = ".";
};

RunConfig parse_run_config(const std::string& text);
std::string serialize_run_config(const RunConfig& config);

SimConfig parse_sim_config(const std::string& text);
std::string serialize_sim_config(const SimConfig& config);

// Builds the learner spec a RunConfig describes (needs the task resolved).
LearnerSpec learner_from_run_config(const RunConfig& config, Task task);

std::string read_text_file(const std::string& path);

}  // namespace l2e
