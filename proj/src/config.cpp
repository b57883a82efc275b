#include "l2e/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "l2e/csvio.hpp"

namespace l2e {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Flat `key = value` text: one pair per line, # starts a comment line.
class KvReader {
 public:
  explicit KvReader(const std::string& text) {
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
      ++line_no;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ParseError("config: line " + std::to_string(line_no) +
                         " has no '='");
      const std::string key = trim(t.substr(0, eq));
      const std::string value = trim(t.substr(eq + 1));
      if (key.empty())
        throw ParseError("config: line " + std::to_string(line_no) +
                         " has an empty key");
      if (!kv_.emplace(key, value).second)
        throw ParseError("config: duplicate key '" + key + "'");
    }
  }

  bool has(const std::string& key) {
    consumed_.insert(key);
    return kv_.count(key) > 0;
  }

  std::string str(const std::string& key, const std::string& fallback) {
    consumed_.insert(key);
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }

  std::string required(const std::string& key) {
    consumed_.insert(key);
    auto it = kv_.find(key);
    if (it == kv_.end() || it->second.empty())
      throw ParseError("config: missing required key '" + key + "'");
    return it->second;
  }

  int integer(const std::string& key, int fallback) {
    consumed_.insert(key);
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    int v = 0;
    if (!full_parse(it->second, v))
      throw ParseError("config: key '" + key + "' is not an integer");
    return v;
  }

  std::uint64_t unsigned64(const std::string& key, std::uint64_t fallback) {
    consumed_.insert(key);
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::uint64_t v = 0;
    if (!full_parse(it->second, v))
      throw ParseError("config: key '" + key + "' is not an unsigned integer");
    return v;
  }

  double real(const std::string& key, double fallback) {
    consumed_.insert(key);
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    double v = 0.0;
    if (!full_parse(it->second, v))
      throw ParseError("config: key '" + key + "' is not a number");
    return v;
  }

  void finish() const {
    for (const auto& [key, value] : kv_)
      if (!consumed_.count(key))
        throw ParseError("config: unknown key '" + key + "'");
  }

 private:
  template <typename T>
  static bool full_parse(const std::string& s, T& v) {
    const char* b = s.data();
    const char* e = b + s.size();
    auto [ptr, ec] = std::from_chars(b, e, v);
    return ec == std::errc() && ptr == e;
  }

  std::map<std::string, std::string> kv_;
  std::set<std::string> consumed_;
};

void check_choice(const std::string& key, const std::string& value,
                  const std::set<std::string>& allowed) {
  if (!allowed.count(value))
    throw ParseError("config: key '" + key + "' has unsupported value '" +
                     value + "'");
}

LearnerFamily parse_family(const std::string& s) {
  if (s == "ridge") return LearnerFamily::ridge;
  if (s == "lasso") return LearnerFamily::lasso;
  return LearnerFamily::random_forest;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig parse_run_config(const std::string& text) {
  KvReader kv(text);
  RunConfig c;
  c.input = kv.required("input");
  c.response = kv.required("response");
  c.task = kv.str("task", c.task);
  check_choice("task", c.task, {"auto", "classification", "regression"});
  c.metric = kv.str("metric", c.metric);
  check_choice("metric", c.metric, {"auto", "auc", "pmse"});

  c.learner = kv.str("learner", c.learner);
  check_choice("learner", c.learner, {"ridge", "lasso", "random_forest"});
  c.penalty = kv.str("penalty", c.penalty);
  if (c.penalty != "auto") {
    double v = 0.0;
    const char* b = c.penalty.data();
    auto [ptr, ec] = std::from_chars(b, b + c.penalty.size(), v);
    if (ec != std::errc() || ptr != b + c.penalty.size() || v < 0.0)
      throw ParseError("config: penalty must be 'auto' or a nonnegative number");
  }
  c.cv_folds = kv.integer("cv_folds", c.cv_folds);
  c.cv_repeats = kv.integer("cv_repeats", c.cv_repeats);
  c.grid_size = kv.integer("grid_size", c.grid_size);
  c.trees = kv.integer("trees", c.trees);
  c.mtry = kv.integer("mtry", c.mtry);
  c.min_leaf = kv.integer("min_leaf", c.min_leaf);

  c.fitter = kv.str("fitter", c.fitter);
  check_choice("fitter", c.fitter, {"power_law", "spline", "auto_s_shape"});
  c.selection = kv.str("selection", c.selection);
  check_choice("selection", c.selection, {"mse_min", "bias_margin"});
  c.margin = kv.real("margin", c.margin);
  c.alpha = kv.real("alpha", c.alpha);
  c.spline_degree = kv.integer("spline_degree", c.spline_degree);
  c.spline_knots = kv.integer("spline_knots", c.spline_knots);

  c.n_min = kv.integer("n_min", c.n_min);
  c.n_max = kv.integer("n_max", c.n_max);
  c.grid_count = kv.integer("grid_count", c.grid_count);
  c.repeats = kv.integer("repeats", c.repeats);
  c.min_test = kv.integer("min_test", c.min_test);
  c.seed = kv.unsigned64("seed", c.seed);
  c.workers = kv.integer("workers", c.workers);
  c.output_dir = kv.str("output_dir", c.output_dir);
  kv.finish();
  return c;
}

std::string serialize_run_config(const RunConfig& c) {
  std::stringstream out;
  out << "input = " << c.input << '\n';
  out << "response = " << c.response << '\n';
  out << "task = " << c.task << '\n';
  out << "metric = " << c.metric << '\n';
  out << "learner = " << c.learner << '\n';
  out << "penalty = " << c.penalty << '\n';
  out << "cv_folds = " << c.cv_folds << '\n';
  out << "cv_repeats = " << c.cv_repeats << '\n';
  out << "grid_size = " << c.grid_size << '\n';
  out << "trees = " << c.trees << '\n';
  out << "mtry = " << c.mtry << '\n';
  out << "min_leaf = " << c.min_leaf << '\n';
  out << "fitter = " << c.fitter << '\n';
  out << "selection = " << c.selection << '\n';
  out << "margin = " << format_double(c.margin) << '\n';
  out << "alpha = " << format_double(c.alpha) << '\n';
  out << "spline_degree = " << c.spline_degree << '\n';
  out << "spline_knots = " << c.spline_knots << '\n';
  out << "n_min = " << c.n_min << '\n';
  out << "n_max = " << c.n_max << '\n';
  out << "grid_count = " << c.grid_count << '\n';
  out << "repeats = " << c.repeats << '\n';
  out << "min_test = " << c.min_test << '\n';
  out << "seed = " << c.seed << '\n';
  out << "workers = " << c.workers << '\n';
  out << "output_dir = " << c.output_dir << '\n';
  return out.str();
}

SimConfig parse_sim_config(const std::string& text) {
  KvReader kv(text);
  SimConfig c;

  c.scenario.n_rows = kv.integer("n_rows", c.scenario.n_rows);
  c.scenario.n_features = kv.integer("n_features", c.scenario.n_features);
  const std::string cov = kv.str("covariance", "identity");
  check_choice("covariance", cov, {"identity", "ar1", "block"});
  c.scenario.covariance.kind = cov == "identity" ? CovarianceKind::identity
                               : cov == "ar1"    ? CovarianceKind::ar1
                                                 : CovarianceKind::block;
  c.scenario.covariance.rho = kv.real("rho", c.scenario.covariance.rho);
  c.scenario.covariance.block_size =
      kv.integer("block_size", c.scenario.covariance.block_size);
  const std::string coef = kv.str("coef", "exponential");
  check_choice("coef", coef, {"exponential", "fixed_sparse"});
  c.scenario.coef.kind = coef == "exponential" ? CoefKind::exponential
                                               : CoefKind::fixed_sparse;
  c.scenario.coef.rate = kv.real("coef_rate", c.scenario.coef.rate);
  c.scenario.coef.sparse_count =
      kv.integer("sparse_count", c.scenario.coef.sparse_count);
  c.scenario.coef.sparse_value =
      kv.real("sparse_value", c.scenario.coef.sparse_value);
  const std::string task = kv.str("task", "classification");
  check_choice("task", task, {"classification", "regression"});
  c.scenario.task =
      task == "classification" ? Task::classification : Task::regression;
  c.scenario.noise_sd = kv.real("noise_sd", c.scenario.noise_sd);
  c.scenario.replicates = kv.integer("replicates", c.scenario.replicates);
  c.scenario.oracle_size = kv.integer("oracle_size", c.scenario.oracle_size);
  c.scenario.seed = kv.unsigned64("seed", c.scenario.seed);

  c.study.alpha = kv.real("alpha", c.study.alpha);
  const std::string selection = kv.str("selection", "mse_min");
  check_choice("selection", selection, {"mse_min", "bias_margin"});
  c.study.selection = selection == "mse_min" ? SelectionRule::mse_min
                                             : SelectionRule::bias_margin;
  c.study.margin_fraction = kv.real("margin", c.study.margin_fraction);
  c.study.repeats = kv.integer("repeats", c.study.repeats);
  c.study.grid_count = kv.integer("grid_count", c.study.grid_count);
  c.study.n_min = kv.integer("n_min", c.study.n_min);
  c.study.min_test = kv.integer("min_test", c.study.min_test);
  c.study.cv_folds = kv.integer("cv_folds", c.study.cv_folds);
  c.study.bootstrap.n_boot = kv.integer("n_boot", c.study.bootstrap.n_boot);
  c.study.bootstrap.alpha = c.study.alpha;
  c.study.workers = kv.integer("workers", c.study.workers);

  c.penalty = kv.str("penalty", c.penalty);
  c.tuning_folds = kv.integer("tuning_folds", c.tuning_folds);
  c.tuning_repeats = kv.integer("tuning_repeats", c.tuning_repeats);
  c.tuning_grid = kv.integer("tuning_grid", c.tuning_grid);
  c.trees = kv.integer("trees", c.trees);
  c.mtry = kv.integer("mtry", c.mtry);
  c.min_leaf = kv.integer("min_leaf", c.min_leaf);
  c.output_dir = kv.str("output_dir", c.output_dir);

  const std::string methods = kv.required("methods");
  std::stringstream ms(methods);
  std::string token;
  while (std::getline(ms, token, ',')) {
    token = trim(token);
    if (token.empty()) continue;
    const auto colon = token.find(':');
    if (colon == std::string::npos)
      throw ParseError("config: method '" + token +
                       "' must look like kind:learner");
    const std::string kind = token.substr(0, colon);
    const std::string fam = token.substr(colon + 1);
    check_choice("methods", kind, {"power", "spline", "cv", "loob"});
    check_choice("methods", fam, {"ridge", "lasso", "random_forest"});

    StudyMethod method;
    method.label = token;
    method.kind = kind == "power"    ? MethodKind::curve_power
                  : kind == "spline" ? MethodKind::curve_spline
                  : kind == "cv"     ? MethodKind::cv
                                     : MethodKind::loob;
    method.learner.family = parse_family(fam);
    method.learner.task = c.scenario.task;
    if (c.penalty != "auto") {
      double v = 0.0;
      const char* b = c.penalty.data();
      auto [ptr, ec] = std::from_chars(b, b + c.penalty.size(), v);
      if (ec != std::errc() || ptr != b + c.penalty.size() || v < 0.0)
        throw ParseError(
            "config: penalty must be 'auto' or a nonnegative number");
      method.learner.penalty = v;
    }
    method.learner.tuning.cv_folds = c.tuning_folds;
    method.learner.tuning.cv_repeats = c.tuning_repeats;
    method.learner.tuning.grid_size = c.tuning_grid;
    method.learner.forest.trees = c.trees;
    method.learner.forest.mtry = c.mtry;
    method.learner.forest.min_leaf = c.min_leaf;
    c.methods.push_back(std::move(method));
  }
  if (c.methods.empty()) throw ParseError("config: methods list is empty");
  kv.finish();
  return c;
}

std::string serialize_sim_config(const SimConfig& c) {
  std::stringstream out;
  out << "n_rows = " << c.scenario.n_rows << '\n';
  out << "n_features = " << c.scenario.n_features << '\n';
  out << "covariance = "
      << (c.scenario.covariance.kind == CovarianceKind::identity ? "identity"
          : c.scenario.covariance.kind == CovarianceKind::ar1   ? "ar1"
                                                                : "block")
      << '\n';
  out << "rho = " << format_double(c.scenario.covariance.rho) << '\n';
  out << "block_size = " << c.scenario.covariance.block_size << '\n';
  out << "coef = "
      << (c.scenario.coef.kind == CoefKind::exponential ? "exponential"
                                                        : "fixed_sparse")
      << '\n';
  out << "coef_rate = " << format_double(c.scenario.coef.rate) << '\n';
  out << "sparse_count = " << c.scenario.coef.sparse_count << '\n';
  out << "sparse_value = " << format_double(c.scenario.coef.sparse_value)
      << '\n';
  out << "task = " << to_string(c.scenario.task) << '\n';
  out << "noise_sd = " << format_double(c.scenario.noise_sd) << '\n';
  out << "replicates = " << c.scenario.replicates << '\n';
  out << "oracle_size = " << c.scenario.oracle_size << '\n';
  out << "seed = " << c.scenario.seed << '\n';
  out << "methods = ";
  for (std::size_t i = 0; i < c.methods.size(); ++i) {
    if (i) out << ',';
    out << c.methods[i].label;
  }
  out << '\n';
  out << "alpha = " << format_double(c.study.alpha) << '\n';
  out << "selection = " << to_string(c.study.selection) << '\n';
  out << "margin = " << format_double(c.study.margin_fraction) << '\n';
  out << "repeats = " << c.study.repeats << '\n';
  out << "grid_count = " << c.study.grid_count << '\n';
  out << "n_min = " << c.study.n_min << '\n';
  out << "min_test = " << c.study.min_test << '\n';
  out << "cv_folds = " << c.study.cv_folds << '\n';
  out << "n_boot = " << c.study.bootstrap.n_boot << '\n';
  out << "workers = " << c.study.workers << '\n';
  out << "penalty = " << c.penalty << '\n';
  out << "tuning_folds = " << c.tuning_folds << '\n';
  out << "tuning_repeats = " << c.tuning_repeats << '\n';
  out << "tuning_grid = " << c.tuning_grid << '\n';
  out << "trees = " << c.trees << '\n';
  out << "mtry = " << c.mtry << '\n';
  out << "min_leaf = " << c.min_leaf << '\n';
  out << "output_dir = " << c.output_dir << '\n';
  return out.str();
}

LearnerSpec learner_from_run_config(const RunConfig& c, Task task) {
  LearnerSpec spec;
  spec.family = parse_family(c.learner);
  spec.task = task;
  if (c.penalty != "auto") spec.penalty = std::stod(c.penalty);
  spec.tuning.cv_folds = c.cv_folds;
  spec.tuning.cv_repeats = c.cv_repeats;
  spec.tuning.grid_size = c.grid_size;
  spec.forest.trees = c.trees;
  spec.forest.mtry = c.mtry;
  spec.forest.min_leaf = c.min_leaf;
  return spec;
}

}  // namespace l2e
