#include "l2e/csvio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace l2e {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

double parse_cell(const std::string& cell, int row, int col) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw ParseError("csv: cell at data row " + std::to_string(row) +
                     ", column " + std::to_string(col) +
                     " is not a number: '" + cell + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[48];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

IngestResult ingest_csv(const std::string& path,
                        const std::string& response_column) {
  std::ifstream in(path);
  if (!in) throw ParseError("csv: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw ParseError("csv: empty file");
  const std::vector<std::string> header = split_line(line);
  if (header.size() < 2)
    throw ParseError("csv: need at least one feature and a response column");

  int response_idx = -1;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == response_column) response_idx = static_cast<int>(i);
  if (response_idx < 0) {
    // Fall back to a zero-based column index.
    int idx = 0;
    auto [ptr, ec] = std::from_chars(
        response_column.data(),
        response_column.data() + response_column.size(), idx);
    if (ec == std::errc() &&
        ptr == response_column.data() + response_column.size() && idx >= 0 &&
        idx < static_cast<int>(header.size()))
      response_idx = idx;
  }
  if (response_idx < 0)
    throw ParseError("csv: response column '" + response_column +
                     "' not found");

  std::vector<std::vector<double>> rows;
  int row_no = 0;
  while (std::getline(in, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size())
      throw ParseError("csv: data row " + std::to_string(row_no) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(header.size()));
    std::vector<double> vals(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
      vals[c] = parse_cell(cells[c], row_no, static_cast<int>(c));
    rows.push_back(std::move(vals));
  }
  if (rows.size() < 2) throw ParseError("csv: need at least 2 data rows");

  IngestResult out;
  out.response_name = header[response_idx];
  for (std::size_t i = 0; i < header.size(); ++i)
    if (static_cast<int>(i) != response_idx)
      out.feature_names.push_back(header[i]);

  const int n = static_cast<int>(rows.size());
  const int p = static_cast<int>(header.size()) - 1;
  out.data.features.resize(n, p);
  out.data.response.resize(n);
  for (int r = 0; r < n; ++r) {
    int fc = 0;
    for (int c = 0; c < static_cast<int>(header.size()); ++c) {
      if (c == response_idx)
        out.data.response[r] = rows[r][c];
      else
        out.data.features(r, fc++) = rows[r][c];
    }
  }

  std::set<double> distinct(out.data.response.begin(),
                            out.data.response.end());
  if (distinct.size() < 2)
    throw InvalidInput("csv: response is constant");
  if (distinct.size() == 2) {
    out.data.task = Task::classification;
    out.negative_label = *distinct.begin();
    out.positive_label = *distinct.rbegin();
    for (int r = 0; r < n; ++r)
      out.data.response[r] =
          out.data.response[r] == out.positive_label ? 1.0 : 0.0;
  } else {
    out.data.task = Task::regression;
  }
  out.data.validate();
  return out;
}

void write_dataset_csv(const std::string& path, const Dataset& data,
                       const std::vector<std::string>& feature_names,
                       const std::string& response_name) {
  std::ofstream outf(path);
  if (!outf) throw ParseError("csv: cannot write '" + path + "'");
  for (int j = 0; j < data.n_features(); ++j) {
    if (j < static_cast<int>(feature_names.size()))
      outf << feature_names[j];
    else
      outf << "x" << j;
    outf << ',';
  }
  outf << response_name << '\n';
  for (int i = 0; i < data.n_rows(); ++i) {
    for (int j = 0; j < data.n_features(); ++j)
      outf << format_double(data.features(i, j)) << ',';
    outf << format_double(data.response[i]) << '\n';
  }
}

std::vector<std::pair<int, double>> read_trajectory_csv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("trajectory: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("trajectory: empty file");
  const std::vector<std::string> header = split_line(line);
  int n_idx = -1, est_idx = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "n") n_idx = static_cast<int>(i);
    if (header[i] == "estimate") est_idx = static_cast<int>(i);
  }
  if (n_idx < 0 || est_idx < 0)
    throw ParseError("trajectory: header must name columns n and estimate");

  std::vector<std::pair<int, double>> points;
  int row_no = 0;
  while (std::getline(in, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (static_cast<int>(cells.size()) <= std::max(n_idx, est_idx))
      throw ParseError("trajectory: short row " + std::to_string(row_no));
    const double nv = parse_cell(cells[n_idx], row_no, n_idx);
    const double ev = parse_cell(cells[est_idx], row_no, est_idx);
    if (nv < 1.0 || nv != std::floor(nv))
      throw ParseError("trajectory: n must be a positive integer at row " +
                       std::to_string(row_no));
    if (!points.empty() && static_cast<int>(nv) <= points.back().first)
      throw ParseError("trajectory: n must be strictly ascending");
    points.emplace_back(static_cast<int>(nv), ev);
  }
  if (points.size() < 3)
    throw InsufficientPoints("trajectory: need at least 3 points");
  return points;
}

void write_curve_csv(const std::string& path, const LearningCurve& curve,
                     double n_lo, double n_hi, int points) {
  if (points < 2) throw InvalidInput("curve csv: need at least 2 points");
  if (!(n_lo > 0.0 && n_hi > n_lo))
    throw InvalidInput("curve csv: need 0 < n_lo < n_hi");
  std::ofstream outf(path);
  if (!outf) throw ParseError("curve csv: cannot write '" + path + "'");
  outf << "n,value\n";
  for (int i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(points - 1);
    const double n = n_lo + t * (n_hi - n_lo);
    outf << format_double(n) << ',' << format_double(evaluate_curve(curve, n))
         << '\n';
  }
}

}  // namespace l2e
