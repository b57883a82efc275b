#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <initializer_list>

#include "l2e/core.hpp"
#include "l2e/rng.hpp"

// Deterministic synthetic datasets for tests. The response carries real
// signal so learners have something to find; seeds make every test
// reproducible.
inline l2e::Dataset toy_classification(int n, int p, std::uint64_t seed,
                                       double signal = 1.0) {
  l2e::Rng rng(seed);
  l2e::Dataset d;
  d.task = l2e::Task::classification;
  d.features.resize(n, p);
  d.response.resize(n);
  for (int i = 0; i < n; ++i) {
    double eta = 0.0;
    for (int j = 0; j < p; ++j) {
      d.features(i, j) = rng.normal();
      if (j < 3) eta += signal * d.features(i, j);
    }
    const double pr = 1.0 / (1.0 + std::exp(-eta));
    d.response(i) = rng.uniform() < pr ? 1.0 : 0.0;
  }
  // guarantee both classes
  bool has0 = false, has1 = false;
  for (int i = 0; i < n; ++i) (d.response(i) > 0.5 ? has1 : has0) = true;
  if (!has0) d.response(0) = 0.0;
  if (!has1) d.response(n - 1) = 1.0;
  return d;
}

inline l2e::Dataset toy_regression(int n, int p, std::uint64_t seed,
                                   double noise_sd = 0.5) {
  l2e::Rng rng(seed);
  l2e::Dataset d;
  d.task = l2e::Task::regression;
  d.features.resize(n, p);
  d.response.resize(n);
  for (int i = 0; i < n; ++i) {
    double eta = 0.0;
    for (int j = 0; j < p; ++j) {
      d.features(i, j) = rng.normal();
      if (j < 3) eta += d.features(i, j);
    }
    d.response(i) = eta + noise_sd * rng.normal();
  }
  return d;
}

inline Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<int>(values.size()));
  int i = 0;
  for (double x : values) v(i++) = x;
  return v;
}
