// Copyright 2026  The lprobe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Independent reference computations used as test oracles.

#ifndef LPROBE_TESTS_ORACLES_HPP_
#define LPROBE_TESTS_ORACLES_HPP_

#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace lprobe::testing {

struct GridFit {
  double w[2] = {0, 0};
  double b = 0;
  std::vector<double> p1;  // P(label = 1) on the training rows
};

// Penalized two-feature logistic fit by exhaustive coarse-to-fine grid search.
// Features are standardized with population moments; the bias is not
// penalized.  rows[i] = {x1, x2}.
inline GridFit GridSearchLogistic(const std::vector<std::array<double, 2>> &rows,
                                  const std::vector<int> &labels, double lambda) {
  const std::size_t n = rows.size();
  double mean[2] = {0, 0}, scale[2] = {0, 0};
  for (const auto &r : rows)
    for (int j = 0; j < 2; ++j) mean[j] += r[static_cast<std::size_t>(j)] / static_cast<double>(n);
  for (const auto &r : rows)
    for (int j = 0; j < 2; ++j) {
      const double d = r[static_cast<std::size_t>(j)] - mean[j];
      scale[j] += d * d / static_cast<double>(n);
    }
  for (double &s : scale) s = s <= 1e-24 ? 1.0 : std::sqrt(s);
  std::vector<std::array<double, 2>> z(n);
  for (std::size_t i = 0; i < n; ++i)
    for (int j = 0; j < 2; ++j)
      z[i][static_cast<std::size_t>(j)] = (rows[i][static_cast<std::size_t>(j)] - mean[j]) / scale[j];

  auto loss = [&](double w1, double w2, double b) {
    double total = 0.5 * lambda * (w1 * w1 + w2 * w2);
    for (std::size_t i = 0; i < n; ++i) {
      const double m = w1 * z[i][0] + w2 * z[i][1] + b;
      // log(1 + exp(-s m)) with s = +-1
      const double s = labels[i] == 1 ? m : -m;
      total += s > 0 ? std::log1p(std::exp(-s)) : -s + std::log1p(std::exp(s));
    }
    return total;
  };

  double center[3] = {0, 0, 0};
  double half = 12.0;
  const int steps = 48;
  for (int round = 0; round < 9; ++round) {
    double best = std::numeric_limits<double>::infinity();
    double arg[3] = {center[0], center[1], center[2]};
    const double h = 2 * half / steps;
    for (int a = 0; a <= steps; ++a)
      for (int c = 0; c <= steps; ++c)
        for (int e = 0; e <= steps; ++e) {
          const double w1 = center[0] - half + a * h, w2 = center[1] - half + c * h,
                       b = center[2] - half + e * h;
          const double v = loss(w1, w2, b);
          if (v < best) {
            best = v;
            arg[0] = w1;
            arg[1] = w2;
            arg[2] = b;
          }
        }
    for (int j = 0; j < 3; ++j) center[j] = arg[j];
    half = 2 * h;
  }
  GridFit fit;
  fit.w[0] = center[0];
  fit.w[1] = center[1];
  fit.b = center[2];
  for (std::size_t i = 0; i < n; ++i) {
    const double m = fit.w[0] * z[i][0] + fit.w[1] * z[i][1] + fit.b;
    fit.p1.push_back(1.0 / (1.0 + std::exp(-m)));
  }
  return fit;
}

}  // namespace lprobe::testing

#endif  // LPROBE_TESTS_ORACLES_HPP_
