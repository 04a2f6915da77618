#pragma once

// Brute-force reference computations for the tests. Nothing here calls into
// the library's set, curve or calibration code; everything is recomputed
// from raw scores, labels and noise.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace oracle {

struct Row {
  std::vector<double> scores;
  std::size_t truth = 0;
  std::size_t alone = 0;  // human-alone prediction
};

inline std::size_t top_label(const std::vector<double>& m) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < m.size(); ++j) {
    if (m[j] > m[best]) best = j;
  }
  return best;
}

// Threshold rule read literally: the top label plus every label with m_y >= 1 - lambda.
inline bool threshold_member(const std::vector<double>& m, std::size_t y, double lambda) {
  return y == top_label(m) || m[y] >= 1.0 - lambda;
}

inline std::vector<std::size_t> threshold_members(const std::vector<double>& m, double lambda) {
  std::vector<std::size_t> out;
  for (std::size_t y = 0; y < m.size(); ++y) {
    if (threshold_member(m, y, lambda)) out.push_back(y);
  }
  return out;
}

// 1-based rank by descending score, ties to the lower index.
inline std::size_t rank_of(const std::vector<double>& m, std::size_t y) {
  std::size_t r = 1;
  for (std::size_t j = 0; j < m.size(); ++j) {
    if (m[j] > m[y] || (m[j] == m[y] && j < y)) ++r;
  }
  return r;
}

inline double saps_s(const std::vector<double>& m, std::size_t y, double w, double u) {
  const double top = m[top_label(m)];
  const std::size_t r = rank_of(m, y);
  return r == 1 ? u * top : top + (static_cast<double>(r) - 2.0 + u) * w;
}

inline std::vector<std::size_t> saps_members(const std::vector<double>& m, double lambda, double w, double u) {
  std::vector<std::size_t> out;
  for (std::size_t y = 0; y < m.size(); ++y) {
    if (rank_of(m, y) == 1 || saps_s(m, y, w, u) <= lambda) out.push_back(y);
  }
  return out;
}

inline bool contains(const std::vector<std::size_t>& set, std::size_t y) {
  return std::find(set.begin(), set.end(), y) != set.end();
}

// Counts of 1{alone right, truth out} and 1{alone wrong, truth in} at lambda
// for the threshold predictor.
inline std::size_t harm_count(const std::vector<Row>& rows, double lambda) {
  std::size_t c = 0;
  for (const auto& r : rows) c += (r.alone == r.truth && !threshold_member(r.scores, r.truth, lambda)) ? 1 : 0;
  return c;
}

inline std::size_t loss_count(const std::vector<Row>& rows, double lambda) {
  std::size_t c = 0;
  for (const auto& r : rows) c += (r.alone != r.truth && threshold_member(r.scores, r.truth, lambda)) ? 1 : 0;
  return c;
}

inline std::vector<double> dense_grid(double hi, double step) {
  std::vector<double> g;
  const auto n = static_cast<std::size_t>(std::llround(hi / step));
  for (std::size_t i = 0; i <= n; ++i) g.push_back(static_cast<double>(i) * step);
  g.back() = hi;
  return g;
}

inline bool condition(std::size_t count, std::size_t n, double alpha) {
  const double nn = static_cast<double>(n);
  return nn / (nn + 1.0) * (static_cast<double>(count) / nn) + 1.0 / (nn + 1.0) <= alpha + 1e-12;
}

// inf over the grid of lambdas meeting the inflated harm condition.
inline std::optional<double> lambda_hat_grid(const std::vector<Row>& rows, double alpha, const std::vector<double>& grid) {
  for (double l : grid) {
    if (condition(harm_count(rows, l), rows.size(), alpha)) return l;
  }
  return std::nullopt;
}

// sup over the grid of lambdas meeting the inflated benefit-loss condition.
inline std::optional<double> lambda_check_grid(const std::vector<Row>& rows, double alpha, const std::vector<double>& grid) {
  std::optional<double> best;
  for (double l : grid) {
    if (condition(loss_count(rows, l), rows.size(), alpha)) best = l;
  }
  return best;
}

// success of an MNL restricted to `set`
inline double mnl_success(const std::vector<double>& row, std::size_t y, const std::vector<std::size_t>& set) {
  if (!contains(set, y)) return 0.0;
  double d = 0.0;
  for (auto j : set) d += row[j];
  return row[y] / d;
}

inline double binomial_se(double p, std::size_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

// A scratch generator for fixtures, deliberately not the library RNG.
inline std::vector<Row> random_rows(std::size_t n, std::size_t labels, double p_alone_right, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Row> rows(n);
  for (auto& r : rows) {
    r.scores.resize(labels);
    double s = 0.0;
    for (auto& x : r.scores) {
      x = -std::log(1.0 - unit(gen));
      x = x * x * x;  // peakier than flat Dirichlet
      s += x;
    }
    for (auto& x : r.scores) x /= s;
    r.truth = static_cast<std::size_t>(gen() % labels);
    r.alone = unit(gen) < p_alone_right ? r.truth : static_cast<std::size_t>(gen() % labels);
  }
  return rows;
}

}  // namespace oracle
