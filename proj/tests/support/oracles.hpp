#pragma once

// Brute-force reference implementations on plain nested vectors. They share
// no code with the library and favour the most literal evaluation order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "fedcy/engine/array.hpp"

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline double dotp(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double cos_sim(const Vec& a, const Vec& b) {
  return dotp(a, b) / std::max(std::sqrt(dotp(a, a)) * std::sqrt(dotp(b, b)), 1e-12);
}

inline double neg_sq(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return -s;
}

inline double sim(const Vec& a, const Vec& b, bool cosine) { return cosine ? cos_sim(a, b) : neg_sq(a, b); }

inline Vec softmax(const Vec& logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  Vec e(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += (e[i] = std::exp(logits[i] - mx));
  for (double& x : e) x /= z;
  return e;
}

struct Tcc {
  double tau = 0.05;
  double lambda_sigma = 1.0;
  double lambda_t = 10.0;
  double floor = 1e-6;
  bool cosine = true;
  bool squared_variance = false;
};

inline Vec soft_neighbor(const Vec& u, const Mat& v, const Tcc& c, Vec* alpha_out = nullptr) {
  Vec logits;
  for (const auto& vj : v) logits.push_back(sim(u, vj, c.cosine) / c.tau);
  const Vec alpha = softmax(logits);
  Vec tilde(u.size(), 0.0);
  for (std::size_t j = 0; j < v.size(); ++j)
    for (std::size_t d = 0; d < u.size(); ++d) tilde[d] += alpha[j] * v[j][d];
  if (alpha_out) *alpha_out = alpha;
  return tilde;
}

struct CycleStats {
  double mu = 0.0;
  double raw_var = 0.0;  // before the floor
};

// k is 1-based.
inline CycleStats cycle_stats(std::size_t k, const Mat& u, const Mat& v, const Tcc& c) {
  const Vec tilde = soft_neighbor(u[k - 1], v, c);
  Vec logits;
  for (const auto& ui : u) logits.push_back(sim(tilde, ui, c.cosine) / c.tau);
  const Vec beta = softmax(logits);
  CycleStats s;
  for (std::size_t i = 0; i < beta.size(); ++i) s.mu += static_cast<double>(i + 1) * beta[i];
  for (std::size_t i = 0; i < beta.size(); ++i)
    s.raw_var += (static_cast<double>(i + 1) - s.mu) * (static_cast<double>(i + 1) - s.mu) * beta[i];
  return s;
}

inline double cycle_back(std::size_t k, const Mat& u, const Mat& v, const Tcc& c) {
  const CycleStats st = cycle_stats(k, u, v, c);
  const double mu = st.mu;
  const double var = std::max(st.raw_var, c.floor);
  const double diff = static_cast<double>(k) - mu;
  const double denom = c.squared_variance ? var * var : var;
  return diff * diff / denom + c.lambda_sigma * std::log(var);
}

inline double tcc_pair(const Mat& u, const Mat& v, const Tcc& c) {
  double s = 0.0;
  for (std::size_t k = 1; k <= u.size(); ++k) s += cycle_back(k, u, v, c);
  for (std::size_t k = 1; k <= v.size(); ++k) s += cycle_back(k, v, u, c);
  return s / static_cast<double>(u.size() + v.size());
}

inline double tcc_batch(const std::vector<Mat>& clips, const Tcc& c) {
  const double b = static_cast<double>(clips.size());
  double s = 0.0;
  for (std::size_t i = 0; i < clips.size(); ++i)
    for (std::size_t k = 0; k < clips.size(); ++k)
      if (i != k) s += tcc_pair(clips[i], clips[k], c);
  return c.lambda_t / (b * (b - 1.0)) * s;
}

inline double ntxent(const Vec& a, const Vec& p, const Mat& negatives, double tau) {
  double den = std::exp(cos_sim(a, p) / tau);
  for (const auto& n : negatives) den += std::exp(cos_sim(a, n) / tau);
  return -std::log(std::exp(cos_sim(a, p) / tau) / den);
}

// labels are 1-based class ids aligned with the rows of `x`.
inline double supcon(const Mat& x, const std::vector<int>& labels, double tau) {
  double total = 0.0;
  for (std::size_t a = 0; a < x.size(); ++a) {
    std::vector<std::size_t> same;
    Mat negatives;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (labels[j] == labels[a]) same.push_back(j);
      else negatives.push_back(x[j]);
    }
    if (same.size() < 2) continue;
    double inner = 0.0;
    for (std::size_t p : same)
      if (p != a) inner += ntxent(x[a], x[p], negatives, tau);
    total += inner / static_cast<double>(same.size() - 1);
  }
  return total / static_cast<double>(x.size());
}

// Confusion-matrix macro F1 over classes 1..P. Classes with no prediction and
// no label are skipped unless `score_absent`.
inline double macro_f1(const std::vector<int>& pred, const std::vector<int>& truth, int classes,
                       bool score_absent = false) {
  std::vector<std::vector<double>> cm(classes, std::vector<double>(classes, 0.0));
  for (std::size_t i = 0; i < pred.size(); ++i) cm[truth[i] - 1][pred[i] - 1] += 1.0;
  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c < classes; ++c) {
    double row = 0.0, col = 0.0;
    for (int j = 0; j < classes; ++j) {
      row += cm[c][j];
      col += cm[j][c];
    }
    if (row == 0.0 && col == 0.0 && !score_absent) continue;
    const double precision = col > 0.0 ? cm[c][c] / col : 0.0;
    const double recall = row > 0.0 ? cm[c][c] / row : 0.0;
    sum += precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    ++counted;
  }
  return sum / counted;
}

// Conversions and generators ---------------------------------------------------

inline Mat to_mat(const fedcy::engine::Array& a) {
  Mat m(a.rows(), Vec(a.cols()));
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) m[r][c] = a.at(r, c);
  return m;
}

inline Vec to_vec(const fedcy::engine::Array& a) { return Vec(a.values().begin(), a.values().end()); }

inline fedcy::engine::Array from_mat(const Mat& m) {
  std::vector<double> flat;
  for (const auto& r : m) flat.insert(flat.end(), r.begin(), r.end());
  return fedcy::engine::Array::matrix(m.size(), m.empty() ? 0 : m[0].size(), flat);
}

inline std::size_t uniform_int(std::size_t lo, std::size_t hi, std::mt19937_64& rng) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline Mat random_mat(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat m(rows, Vec(cols));
  for (auto& r : m)
    for (double& x : r) x = n(rng);
  return m;
}

inline Vec random_vec(std::size_t n, std::mt19937_64& rng) { return random_mat(1, n, rng)[0]; }

inline std::vector<int> random_labels(std::size_t n, int classes, std::mt19937_64& rng) {
  std::vector<int> out(n);
  for (int& l : out) l = static_cast<int>(uniform_int(1, static_cast<std::size_t>(classes), rng));
  return out;
}

}  // namespace oracle
