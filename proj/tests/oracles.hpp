#pragma once

// Independent scalar reference implementations used to pin expected values.
// Everything here is a deliberate double-loop / brute-force construction and
// must stay decoupled from the library code it checks.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "esrm/rng.hpp"

namespace oracle {

using Mat = Eigen::MatrixXd;

inline double dot(const Mat& a, long i, const Mat& b, long j) {
  double s = 0.0;
  for (long d = 0; d < a.cols(); ++d) s += a(i, d) * b(j, d);
  return s;
}

// Anchor-by-anchor, positive-by-positive evaluation of the group matching
// loss, plain exp/log arithmetic.
inline double match_loss(const Mat& z1, const std::vector<int>& y1, const Mat& z2,
                         const std::vector<int>& y2, double tau) {
  double total = 0.0;
  for (long i = 0; i < z1.rows(); ++i) {
    std::vector<long> positives;
    for (long p = 0; p < z2.rows(); ++p)
      if (y2[static_cast<std::size_t>(p)] == y1[static_cast<std::size_t>(i)]) positives.push_back(p);
    if (positives.empty()) continue;
    for (long p : positives) {
      const double num = std::exp(dot(z1, i, z2, p) / tau);
      double den = 0.0;
      for (long d = 0; d < z2.rows(); ++d) den += std::exp(dot(z1, i, z2, d) / tau);
      total += -(1.0 / static_cast<double>(positives.size())) * std::log(num / den);
    }
  }
  return total;
}

inline std::vector<double> softmax(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  double den = 0.0;
  for (double x : v) den += std::exp(x);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::exp(v[i]) / den;
  return out;
}

// Mean KL(softmax(student/t) || softmax(teacher/t)), one sample at a time.
inline double kl_loss(const Mat& student, const Mat& teacher, double t) {
  double total = 0.0;
  for (long i = 0; i < student.rows(); ++i) {
    std::vector<double> s, q;
    for (long c = 0; c < student.cols(); ++c) {
      s.push_back(student(i, c) / t);
      q.push_back(teacher(i, c) / t);
    }
    const auto p = softmax(s);
    const auto qq = softmax(q);
    for (std::size_t c = 0; c < p.size(); ++c) total += p[c] * std::log(p[c] / qq[c]);
  }
  return total / static_cast<double>(student.rows());
}

// Mean -log p_y, naive softmax.
inline double ce_loss(const Mat& logits, const std::vector<int>& labels) {
  double total = 0.0;
  for (long i = 0; i < logits.rows(); ++i) {
    std::vector<double> row;
    for (long c = 0; c < logits.cols(); ++c) row.push_back(logits(i, c));
    const auto p = softmax(row);
    total += -std::log(p[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])]);
  }
  return total / static_cast<double>(logits.rows());
}

// -sum p ln p with naive softmax.
inline double entropy(const std::vector<double>& logits) {
  const auto p = softmax(logits);
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

// Per-task loop over the forgetting definition.
inline double relative_forgetting(const std::vector<std::vector<double>>& a) {
  const long T = static_cast<long>(a.size());
  double sum = 0.0;
  for (long j = 0; j < T - 1; ++j) {
    double best = 0.0;
    for (long t = j; t < T; ++t)
      best = std::max(best, a[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)]);
    if (best > 0.0)
      sum += (best - a[static_cast<std::size_t>(T - 1)][static_cast<std::size_t>(j)]) / best;
  }
  return sum / static_cast<double>(T - 1);
}

// All-pairs comparison: P(real > synthetic), ties half.
inline double auc(const std::vector<double>& scores, const std::vector<bool>& is_real) {
  double wins = 0.0;
  long n_pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!is_real[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (is_real[j]) continue;
      ++n_pairs;
      if (scores[i] > scores[j])
        wins += 1.0;
      else if (scores[i] == scores[j])
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(n_pairs);
}

// Central finite differences of f over every entry of m.
inline Mat finite_diff(Mat m, const std::function<double(const Mat&)>& f, double h = 1e-5) {
  Mat grad(m.rows(), m.cols());
  for (long i = 0; i < m.rows(); ++i)
    for (long j = 0; j < m.cols(); ++j) {
      const double keep = m(i, j);
      m(i, j) = keep + h;
      const double up = f(m);
      m(i, j) = keep - h;
      const double down = f(m);
      m(i, j) = keep;
      grad(i, j) = (up - down) / (2.0 * h);
    }
  return grad;
}

// |a-g| <= tol * max(|a|, |g|) + floor, applied entry-wise.
inline bool grads_close(const Mat& a, const Mat& g, double tol = 1e-4, double floor = 1e-8) {
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < a.cols(); ++j) {
      const double err = std::abs(a(i, j) - g(i, j));
      if (err > tol * std::max(std::abs(a(i, j)), std::abs(g(i, j))) + floor) return false;
    }
  return true;
}

// Random unit-norm embedding group.
inline void random_group(esrm::Rng& rng, long n, long dim, int n_classes, Mat& z,
                         std::vector<int>& labels) {
  z.resize(n, dim);
  labels.clear();
  for (long i = 0; i < n; ++i) {
    double sq = 0.0;
    for (long d = 0; d < dim; ++d) {
      z(i, d) = rng.normal();
      sq += z(i, d) * z(i, d);
    }
    z.row(i) /= std::sqrt(sq) + 1e-12;
    labels.push_back(static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_classes))));
  }
}

}  // namespace oracle
