#include "esrm/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace esrm::objectives {

namespace {

// Row-wise log-softmax, numerically stable.
Mat log_softmax_rows(const Mat& x) {
  Mat out = x;
  for (long i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    const double lse = m + std::log((x.row(i).array() - m).exp().sum());
    out.row(i).array() -= lse;
  }
  return out;
}

void check_group(const ContrastGroup& g, const char* name) {
  if (g.z.rows() == 0) throw std::invalid_argument(std::string(name) + ": empty group");
  if (static_cast<long>(g.labels.size()) != g.z.rows())
    throw std::invalid_argument(std::string(name) + ": labels/rows mismatch");
}

}  // namespace

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_by_entropy(
    const std::vector<double>& entropies) {
  const std::size_t n = entropies.size();
  if (n < 2) throw std::invalid_argument("entropy split needs at least 2 samples");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (entropies[a] != entropies[b]) return entropies[a] < entropies[b];
    return a < b;
  });

  const std::size_t low_count = n - n / 2;  // odd batches put the extra here
  std::vector<bool> is_high(n, false);
  for (std::size_t r = low_count; r < n; ++r) is_high[order[r]] = true;

  std::vector<std::size_t> plus, minus;
  for (std::size_t i = 0; i < n; ++i) (is_high[i] ? plus : minus).push_back(i);
  return {plus, minus};
}

double match_loss(const ContrastGroup& g1, const ContrastGroup& g2, double tau) {
  return match_loss_grad(g1, g2, tau, nullptr, nullptr);
}

double match_loss_grad(const ContrastGroup& g1, const ContrastGroup& g2, double tau, Mat* dz1,
                       Mat* dz2) {
  check_group(g1, "match_loss g1");
  check_group(g2, "match_loss g2");
  if (g1.z.cols() != g2.z.cols()) throw std::invalid_argument("embedding dims differ");
  if (tau <= 0.0) throw std::invalid_argument("tau must be positive");

  const long n1 = g1.z.rows();
  const long n2 = g2.z.rows();
  const Mat sim = g1.z * g2.z.transpose() / tau;  // n1 x n2

  double loss = 0.0;
  for (long i = 0; i < n1; ++i) {
    long n_pos = 0;
    for (long d = 0; d < n2; ++d)
      if (g2.labels[static_cast<std::size_t>(d)] == g1.labels[static_cast<std::size_t>(i)])
        ++n_pos;
    if (n_pos == 0) continue;  // no positives: anchor excluded

    const double m = sim.row(i).maxCoeff();
    const double lse = m + std::log((sim.row(i).array() - m).exp().sum());

    double pos_mean = 0.0;
    for (long d = 0; d < n2; ++d)
      if (g2.labels[static_cast<std::size_t>(d)] == g1.labels[static_cast<std::size_t>(i)])
        pos_mean += sim(i, d);
    pos_mean /= static_cast<double>(n_pos);

    loss += lse - pos_mean;

    if (dz1 || dz2) {
      // d(loss)/d sim(i,d) = softmax_d - [d positive]/n_pos
      Eigen::RowVectorXd coeff = (sim.row(i).array() - lse).exp().matrix();
      for (long d = 0; d < n2; ++d)
        if (g2.labels[static_cast<std::size_t>(d)] == g1.labels[static_cast<std::size_t>(i)])
          coeff(d) -= 1.0 / static_cast<double>(n_pos);
      coeff /= tau;
      if (dz1) dz1->row(i) += coeff * g2.z;
      if (dz2) dz2->noalias() += coeff.transpose() * g1.z.row(i);
    }
  }
  return loss;
}

double rm_loss(const ContrastGroup& z_plus, const ContrastGroup& z_minus,
               const ContrastGroup& z_new, const ContrastGroup& z_mem, double tau) {
  auto term = [tau](const ContrastGroup& a, const ContrastGroup& b) {
    return (a.size() > 0 && b.size() > 0) ? match_loss(a, b, tau) : 0.0;
  };
  return term(z_plus, z_minus) + term(z_minus, z_plus) + term(z_new, z_mem) +
         term(z_mem, z_new);
}

namespace {

ContrastGroup gather(const Mat& z, const std::vector<int>& labels,
                     const std::vector<std::size_t>& idx) {
  ContrastGroup g;
  g.z.resize(static_cast<long>(idx.size()), z.cols());
  g.labels.reserve(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    g.z.row(static_cast<long>(r)) = z.row(static_cast<long>(idx[r]));
    g.labels.push_back(labels[idx[r]]);
  }
  return g;
}

void scatter_add(Mat* dz, const Mat& dg, const std::vector<std::size_t>& idx) {
  for (std::size_t r = 0; r < idx.size(); ++r)
    dz->row(static_cast<long>(idx[r])) += dg.row(static_cast<long>(r));
}

}  // namespace

double rm_loss_grad(const Mat& z, const std::vector<int>& labels,
                    const std::vector<std::size_t>& plus_idx,
                    const std::vector<std::size_t>& minus_idx,
                    const std::vector<std::size_t>& new_idx,
                    const std::vector<std::size_t>& mem_idx, double tau, Mat* dz) {
  double loss = 0.0;
  auto term = [&](const std::vector<std::size_t>& ia, const std::vector<std::size_t>& ib) {
    if (ia.empty() || ib.empty()) return;
    const ContrastGroup a = gather(z, labels, ia);
    const ContrastGroup b = gather(z, labels, ib);
    if (!dz) {
      loss += match_loss(a, b, tau);
      return;
    }
    Mat da = Mat::Zero(a.z.rows(), a.z.cols());
    Mat db = Mat::Zero(b.z.rows(), b.z.cols());
    loss += match_loss_grad(a, b, tau, &da, &db);
    scatter_add(dz, da, ia);
    scatter_add(dz, db, ib);
  };
  term(plus_idx, minus_idx);
  term(minus_idx, plus_idx);
  term(new_idx, mem_idx);
  term(mem_idx, new_idx);
  return loss;
}

double sdc_loss(const Mat& student_logits, const Mat& teacher_logits, double t) {
  return sdc_loss_grad(student_logits, teacher_logits, t, nullptr);
}

double sdc_loss_grad(const Mat& student_logits, const Mat& teacher_logits, double t,
                     Mat* dstudent) {
  if (student_logits.rows() != teacher_logits.rows() ||
      student_logits.cols() != teacher_logits.cols())
    throw std::invalid_argument("sdc_loss: logit shapes differ");
  if (t <= 0.0) throw std::invalid_argument("distillation temperature must be positive");

  const long n = student_logits.rows();
  const Mat log_p = log_softmax_rows(student_logits / t);
  const Mat log_q = log_softmax_rows(teacher_logits / t);
  const Mat p = log_p.array().exp().matrix();
  const Mat r = log_p - log_q;

  double loss = 0.0;
  for (long i = 0; i < n; ++i) {
    const double kl_i = (p.row(i).array() * r.row(i).array()).sum();
    loss += kl_i;
    if (dstudent)
      dstudent->row(i) +=
          (p.row(i).array() * (r.row(i).array() - kl_i)).matrix() / (t * static_cast<double>(n));
  }
  return loss / static_cast<double>(n);
}

double cross_entropy(const Mat& logits, const std::vector<int>& labels) {
  return cross_entropy_grad(logits, labels, nullptr);
}

double cross_entropy_grad(const Mat& logits, const std::vector<int>& labels, Mat* dlogits) {
  const long n = logits.rows();
  if (static_cast<long>(labels.size()) != n)
    throw std::invalid_argument("cross_entropy: labels/rows mismatch");

  const Mat log_p = log_softmax_rows(logits);
  double loss = 0.0;
  for (long i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= logits.cols())
      throw std::out_of_range("cross_entropy: label out of range");
    loss -= log_p(i, y);
    if (dlogits) {
      dlogits->row(i) += log_p.row(i).array().exp().matrix() / static_cast<double>(n);
      (*dlogits)(i, y) -= 1.0 / static_cast<double>(n);
    }
  }
  return loss / static_cast<double>(n);
}

double ce_pair(const Mat& logits, const Mat& logits_aug, const std::vector<int>& labels) {
  if (logits.rows() != logits_aug.rows() || logits.cols() != logits_aug.cols())
    throw std::invalid_argument("ce_pair: logit shapes differ");
  return cross_entropy(logits, labels) + cross_entropy(logits_aug, labels);
}

double total_loss(double ce, double sdc, double rm, const LossWeights& w) {
  if (!std::isfinite(ce)) throw std::runtime_error("non-finite loss component: ce");
  if (!std::isfinite(sdc)) throw std::runtime_error("non-finite loss component: sdc");
  if (!std::isfinite(rm)) throw std::runtime_error("non-finite loss component: rm");
  return ce + w.lambda1 * sdc + w.lambda2 * rm;
}

}  // namespace esrm::objectives
