#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <utility>
#include <vector>

namespace esrm::objectives {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Scalar hyperparameters of the composite objective.
struct LossWeights {
  double tau = 0.07;     // contrastive temperature
  double t = 4.0;        // distillation temperature
  double lambda1 = 1.0;  // distillation term weight
  double lambda2 = 0.5;  // similarity-matching term weight
};

// A group of projected embeddings with their class labels. Rows are expected
// to be unit-norm (the similarity is a plain dot product).
struct ContrastGroup {
  Mat z;
  std::vector<int> labels;

  long size() const { return z.rows(); }
};

// Splits a batch into (high-entropy half, low-entropy half) by index.
// Ties are broken by batch index, lower index counting as lower entropy;
// with an odd batch the extra element lands in the low half. Returned index
// lists preserve the original batch order.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_by_entropy(
    const std::vector<double>& entropies);

// Similarity-matching loss between group g1 (anchors) and group g2
// (candidates): each anchor pulls toward its same-class rows of g2 against a
// softmax over all of g2. Anchors with no positive in g2 contribute nothing.
double match_loss(const ContrastGroup& g1, const ContrastGroup& g2, double tau);

// As match_loss, additionally accumulating d(loss)/dz1 into *dz1 and
// d(loss)/dz2 into *dz2 (either may be null). Gradient matrices must be
// pre-sized to match the groups.
double match_loss_grad(const ContrastGroup& g1, const ContrastGroup& g2, double tau, Mat* dz1,
                       Mat* dz2);

// Four-term combination: both directions between the high/low entropy halves
// of the stream batch, and both directions between stream and memory. A term
// whose either group is empty contributes 0.
double rm_loss(const ContrastGroup& z_plus, const ContrastGroup& z_minus,
               const ContrastGroup& z_new, const ContrastGroup& z_mem, double tau);

// Trainer-facing form over one combined embedding matrix. Index sets select
// the four groups out of `z`; the gradient is scatter-added into *dz.
double rm_loss_grad(const Mat& z, const std::vector<int>& labels,
                    const std::vector<std::size_t>& plus_idx,
                    const std::vector<std::size_t>& minus_idx,
                    const std::vector<std::size_t>& new_idx,
                    const std::vector<std::size_t>& mem_idx, double tau, Mat* dz);

// Mean KL(softmax(student/t) || softmax(teacher/t)). Differentiable in the
// student only; the teacher is treated as a constant.
double sdc_loss(const Mat& student_logits, const Mat& teacher_logits, double t);
double sdc_loss_grad(const Mat& student_logits, const Mat& teacher_logits, double t,
                     Mat* dstudent);

// Mean cross-entropy with integer labels, natural log.
double cross_entropy(const Mat& logits, const std::vector<int>& labels);
double cross_entropy_grad(const Mat& logits, const std::vector<int>& labels, Mat* dlogits);

// Sum of the two mean cross-entropies over the raw and augmented views.
double ce_pair(const Mat& logits, const Mat& logits_aug, const std::vector<int>& labels);

// ce + lambda1 * sdc + lambda2 * rm. Throws if any component is non-finite,
// naming the offender.
double total_loss(double ce, double sdc, double rm, const LossWeights& w);

}  // namespace esrm::objectives
