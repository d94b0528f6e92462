#pragma once

#include <array>
#include <ostream>
#include <vector>

#include "esrm/buffer.hpp"
#include "esrm/data/sample.hpp"
#include "esrm/nn/model.hpp"

namespace esrm::eval {

// a[t][j] = accuracy on task j's test set after training task t. Entries
// with j > t are measured before task j was ever trained (pre-exposure) and
// are excluded from the headline metrics.
struct AccuracyMatrix {
  std::vector<std::vector<double>> a;

  long task_count() const { return static_cast<long>(a.size()); }
  static bool pre_exposure(long t, long j) { return j > t; }
};

// Mean of the last row.
double final_average_accuracy(const AccuracyMatrix& m);

// Mean of the diagonal: accuracy on each task right after learning it.
double learning_accuracy(const AccuracyMatrix& m);

// Mean over tasks j < T-1 of the normalized drop from the task's best
// post-training accuracy to its final accuracy; a task whose best accuracy
// is 0 contributes 0.
double relative_forgetting(const AccuracyMatrix& m);

// 50-bin entropy histograms over [0, ln C], split by provenance.
struct EntropyHistogram {
  static constexpr int kBins = 50;
  double max_entropy = 0.0;  // ln C
  std::array<long, kBins> real{};
  std::array<long, kBins> synthetic{};
};

EntropyHistogram entropy_histogram(nn::LearnerModel& model, const data::LabeledDataset& dataset,
                                   int eval_batch = 128);

// Probability that a random real sample's entropy ranks above a random
// synthetic one (real = positive), ties counted half. Computed via the
// rank-sum form of the Mann-Whitney statistic.
double synthetic_roc_auc(const std::vector<double>& entropies,
                         const std::vector<data::Provenance>& provenance);

// ROC curve points (fpr, tpr) for plotting, thresholding entropy from high
// to low with real as positive.
std::vector<std::pair<double, double>> roc_curve(const std::vector<double>& entropies,
                                                 const std::vector<data::Provenance>& provenance);

// Entropies of a whole dataset under the current model (inference mode),
// aligned with dataset.samples.
std::vector<double> dataset_entropies(nn::LearnerModel& model, const data::LabeledDataset& dataset,
                                      int eval_batch = 128);

// One TSV record per buffer slot whose label passes `class_filter` (empty
// filter = all classes), ordered by sample id: id, label, provenance and the
// 128-dim projection.
void export_embeddings(nn::LearnerModel& model, const replay::MemoryBuffer& buffer,
                       const std::vector<int>& class_filter, std::ostream& out,
                       int eval_batch = 128);

}  // namespace esrm::eval
