#include "esrm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "esrm/data/augment.hpp"

namespace esrm::eval {

double final_average_accuracy(const AccuracyMatrix& m) {
  const long T = m.task_count();
  if (T < 1) throw std::invalid_argument("empty accuracy matrix");
  const auto& last = m.a.back();
  if (static_cast<long>(last.size()) != T)
    throw std::invalid_argument("incomplete last row of accuracy matrix");
  double sum = 0.0;
  for (double v : last) sum += v;
  return sum / static_cast<double>(T);
}

double learning_accuracy(const AccuracyMatrix& m) {
  const long T = m.task_count();
  if (T < 1) throw std::invalid_argument("empty accuracy matrix");
  double sum = 0.0;
  for (long j = 0; j < T; ++j) {
    if (static_cast<long>(m.a[static_cast<std::size_t>(j)].size()) <= j)
      throw std::invalid_argument("missing diagonal entry in accuracy matrix");
    sum += m.a[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)];
  }
  return sum / static_cast<double>(T);
}

double relative_forgetting(const AccuracyMatrix& m) {
  const long T = m.task_count();
  if (T < 2) throw std::invalid_argument("relative forgetting needs at least 2 tasks");
  double sum = 0.0;
  for (long j = 0; j < T - 1; ++j) {
    double best = 0.0;
    for (long t = j; t < T; ++t)
      best = std::max(best, m.a[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)]);
    const double final_acc = m.a[static_cast<std::size_t>(T - 1)][static_cast<std::size_t>(j)];
    sum += best > 0.0 ? (best - final_acc) / best : 0.0;
  }
  return sum / static_cast<double>(T - 1);
}

std::vector<double> dataset_entropies(nn::LearnerModel& model, const data::LabeledDataset& dataset,
                                      int eval_batch) {
  std::vector<double> out;
  out.reserve(dataset.samples.size());
  for (std::size_t start = 0; start < dataset.samples.size();
       start += static_cast<std::size_t>(eval_batch)) {
    const std::size_t end =
        std::min(dataset.samples.size(), start + static_cast<std::size_t>(eval_batch));
    std::vector<data::Sample> chunk(dataset.samples.begin() + static_cast<long>(start),
                                    dataset.samples.begin() + static_cast<long>(end));
    const Tensor logits = model.classify(data::assemble_batch(chunk), /*train=*/false);
    const Eigen::VectorXd h = nn::entropy(nn::to_eigen(logits));
    for (long i = 0; i < h.size(); ++i) out.push_back(h(i));
  }
  return out;
}

EntropyHistogram entropy_histogram(nn::LearnerModel& model, const data::LabeledDataset& dataset,
                                   int eval_batch) {
  EntropyHistogram hist;
  hist.max_entropy = std::log(static_cast<double>(model.class_count()));
  const std::vector<double> h = dataset_entropies(model, dataset, eval_batch);
  for (std::size_t i = 0; i < h.size(); ++i) {
    int bin = static_cast<int>(h[i] / hist.max_entropy * EntropyHistogram::kBins);
    bin = std::clamp(bin, 0, EntropyHistogram::kBins - 1);
    if (dataset.samples[i].provenance == data::Provenance::real)
      hist.real[static_cast<std::size_t>(bin)] += 1;
    else
      hist.synthetic[static_cast<std::size_t>(bin)] += 1;
  }
  return hist;
}

double synthetic_roc_auc(const std::vector<double>& entropies,
                         const std::vector<data::Provenance>& provenance) {
  if (entropies.size() != provenance.size())
    throw std::invalid_argument("entropy/provenance size mismatch");
  const std::size_t n = entropies.size();
  std::size_t n_real = 0;
  for (auto p : provenance)
    if (p == data::Provenance::real) ++n_real;
  const std::size_t n_syn = n - n_real;
  if (n_real == 0 || n_syn == 0)
    throw std::invalid_argument("ROC needs both real and synthetic samples");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return entropies[a] < entropies[b]; });

  // average ranks over tie groups, 1-based
  std::vector<double> rank(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && entropies[order[j + 1]] == entropies[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }

  double real_rank_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    if (provenance[k] == data::Provenance::real) real_rank_sum += rank[k];

  const double u = real_rank_sum - static_cast<double>(n_real) * (n_real + 1) / 2.0;
  return u / (static_cast<double>(n_real) * static_cast<double>(n_syn));
}

std::vector<std::pair<double, double>> roc_curve(const std::vector<double>& entropies,
                                                 const std::vector<data::Provenance>& provenance) {
  const std::size_t n = entropies.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return entropies[a] > entropies[b]; });

  double n_real = 0.0, n_syn = 0.0;
  for (auto p : provenance) (p == data::Provenance::real ? n_real : n_syn) += 1.0;

  std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
  double tp = 0.0, fp = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;  // advance through ties as one threshold step
    while (j + 1 < n && entropies[order[j + 1]] == entropies[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k)
      (provenance[order[k]] == data::Provenance::real ? tp : fp) += 1.0;
    pts.emplace_back(fp / n_syn, tp / n_real);
    i = j + 1;
  }
  return pts;
}

void export_embeddings(nn::LearnerModel& model, const replay::MemoryBuffer& buffer,
                       const std::vector<int>& class_filter, std::ostream& out, int eval_batch) {
  std::vector<data::Sample> selected;
  for (const replay::BufferSlot& slot : buffer.slots()) {
    if (!class_filter.empty() &&
        std::find(class_filter.begin(), class_filter.end(), slot.sample.label) ==
            class_filter.end())
      continue;
    selected.push_back(slot.sample);
  }
  std::sort(selected.begin(), selected.end(),
            [](const data::Sample& a, const data::Sample& b) { return a.id < b.id; });

  out << "id\tlabel\tprovenance";
  for (int d = 0; d < nn::LearnerModel::kProjectionDim; ++d) out << "\tz" << d;
  out << "\n";

  for (std::size_t start = 0; start < selected.size();
       start += static_cast<std::size_t>(eval_batch)) {
    const std::size_t end =
        std::min(selected.size(), start + static_cast<std::size_t>(eval_batch));
    std::vector<data::Sample> chunk(selected.begin() + static_cast<long>(start),
                                    selected.begin() + static_cast<long>(end));
    const Tensor z = model.embed(data::assemble_batch(chunk), /*train=*/false);
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      out << chunk[i].id << '\t' << chunk[i].label << '\t'
          << data::to_string(chunk[i].provenance);
      for (long d = 0; d < z.dim(1); ++d)
        out << '\t' << z.data[static_cast<std::size_t>(static_cast<long>(i) * z.dim(1) + d)];
      out << '\n';
    }
  }
}

}  // namespace esrm::eval
