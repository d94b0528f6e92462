#include "esrm/trainer.hpp"

#include <algorithm>
#include <stdexcept>

namespace esrm::train {

namespace obj = esrm::objectives;

Method method_from_string(const std::string& s) {
  if (s == "esrm") return Method::esrm;
  if (s == "er") return Method::er;
  throw std::runtime_error("unknown method: " + s);
}

const char* to_string(Method m) { return m == Method::esrm ? "esrm" : "er"; }

Trainer::Trainer(nn::LearnerModel& model, replay::MemoryBuffer& buffer, const TrainConfig& cfg,
                 data::SplitMode mode)
    : model_(model),
      buffer_(buffer),
      cfg_(cfg),
      mode_(mode),
      optimizer_(nn::make_optimizer(cfg.optimizer, cfg.lr, cfg.momentum, cfg.weight_decay)),
      rng_aug_(derive_seed(cfg.seed, static_cast<std::uint64_t>(SeedStream::augmentation))),
      rng_buffer_(derive_seed(cfg.seed, static_cast<std::uint64_t>(SeedStream::buffer))),
      rng_memory_(derive_seed(cfg.seed, static_cast<std::uint64_t>(SeedStream::memory_sampling))) {
  if (cfg.stream_batch < 2) throw std::invalid_argument("stream batch must be >= 2");
}

std::vector<double> Trainer::entropies_of(const std::vector<data::Sample>& samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size();
       start += static_cast<std::size_t>(cfg_.eval_batch)) {
    const std::size_t end =
        std::min(samples.size(), start + static_cast<std::size_t>(cfg_.eval_batch));
    std::vector<data::Sample> chunk(samples.begin() + static_cast<long>(start),
                                    samples.begin() + static_cast<long>(end));
    const Tensor logits = model_.classify(data::assemble_batch(chunk), /*train=*/false);
    const Eigen::VectorXd h = nn::entropy(nn::to_eigen(logits));
    for (long i = 0; i < h.size(); ++i) out.push_back(h(i));
  }
  return out;
}

StepLog Trainer::train_step(const std::vector<data::Sample>& stream_batch, int task_index) {
  if (stream_batch.empty()) throw std::invalid_argument("empty stream batch");

  std::vector<data::Sample> combined = stream_batch;
  const std::vector<data::Sample> memory =
      buffer_.sample_memory(static_cast<std::size_t>(cfg_.mem_batch), rng_memory_);
  combined.insert(combined.end(), memory.begin(), memory.end());

  StepLog entry;
  if (cfg_.method == Method::esrm) {
    entry = esrm_step(combined, stream_batch);
  } else {
    entry = er_step(combined);
    // Buffer update follows the weight update; the ES policy looks at
    // entropies under the just-updated weights.
    std::vector<double> entropies;
    if (buffer_.strategy() == replay::Strategy::es) entropies = entropies_of(stream_batch);
    update_buffer(stream_batch, entropies);
  }
  entry.iteration = ++iteration_;
  entry.task = task_index;
  log_.steps.push_back(entry);

  if (cfg_.composition_every > 0 && iteration_ % cfg_.composition_every == 0)
    record_composition();
  return entry;
}

StepLog Trainer::er_step(const std::vector<data::Sample>& combined) {
  const std::vector<int> labels = data::labels_of(combined, mode_);

  model_.zero_grad();
  const Tensor x_aug = data::augment(combined, cfg_.augmentation, rng_aug_);
  const Tensor feat = model_.trunk_forward(x_aug, /*train=*/true);
  const Tensor logits = model_.classifier_forward(feat, /*train=*/true);

  const obj::Mat logits_d = nn::to_eigen(logits);
  obj::Mat dlogits = obj::Mat::Zero(logits_d.rows(), logits_d.cols());
  const double ce = obj::cross_entropy_grad(logits_d, labels, &dlogits);
  obj::total_loss(ce, 0.0, 0.0, cfg_.loss_weights);  // finiteness check

  model_.trunk_backward(model_.classifier_backward(nn::from_eigen(dlogits)));
  optimizer_->step(model_.params());

  StepLog entry;
  entry.ce = ce;
  entry.total = ce;
  return entry;
}

StepLog Trainer::esrm_step(const std::vector<data::Sample>& combined,
                           const std::vector<data::Sample>& stream_batch) {
  const std::vector<int> labels = data::labels_of(combined, mode_);
  const std::size_t n_stream = stream_batch.size();
  const std::size_t n_total = combined.size();

  // One entropy vector per step: it drives the contrastive split here and
  // the buffer update afterwards.
  const std::vector<double> stream_entropies = entropies_of(stream_batch);

  model_.zero_grad();

  // Augmented view: its cross-entropy trains the network, its logits are the
  // frozen distillation teacher.
  const Tensor x_aug = data::augment(combined, cfg_.augmentation, rng_aug_);
  const Tensor feat_aug = model_.trunk_forward(x_aug, /*train=*/true);
  const Tensor logits_aug = model_.classifier_forward(feat_aug, /*train=*/true);
  const obj::Mat teacher = nn::to_eigen(logits_aug);

  obj::Mat dlogits_aug = obj::Mat::Zero(teacher.rows(), teacher.cols());
  const double ce_aug = obj::cross_entropy_grad(teacher, labels, &dlogits_aug);
  model_.trunk_backward(model_.classifier_backward(nn::from_eigen(dlogits_aug)));

  // Raw view: cross-entropy + distillation on the logits, similarity
  // matching on the projections.
  const Tensor x_raw = data::assemble_batch(combined);
  const Tensor feat = model_.trunk_forward(x_raw, /*train=*/true);
  const Tensor logits = model_.classifier_forward(feat, /*train=*/true);
  const Tensor z = model_.projector_forward(feat, /*train=*/true);

  const obj::Mat logits_d = nn::to_eigen(logits);
  obj::Mat dlogits = obj::Mat::Zero(logits_d.rows(), logits_d.cols());
  const double ce_raw = obj::cross_entropy_grad(logits_d, labels, &dlogits);

  obj::Mat dlogits_sdc = obj::Mat::Zero(logits_d.rows(), logits_d.cols());
  const double sdc = obj::sdc_loss_grad(logits_d, teacher, cfg_.loss_weights.t, &dlogits_sdc);
  dlogits += cfg_.loss_weights.lambda1 * dlogits_sdc;

  std::vector<std::size_t> plus_idx, minus_idx;
  if (n_stream >= 2) {
    std::tie(plus_idx, minus_idx) = obj::split_by_entropy(stream_entropies);
  }
  std::vector<std::size_t> new_idx(n_stream), mem_idx;
  for (std::size_t i = 0; i < n_stream; ++i) new_idx[i] = i;
  for (std::size_t i = n_stream; i < n_total; ++i) mem_idx.push_back(i);

  const obj::Mat z_d = nn::to_eigen(z);
  obj::Mat dz = obj::Mat::Zero(z_d.rows(), z_d.cols());
  const double rm = obj::rm_loss_grad(z_d, labels, plus_idx, minus_idx, new_idx, mem_idx,
                                      cfg_.loss_weights.tau, &dz);
  dz *= cfg_.loss_weights.lambda2;

  const double ce = ce_aug + ce_raw;
  const double total = obj::total_loss(ce, sdc, rm, cfg_.loss_weights);

  Tensor dfeat = model_.classifier_backward(nn::from_eigen(dlogits));
  dfeat += model_.projector_backward(nn::from_eigen(dz));
  model_.trunk_backward(dfeat);
  optimizer_->step(model_.params());

  update_buffer(stream_batch, stream_entropies);

  StepLog entry;
  entry.ce = ce;
  entry.sdc = sdc;
  entry.rm = rm;
  entry.total = total;
  return entry;
}

void Trainer::update_buffer(const std::vector<data::Sample>& stream_batch,
                            const std::vector<double>& entropies) {
  if (buffer_.strategy() == replay::Strategy::es)
    buffer_.es_update(stream_batch, entropies, rng_buffer_);
  else
    buffer_.update(stream_batch, {}, rng_buffer_);
}

void Trainer::record_composition() {
  log_.composition.push_back({iteration_, buffer_.composition_stats().synthetic_fraction});
}

void Trainer::train_task(const data::Task& task) {
  const auto batches = data::stream_batches(task, cfg_.stream_batch, cfg_.seed);
  for (const auto& batch : batches) train_step(batch, task.index);

  if (buffer_.strategy() == replay::Strategy::es)
    buffer_.refresh_entropy(
        [this](const std::vector<data::Sample>& samples) { return entropies_of(samples); });
}

double Trainer::evaluate(const std::vector<data::Sample>& samples) {
  if (samples.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < samples.size();
       start += static_cast<std::size_t>(cfg_.eval_batch)) {
    const std::size_t end =
        std::min(samples.size(), start + static_cast<std::size_t>(cfg_.eval_batch));
    std::vector<data::Sample> chunk(samples.begin() + static_cast<long>(start),
                                    samples.begin() + static_cast<long>(end));
    const Tensor logits = model_.classify(data::assemble_batch(chunk), /*train=*/false);
    const long C = logits.dim(1);
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const float* row = logits.ptr() + static_cast<long>(i) * C;
      long best = 0;
      for (long c = 1; c < C; ++c)
        if (row[c] > row[best]) best = c;
      if (static_cast<int>(best) == data::effective_label(chunk[i], mode_)) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

ExperimentResult run_experiment(nn::LearnerModel& model, replay::MemoryBuffer& buffer,
                                const data::TaskSequence& seq,
                                const std::vector<std::vector<data::Sample>>& test_sets,
                                const TrainConfig& cfg) {
  if (test_sets.size() != seq.tasks.size())
    throw std::invalid_argument("one test set per task is required");

  Trainer trainer(model, buffer, cfg, seq.mode);
  ExperimentResult result;
  for (const data::Task& task : seq.tasks) {
    trainer.train_task(task);
    std::vector<double> row;
    row.reserve(test_sets.size());
    for (const auto& test : test_sets) row.push_back(trainer.evaluate(test));
    result.accuracy.a.push_back(std::move(row));
  }
  result.log = trainer.log();
  return result;
}

}  // namespace esrm::train
