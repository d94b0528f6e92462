#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "esrm/buffer.hpp"
#include "esrm/data/augment.hpp"
#include "esrm/data/stream.hpp"
#include "esrm/metrics.hpp"
#include "esrm/nn/model.hpp"
#include "esrm/nn/optimizer.hpp"
#include "esrm/objectives.hpp"

namespace esrm::train {

enum class Method { esrm, er };

Method method_from_string(const std::string& s);
const char* to_string(Method m);

struct TrainConfig {
  int stream_batch = 10;
  int mem_batch = 64;
  std::size_t buffer_capacity = 1000;
  Method method = Method::esrm;
  replay::Strategy mem_strategy = replay::Strategy::es;
  nn::Backbone backbone = nn::Backbone::resnet18;
  std::string optimizer = "sgd";
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 0.0;
  data::AugmentationPolicy augmentation;
  objectives::LossWeights loss_weights;
  std::uint64_t seed = 0;
  int eval_batch = 128;
  int composition_every = 10;  // buffer composition sampling interval
};

struct StepLog {
  long iteration = 0;
  int task = 0;
  double total = 0.0;
  double ce = 0.0;
  double sdc = 0.0;
  double rm = 0.0;
};

struct CompositionPoint {
  long iteration = 0;
  double synthetic_fraction = 0.0;
};

struct TrainLog {
  std::vector<StepLog> steps;
  std::vector<CompositionPoint> composition;
};

// Owns the optimizer and RNG streams for one run; model and buffer are
// borrowed. Exactly one optimizer step happens per stream batch.
class Trainer {
public:
  Trainer(nn::LearnerModel& model, replay::MemoryBuffer& buffer, const TrainConfig& cfg,
          data::SplitMode mode);

  StepLog train_step(const std::vector<data::Sample>& stream_batch, int task_index);
  void train_task(const data::Task& task);

  // Fraction of `samples` classified correctly (inference mode, raw images).
  double evaluate(const std::vector<data::Sample>& samples);

  // Inference-mode entropies of raw images; also used for buffer refresh.
  std::vector<double> entropies_of(const std::vector<data::Sample>& samples);

  const TrainLog& log() const { return log_; }
  long iteration() const { return iteration_; }

private:
  StepLog esrm_step(const std::vector<data::Sample>& combined,
                    const std::vector<data::Sample>& stream_batch);
  StepLog er_step(const std::vector<data::Sample>& combined);
  void update_buffer(const std::vector<data::Sample>& stream_batch,
                     const std::vector<double>& entropies);
  void record_composition();

  nn::LearnerModel& model_;
  replay::MemoryBuffer& buffer_;
  TrainConfig cfg_;
  data::SplitMode mode_;
  std::unique_ptr<nn::Optimizer> optimizer_;
  Rng rng_aug_;
  Rng rng_buffer_;
  Rng rng_memory_;
  TrainLog log_;
  long iteration_ = 0;
};

struct ExperimentResult {
  eval::AccuracyMatrix accuracy;
  TrainLog log;
};

// Trains the tasks in sequence order, evaluating on every task's test set
// after each task. `test_sets` must align with seq.tasks.
ExperimentResult run_experiment(nn::LearnerModel& model, replay::MemoryBuffer& buffer,
                                const data::TaskSequence& seq,
                                const std::vector<std::vector<data::Sample>>& test_sets,
                                const TrainConfig& cfg);

}  // namespace esrm::train
