#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "esrm/data/sample.hpp"

namespace esrm::data {

enum class SplitMode { CIL, DIL };

// One step of an incremental stream. Samples are materialized copies (cheap,
// image storage is shared); `label()` is what the learner sees, coarse in
// DIL mode.
struct Task {
  int index = 0;
  std::vector<int> classes;         // learner-visible class ids covered
  std::vector<int> source_classes;  // underlying fine class ids (== classes in CIL)
  std::vector<Sample> samples;
};

struct TaskSequence {
  SplitMode mode = SplitMode::CIL;
  std::uint64_t seed = 0;
  int learner_class_count = 0;  // classifier head size
  std::vector<Task> tasks;
};

// Learner-visible label of a sample within a given split mode.
inline int effective_label(const Sample& s, SplitMode mode) {
  return mode == SplitMode::DIL ? s.coarse_label : s.label;
}

// Classes are permuted by `seed` and dealt to tasks in contiguous blocks of
// class_count / n_tasks; the resulting block order is the task order.
TaskSequence split_cil(const LabeledDataset& dataset, int n_tasks, std::uint64_t seed);

// `coarse_map[fine] = coarse`. Each coarse class must own exactly n_steps
// fine classes; step k receives the k-th fine class of every coarse class
// (assignment permuted by seed). Learner labels are the coarse ids.
TaskSequence split_dil(const LabeledDataset& dataset, const std::vector<int>& coarse_map,
                       int n_steps, std::uint64_t seed);

// Test samples regrouped to match a task sequence: entry j holds the test
// samples of task j's classes (with coarse labels applied in DIL mode).
std::vector<std::vector<Sample>> build_test_sets(const LabeledDataset& test_set,
                                                 const TaskSequence& seq,
                                                 const std::vector<int>& coarse_map = {});

}  // namespace esrm::data
