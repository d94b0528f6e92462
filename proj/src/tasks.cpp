#include "esrm/data/tasks.hpp"

#include <algorithm>
#include <stdexcept>

#include "esrm/rng.hpp"

namespace esrm::data {

TaskSequence split_cil(const LabeledDataset& dataset, int n_tasks, std::uint64_t seed) {
  if (n_tasks <= 0) throw std::invalid_argument("n_tasks must be positive");
  if (dataset.class_count % n_tasks != 0)
    throw std::invalid_argument("class count " + std::to_string(dataset.class_count) +
                                " not divisible by " + std::to_string(n_tasks) + " tasks");

  std::vector<int> order(static_cast<std::size_t>(dataset.class_count));
  for (int c = 0; c < dataset.class_count; ++c) order[static_cast<std::size_t>(c)] = c;
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(SeedStream::task_order)));
  rng.shuffle(order);

  TaskSequence seq;
  seq.mode = SplitMode::CIL;
  seq.seed = seed;
  seq.learner_class_count = dataset.class_count;

  const int per_task = dataset.class_count / n_tasks;
  for (int t = 0; t < n_tasks; ++t) {
    Task task;
    task.index = t;
    task.classes.assign(order.begin() + static_cast<long>(t) * per_task,
                        order.begin() + static_cast<long>(t + 1) * per_task);
    std::sort(task.classes.begin(), task.classes.end());
    task.source_classes = task.classes;
    for (const Sample& s : dataset.samples)
      if (std::binary_search(task.classes.begin(), task.classes.end(), s.label))
        task.samples.push_back(s);
    seq.tasks.push_back(std::move(task));
  }
  return seq;
}

TaskSequence split_dil(const LabeledDataset& dataset, const std::vector<int>& coarse_map,
                       int n_steps, std::uint64_t seed) {
  if (n_steps <= 0) throw std::invalid_argument("n_steps must be positive");
  if (static_cast<int>(coarse_map.size()) != dataset.class_count)
    throw std::invalid_argument("coarse map size must equal fine class count");

  int coarse_count = 0;
  for (int g : coarse_map) {
    if (g < 0) throw std::invalid_argument("negative coarse label");
    coarse_count = std::max(coarse_count, g + 1);
  }

  std::vector<std::vector<int>> fines_of(static_cast<std::size_t>(coarse_count));
  for (int fine = 0; fine < dataset.class_count; ++fine)
    fines_of[static_cast<std::size_t>(coarse_map[static_cast<std::size_t>(fine)])].push_back(fine);
  for (int g = 0; g < coarse_count; ++g)
    if (static_cast<int>(fines_of[static_cast<std::size_t>(g)].size()) != n_steps)
      throw std::invalid_argument("coarse class " + std::to_string(g) + " has " +
                                  std::to_string(fines_of[static_cast<std::size_t>(g)].size()) +
                                  " fine classes, expected " + std::to_string(n_steps));

  // Permute each coarse group's fine-to-step assignment independently.
  for (int g = 0; g < coarse_count; ++g) {
    Rng rng(derive_seed(seed, 7000003ULL + static_cast<std::uint64_t>(g)));
    rng.shuffle(fines_of[static_cast<std::size_t>(g)]);
  }

  TaskSequence seq;
  seq.mode = SplitMode::DIL;
  seq.seed = seed;
  seq.learner_class_count = coarse_count;

  for (int k = 0; k < n_steps; ++k) {
    Task task;
    task.index = k;
    for (int g = 0; g < coarse_count; ++g) {
      task.classes.push_back(g);
      task.source_classes.push_back(fines_of[static_cast<std::size_t>(g)][static_cast<std::size_t>(k)]);
    }
    std::sort(task.source_classes.begin(), task.source_classes.end());
    for (const Sample& s : dataset.samples)
      if (std::binary_search(task.source_classes.begin(), task.source_classes.end(), s.label)) {
        Sample copy = s;
        copy.coarse_label = coarse_map[static_cast<std::size_t>(s.label)];
        task.samples.push_back(std::move(copy));
      }
    seq.tasks.push_back(std::move(task));
  }
  return seq;
}

std::vector<std::vector<Sample>> build_test_sets(const LabeledDataset& test_set,
                                                 const TaskSequence& seq,
                                                 const std::vector<int>& coarse_map) {
  if (seq.mode == SplitMode::DIL && static_cast<int>(coarse_map.size()) != test_set.class_count)
    throw std::invalid_argument("DIL test sets require the coarse map");

  std::vector<std::vector<Sample>> out;
  for (const Task& task : seq.tasks) {
    std::vector<Sample> subset;
    for (const Sample& s : test_set.samples)
      if (std::binary_search(task.source_classes.begin(), task.source_classes.end(), s.label)) {
        Sample copy = s;
        if (seq.mode == SplitMode::DIL)
          copy.coarse_label = coarse_map[static_cast<std::size_t>(s.label)];
        subset.push_back(std::move(copy));
      }
    out.push_back(std::move(subset));
  }
  return out;
}

}  // namespace esrm::data
