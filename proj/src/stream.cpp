#include "esrm/data/stream.hpp"

#include <stdexcept>

#include "esrm/rng.hpp"

namespace esrm::data {

std::vector<std::vector<Sample>> stream_batches(const Task& task, int stream_batch_size,
                                                std::uint64_t seed) {
  if (stream_batch_size < 2)
    throw std::invalid_argument("stream batch size must be >= 2");
  if (task.samples.empty())
    throw std::invalid_argument("cannot stream an empty task");

  std::vector<std::size_t> order(task.samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(SeedStream::stream_order) +
                                17000003ULL * static_cast<std::uint64_t>(task.index)));
  rng.shuffle(order);

  std::vector<std::vector<Sample>> batches;
  for (std::size_t start = 0; start < order.size();
       start += static_cast<std::size_t>(stream_batch_size)) {
    const std::size_t end =
        std::min(order.size(), start + static_cast<std::size_t>(stream_batch_size));
    std::vector<Sample> batch;
    batch.reserve(end - start);
    for (std::size_t i = start; i < end; ++i) batch.push_back(task.samples[order[i]]);
    batches.push_back(std::move(batch));
  }
  return batches;
}

}  // namespace esrm::data
