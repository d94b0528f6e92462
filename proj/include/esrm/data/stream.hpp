#pragma once

#include <cstdint>
#include <vector>

#include "esrm/data/tasks.hpp"

namespace esrm::data {

// One-pass stream over a task: samples shuffled once by seed, then cut into
// consecutive batches. The trailing partial batch is emitted as-is.
std::vector<std::vector<Sample>> stream_batches(const Task& task, int stream_batch_size,
                                                std::uint64_t seed);

}  // namespace esrm::data
