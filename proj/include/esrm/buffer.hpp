#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <vector>

#include "esrm/data/tasks.hpp"
#include "esrm/rng.hpp"

namespace esrm::replay {

enum class Strategy { es, reservoir, real_only, synthetic_only };

Strategy strategy_from_string(const std::string& s);
const char* to_string(Strategy s);

struct BufferSlot {
  data::Sample sample;
  double entropy = 0.0;
};

// Fixed-capacity replay store. The entropy-selection policy keeps, per
// incoming batch, only the samples strictly above the batch-median entropy;
// once full, a reservoir draw nominates a slot and the survivor replaces the
// lowest-entropy slot of the nominated slot's class. The seen-counter
// advances only when a sample is actually stored, which deviates from
// classical reservoir counting on purpose.
//
// The other strategies are classical reservoir sampling, optionally
// restricted to one provenance (the real-only / synthetic-only oracles).
class MemoryBuffer {
public:
  MemoryBuffer(std::size_t capacity, Strategy strategy,
               data::SplitMode label_mode = data::SplitMode::CIL);

  // Dispatch on the configured strategy. `entropies` is consulted only by
  // the ES policy and may be empty otherwise.
  void update(const std::vector<data::Sample>& batch, const std::vector<double>& entropies,
              Rng& rng);

  void es_update(const std::vector<data::Sample>& batch, const std::vector<double>& entropies,
                 Rng& rng);
  void reservoir_update(const std::vector<data::Sample>& batch, Rng& rng);
  void oracle_update(const std::vector<data::Sample>& batch, Rng& rng);

  // Uniform draw without replacement; returns all slots when fewer than
  // `mem_batch_size` are stored, and an empty batch from an empty buffer.
  std::vector<data::Sample> sample_memory(std::size_t mem_batch_size, Rng& rng) const;

  // Recomputes every slot's entropy with the supplied evaluator (slot order
  // and contents unchanged).
  using EntropyEvaluator = std::function<std::vector<double>(const std::vector<data::Sample>&)>;
  void refresh_entropy(const EntropyEvaluator& evaluator);

  struct Composition {
    double synthetic_fraction = 0.0;
    std::map<int, std::size_t> per_class_counts;
  };
  Composition composition_stats() const;

  const std::vector<BufferSlot>& slots() const { return slots_; }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t n_seen_so_far() const { return n_seen_; }
  Strategy strategy() const { return strategy_; }

  // Tab-separated snapshot (id, label, provenance, source_tag, entropy).
  void write_snapshot(std::ostream& out) const;

  // Reinserts a slot verbatim when rebuilding a buffer from a snapshot;
  // counts as one seen sample.
  void restore_slot(const data::Sample& s, double entropy);

private:
  int label_of(const data::Sample& s) const { return data::effective_label(s, label_mode_); }
  void reservoir_insert(const data::Sample& s, Rng& rng);

  std::size_t capacity_;
  Strategy strategy_;
  data::SplitMode label_mode_;
  std::vector<BufferSlot> slots_;
  std::uint64_t n_seen_ = 0;
};

}  // namespace esrm::replay
