#include "esrm/buffer.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace esrm::replay {

Strategy strategy_from_string(const std::string& s) {
  if (s == "es") return Strategy::es;
  if (s == "reservoir") return Strategy::reservoir;
  if (s == "real_only") return Strategy::real_only;
  if (s == "synthetic_only") return Strategy::synthetic_only;
  throw std::runtime_error("unknown memory strategy: " + s);
}

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::es: return "es";
    case Strategy::reservoir: return "reservoir";
    case Strategy::real_only: return "real_only";
    default: return "synthetic_only";
  }
}

MemoryBuffer::MemoryBuffer(std::size_t capacity, Strategy strategy, data::SplitMode label_mode)
    : capacity_(capacity), strategy_(strategy), label_mode_(label_mode) {
  if (capacity == 0) throw std::invalid_argument("buffer capacity must be positive");
  slots_.reserve(capacity);
}

void MemoryBuffer::update(const std::vector<data::Sample>& batch,
                          const std::vector<double>& entropies, Rng& rng) {
  switch (strategy_) {
    case Strategy::es: es_update(batch, entropies, rng); break;
    case Strategy::reservoir: reservoir_update(batch, rng); break;
    default: oracle_update(batch, rng); break;
  }
}

namespace {

// Linear-interpolated 0.5 quantile (the even case averages the middle pair).
double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void MemoryBuffer::es_update(const std::vector<data::Sample>& batch,
                             const std::vector<double>& entropies, Rng& rng) {
  if (strategy_ != Strategy::es) throw std::logic_error("es_update on non-ES buffer");
  if (batch.size() != entropies.size())
    throw std::invalid_argument("es_update: entropy count mismatch");
  if (batch.empty()) return;

  const double threshold = median_of(entropies);

  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!(entropies[i] > threshold)) continue;  // strict comparison

    // The reservoir draw happens before the fill branch (and is overridden
    // by it), so randomness is consumed either way.
    const auto nominate = static_cast<std::uint64_t>(
        rng.uniform01() * static_cast<double>(n_seen_ + 1));

    if (slots_.size() < capacity_) {
      slots_.push_back({batch[i], entropies[i]});
      ++n_seen_;
    } else if (nominate < capacity_) {
      const int victim_class = label_of(slots_[static_cast<std::size_t>(nominate)].sample);
      std::size_t victim = slots_.size();
      for (std::size_t s = 0; s < slots_.size(); ++s) {
        if (label_of(slots_[s].sample) != victim_class) continue;
        if (victim == slots_.size() || slots_[s].entropy < slots_[victim].entropy) victim = s;
      }
      assert(victim < slots_.size());  // the nominated slot itself qualifies
      slots_[victim] = {batch[i], entropies[i]};
      ++n_seen_;
    }
    // rejected nominations leave buffer and counter untouched
  }
}

void MemoryBuffer::reservoir_insert(const data::Sample& s, Rng& rng) {
  if (slots_.size() < capacity_) {
    slots_.push_back({s, 0.0});
  } else {
    const auto j =
        static_cast<std::uint64_t>(rng.uniform01() * static_cast<double>(n_seen_ + 1));
    if (j < capacity_) slots_[static_cast<std::size_t>(j)] = {s, 0.0};
  }
  ++n_seen_;
}

void MemoryBuffer::reservoir_update(const std::vector<data::Sample>& batch, Rng& rng) {
  if (strategy_ != Strategy::reservoir)
    throw std::logic_error("reservoir_update on wrong buffer strategy");
  for (const data::Sample& s : batch) reservoir_insert(s, rng);
}

void MemoryBuffer::oracle_update(const std::vector<data::Sample>& batch, Rng& rng) {
  if (strategy_ != Strategy::real_only && strategy_ != Strategy::synthetic_only)
    throw std::logic_error("oracle_update on wrong buffer strategy");
  const data::Provenance wanted = strategy_ == Strategy::real_only
                                      ? data::Provenance::real
                                      : data::Provenance::synthetic;
  for (const data::Sample& s : batch)
    if (s.provenance == wanted) reservoir_insert(s, rng);
}

std::vector<data::Sample> MemoryBuffer::sample_memory(std::size_t mem_batch_size,
                                                      Rng& rng) const {
  std::vector<data::Sample> out;
  if (slots_.empty() || mem_batch_size == 0) return out;
  if (slots_.size() <= mem_batch_size) {
    out.reserve(slots_.size());
    for (const BufferSlot& s : slots_) out.push_back(s.sample);
    return out;
  }
  const auto picks = rng.sample_indices(slots_.size(), mem_batch_size);
  out.reserve(picks.size());
  for (std::size_t p : picks) out.push_back(slots_[p].sample);
  return out;
}

void MemoryBuffer::refresh_entropy(const EntropyEvaluator& evaluator) {
  if (slots_.empty()) return;
  std::vector<data::Sample> samples;
  samples.reserve(slots_.size());
  for (const BufferSlot& s : slots_) samples.push_back(s.sample);
  const std::vector<double> fresh = evaluator(samples);
  if (fresh.size() != slots_.size())
    throw std::runtime_error("entropy evaluator returned wrong count");
  for (std::size_t i = 0; i < slots_.size(); ++i) slots_[i].entropy = fresh[i];
}

MemoryBuffer::Composition MemoryBuffer::composition_stats() const {
  Composition c;
  if (slots_.empty()) return c;
  std::size_t synthetic = 0;
  for (const BufferSlot& s : slots_) {
    if (s.sample.provenance == data::Provenance::synthetic) ++synthetic;
    c.per_class_counts[label_of(s.sample)] += 1;
  }
  c.synthetic_fraction = static_cast<double>(synthetic) / static_cast<double>(slots_.size());
  return c;
}

void MemoryBuffer::restore_slot(const data::Sample& s, double entropy) {
  if (slots_.size() >= capacity_) throw std::runtime_error("restore_slot: buffer already full");
  slots_.push_back({s, entropy});
  ++n_seen_;
}

void MemoryBuffer::write_snapshot(std::ostream& out) const {
  out << "id\tlabel\tprovenance\tsource_tag\tentropy\n";
  for (const BufferSlot& s : slots_)
    out << s.sample.id << '\t' << label_of(s.sample) << '\t' << data::to_string(s.sample.provenance)
        << '\t' << s.sample.source_tag << '\t' << s.entropy << '\n';
}

}  // namespace esrm::replay
