#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace esrm {

// All randomness flows through this wrapper instead of <random>
// distributions, whose output is implementation-defined. mt19937_64 itself
// is pinned by the standard, so sequences are stable across platforms.
//
// uniform01() is the single entry point; tests may subclass and override it
// to force specific draws.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  virtual ~Rng() = default;

  // Uniform double in [0, 1), 53-bit resolution.
  virtual double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n));
  }

  // Standard normal via Box-Muller (two draws per call, no caching).
  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log1p(-u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices drawn uniformly from [0, n). Returns all n when
  // k >= n. Order of the result is the draw order.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    if (k >= n) return idx;
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(uniform_int(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer; used to derive independent sub-seeds from a master
// seed so that e.g. task shuffling and model init never share a stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Named streams hanging off one experiment seed.
enum class SeedStream : std::uint64_t {
  task_order = 1,
  contamination = 2,
  model_init = 3,
  stream_order = 4,
  augmentation = 5,
  buffer = 6,
  memory_sampling = 7,
};

inline Rng make_rng(std::uint64_t master, SeedStream s) {
  return Rng(derive_seed(master, static_cast<std::uint64_t>(s)));
}

}  // namespace esrm
