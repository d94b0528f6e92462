#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "esrm/buffer.hpp"

using namespace esrm;
using namespace esrm::data;
using namespace esrm::replay;

namespace {

Sample make_sample(long id, int label, Provenance prov = Provenance::real) {
  Sample s;
  s.id = id;
  s.label = label;
  s.provenance = prov;
  if (prov == Provenance::synthetic) s.source_tag = "twin";
  s.image = std::make_shared<Image>(2, 2, 3);
  return s;
}

class FixedRng : public Rng {
public:
  explicit FixedRng(double v) : Rng(0), v_(v) {}
  double uniform01() override { return v_; }

private:
  double v_;
};

// Independent step-by-step simulator of the entropy-selection policy, kept
// as a plain transcription of the update procedure for cross-checking.
struct EsOracle {
  std::size_t capacity;
  std::vector<std::pair<Sample, double>> slots;  // (sample, entropy)
  std::uint64_t n_seen = 0;

  explicit EsOracle(std::size_t cap) : capacity(cap) {}

  static double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  }

  void update(const std::vector<Sample>& batch, const std::vector<double>& ent, Rng& rng) {
    const double thr = median(ent);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (!(ent[i] > thr)) continue;
      const auto nominate =
          static_cast<std::uint64_t>(rng.uniform01() * static_cast<double>(n_seen + 1));
      if (slots.size() < capacity) {
        slots.emplace_back(batch[i], ent[i]);
        ++n_seen;
      } else if (nominate < capacity) {
        const int cls = slots[static_cast<std::size_t>(nominate)].first.label;
        std::size_t victim = 0;
        bool found = false;
        for (std::size_t s = 0; s < slots.size(); ++s) {
          if (slots[s].first.label != cls) continue;
          if (!found || slots[s].second < slots[victim].second) {
            victim = s;
            found = true;
          }
        }
        REQUIRE(found);
        slots[victim] = {batch[i], ent[i]};
        ++n_seen;
      }
    }
  }
};

}  // namespace

TEST_CASE("es_update: batch of 10 distinct entropies stores exactly the top half") {
  MemoryBuffer buf(100, Strategy::es);
  std::vector<Sample> batch;
  std::vector<double> ent;
  for (int i = 0; i < 10; ++i) {
    batch.push_back(make_sample(i, 0));
    ent.push_back(0.1 * (i + 1));
  }
  Rng rng(1);
  buf.es_update(batch, ent, rng);
  CHECK(buf.slots().size() == 5);
  CHECK(buf.n_seen_so_far() == 5);
  for (const BufferSlot& s : buf.slots()) CHECK(s.entropy > 0.5);  // above the median 0.55
}

TEST_CASE("es_update fill phase: survivors append until capacity") {
  MemoryBuffer buf(4, Strategy::es);
  // entropies 1..6: median 3.5, survivors 4,5,6 -> 3 appended
  std::vector<Sample> batch;
  std::vector<double> ent;
  for (int i = 0; i < 6; ++i) {
    batch.push_back(make_sample(i, i % 2));
    ent.push_back(static_cast<double>(i + 1));
  }
  Rng rng(2);
  buf.es_update(batch, ent, rng);
  CHECK(buf.slots().size() == 3);
  CHECK(buf.n_seen_so_far() == 3);
}

TEST_CASE("es_update hand trace: nomination replaces the class minimum") {
  // full buffer of 4: [(A,0.1),(A,0.5),(B,0.2),(B,0.9)] with A=0, B=1
  MemoryBuffer buf(4, Strategy::es);
  buf.restore_slot(make_sample(100, 0), 0.1);
  buf.restore_slot(make_sample(101, 0), 0.5);
  buf.restore_slot(make_sample(102, 1), 0.2);
  buf.restore_slot(make_sample(103, 1), 0.9);
  REQUIRE(buf.n_seen_so_far() == 4);

  // incoming pair: ids 200 (low entropy, dropped) and 201 (survivor).
  // u = 0.3 -> nominate = floor(0.3 * 5) = 1, class A, min-entropy A slot is
  // index 0 -> slot 0 replaced by id 201.
  FixedRng rng(0.3);
  buf.es_update({make_sample(200, 1), make_sample(201, 1)}, {0.4, 0.8}, rng);

  REQUIRE(buf.slots().size() == 4);
  CHECK(buf.slots()[0].sample.id == 201);
  CHECK(buf.slots()[0].entropy == doctest::Approx(0.8));
  CHECK(buf.slots()[1].sample.id == 101);
  CHECK(buf.slots()[2].sample.id == 102);
  CHECK(buf.slots()[3].sample.id == 103);
  CHECK(buf.n_seen_so_far() == 5);
}

TEST_CASE("es_update: rejected nomination leaves buffer and counter unchanged") {
  MemoryBuffer buf(4, Strategy::es);
  for (int i = 0; i < 4; ++i) buf.restore_slot(make_sample(i, 0), 0.5);
  FixedRng rng(0.97);  // nominate = floor(.97*5) = 4 >= capacity
  buf.es_update({make_sample(50, 0), make_sample(51, 0)}, {0.1, 0.9}, rng);
  CHECK(buf.slots().size() == 4);
  CHECK(buf.n_seen_so_far() == 4);
  for (int i = 0; i < 4; ++i) CHECK(buf.slots()[static_cast<std::size_t>(i)].sample.id == i);
}

TEST_CASE("es_update: all-tied entropies produce no survivors (strict median)") {
  MemoryBuffer buf(8, Strategy::es);
  std::vector<Sample> batch;
  std::vector<double> ent(6, 1.25);
  for (int i = 0; i < 6; ++i) batch.push_back(make_sample(i, 0));
  Rng rng(3);
  buf.es_update(batch, ent, rng);
  CHECK(buf.slots().empty());
  CHECK(buf.n_seen_so_far() == 0);
}

TEST_CASE("es_update matches the oracle simulator over thousands of random updates") {
  const std::size_t capacity = 23;
  MemoryBuffer buf(capacity, Strategy::es);
  EsOracle oracle(capacity);
  Rng rng_buf(77), rng_oracle(77);  // identical streams
  Rng driver(1234);

  long id = 0;
  for (int step = 0; step < 2000; ++step) {
    const int n = 2 + static_cast<int>(driver.uniform_int(9));
    std::vector<Sample> batch;
    std::vector<double> ent;
    for (int i = 0; i < n; ++i) {
      batch.push_back(make_sample(id++, static_cast<int>(driver.uniform_int(5))));
      ent.push_back(driver.uniform01() * 2.3);
    }
    buf.es_update(batch, ent, rng_buf);
    oracle.update(batch, ent, rng_oracle);

    REQUIRE(buf.slots().size() == oracle.slots.size());
    REQUIRE(buf.slots().size() <= capacity);
    REQUIRE(buf.n_seen_so_far() == oracle.n_seen);
    for (std::size_t s = 0; s < oracle.slots.size(); ++s) {
      REQUIRE(buf.slots()[s].sample.id == oracle.slots[s].first.id);
      REQUIRE(buf.slots()[s].entropy == oracle.slots[s].second);
    }
  }
  CHECK(buf.n_seen_so_far() > capacity);  // exercised the full-buffer path
}

TEST_CASE("reservoir: fill phase keeps the whole stream; determinism") {
  MemoryBuffer buf(10, Strategy::reservoir);
  std::vector<Sample> batch;
  for (int i = 0; i < 7; ++i) batch.push_back(make_sample(i, 0));
  Rng rng(4);
  buf.reservoir_update(batch, rng);
  CHECK(buf.slots().size() == 7);
  CHECK(buf.n_seen_so_far() == 7);

  MemoryBuffer a(5, Strategy::reservoir), b(5, Strategy::reservoir);
  Rng ra(9), rb(9);
  std::vector<Sample> stream;
  for (int i = 0; i < 200; ++i) stream.push_back(make_sample(i, i % 3));
  a.reservoir_update(stream, ra);
  b.reservoir_update(stream, rb);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(a.slots()[i].sample.id == b.slots()[i].sample.id);
}

TEST_CASE("reservoir retention is uniform (chi-square, small-scale)") {
  const std::size_t N = 2000, capacity = 50;
  const int trials = 400;
  std::vector<long> hits(N, 0);
  Rng rng(20240601);
  for (int t = 0; t < trials; ++t) {
    MemoryBuffer buf(capacity, Strategy::reservoir);
    std::vector<Sample> stream;
    for (std::size_t i = 0; i < N; ++i) stream.push_back(make_sample(static_cast<long>(i), 0));
    buf.reservoir_update(stream, rng);
    for (const BufferSlot& s : buf.slots()) hits[static_cast<std::size_t>(s.sample.id)] += 1;
  }
  const double expected = static_cast<double>(trials) * capacity / static_cast<double>(N);
  double chi2 = 0.0;
  for (long h : hits) chi2 += (h - expected) * (h - expected) / expected;
  // Wilson-Hilferty upper critical value at alpha = 0.01
  const double df = static_cast<double>(N - 1);
  const double z = 2.3263478740408408;
  const double term = 1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df));
  const double critical = df * term * term * term;
  CHECK(chi2 < critical);
}

TEST_CASE("oracle buffers filter by provenance and otherwise act as reservoirs") {
  // all-synthetic batch into a real_only buffer: nothing happens
  MemoryBuffer real_buf(10, Strategy::real_only);
  std::vector<Sample> synth;
  for (int i = 0; i < 5; ++i) synth.push_back(make_sample(i, 0, Provenance::synthetic));
  Rng rng(5);
  real_buf.oracle_update(synth, rng);
  CHECK(real_buf.slots().empty());
  CHECK(real_buf.n_seen_so_far() == 0);

  // all-real batch: identical to a reservoir with the same stream
  std::vector<Sample> reals;
  for (int i = 0; i < 300; ++i) reals.push_back(make_sample(i, i % 4));
  MemoryBuffer oracle_buf(8, Strategy::real_only);
  MemoryBuffer reservoir_buf(8, Strategy::reservoir);
  Rng r1(6), r2(6);
  oracle_buf.oracle_update(reals, r1);
  reservoir_buf.reservoir_update(reals, r2);
  REQUIRE(oracle_buf.slots().size() == reservoir_buf.slots().size());
  for (std::size_t i = 0; i < oracle_buf.slots().size(); ++i)
    CHECK(oracle_buf.slots()[i].sample.id == reservoir_buf.slots()[i].sample.id);

  // mixed stream: only matching provenance remains, n_seen counts matches only
  MemoryBuffer synth_buf(16, Strategy::synthetic_only);
  std::vector<Sample> mixed;
  for (int i = 0; i < 60; ++i)
    mixed.push_back(make_sample(i, 0, i % 3 ? Provenance::real : Provenance::synthetic));
  Rng r3(7);
  synth_buf.oracle_update(mixed, r3);
  CHECK(synth_buf.n_seen_so_far() == 20);
  for (const BufferSlot& s : synth_buf.slots())
    CHECK(s.sample.provenance == Provenance::synthetic);
}

TEST_CASE("sample_memory: clamping, zero request, uniformity, no duplicates") {
  MemoryBuffer buf(100, Strategy::reservoir);
  std::vector<Sample> stream;
  for (int i = 0; i < 3; ++i) stream.push_back(make_sample(i, 0));
  Rng rng(8);
  buf.reservoir_update(stream, rng);

  CHECK(buf.sample_memory(64, rng).size() == 3);
  CHECK(buf.sample_memory(0, rng).empty());

  MemoryBuffer empty(4, Strategy::reservoir);
  CHECK(empty.sample_memory(64, rng).empty());

  // fill to 10 slots, draw 5 many times: no duplicates, near-uniform counts
  MemoryBuffer big(10, Strategy::reservoir);
  std::vector<Sample> ten;
  for (int i = 0; i < 10; ++i) ten.push_back(make_sample(i, 0));
  big.reservoir_update(ten, rng);
  std::vector<long> freq(10, 0);
  const int draws = 10000;
  for (int d = 0; d < draws; ++d) {
    const auto picked = big.sample_memory(5, rng);
    std::set<long> ids;
    for (const Sample& s : picked) ids.insert(s.id);
    CHECK(ids.size() == 5);  // without replacement
    for (long i : ids) freq[static_cast<std::size_t>(i)] += 1;
  }
  const double expected = draws * 5 / 10.0;
  for (long f : freq) {
    CHECK(f > expected * 0.9);
    CHECK(f < expected * 1.1);
  }
}

TEST_CASE("refresh_entropy recomputes in place; empty buffer is a no-op") {
  MemoryBuffer empty(4, Strategy::es);
  empty.refresh_entropy([](const std::vector<Sample>&) { return std::vector<double>{}; });
  CHECK(empty.slots().empty());

  MemoryBuffer buf(4, Strategy::es);
  buf.restore_slot(make_sample(0, 0), 0.9);
  buf.restore_slot(make_sample(1, 1), 0.1);
  const auto evaluator = [](const std::vector<Sample>& samples) {
    std::vector<double> out;
    for (const Sample& s : samples) out.push_back(0.01 * static_cast<double>(s.id + 1));
    return out;
  };
  buf.refresh_entropy(evaluator);
  CHECK(buf.slots()[0].entropy == doctest::Approx(0.01));
  CHECK(buf.slots()[1].entropy == doctest::Approx(0.02));
  CHECK(buf.slots()[0].sample.id == 0);  // order and contents unchanged

  buf.refresh_entropy(evaluator);  // idempotent under the same evaluator
  CHECK(buf.slots()[0].entropy == doctest::Approx(0.01));
}

TEST_CASE("composition_stats counts provenance and classes") {
  MemoryBuffer buf(16, Strategy::reservoir);
  Rng rng(10);
  CHECK(buf.composition_stats().synthetic_fraction == doctest::Approx(0.0));

  std::vector<Sample> batch;
  for (int i = 0; i < 10; ++i)
    batch.push_back(make_sample(i, i % 2, i < 3 ? Provenance::synthetic : Provenance::real));
  buf.reservoir_update(batch, rng);
  const auto comp = buf.composition_stats();
  CHECK(comp.synthetic_fraction == doctest::Approx(0.3));
  CHECK(comp.per_class_counts.at(0) == 5);
  CHECK(comp.per_class_counts.at(1) == 5);

  MemoryBuffer all_syn(8, Strategy::reservoir);
  std::vector<Sample> synth;
  for (int i = 0; i < 4; ++i) synth.push_back(make_sample(i, 0, Provenance::synthetic));
  all_syn.reservoir_update(synth, rng);
  CHECK(all_syn.composition_stats().synthetic_fraction == doctest::Approx(1.0));
}

TEST_CASE("snapshot export format") {
  MemoryBuffer buf(4, Strategy::es);
  buf.restore_slot(make_sample(7, 2, Provenance::synthetic), 1.5);
  std::ostringstream out;
  buf.write_snapshot(out);
  CHECK(out.str() == "id\tlabel\tprovenance\tsource_tag\tentropy\n7\t2\tsynthetic\ttwin\t1.5\n");
}
