#include <doctest.h>

#include <cmath>
#include <sstream>

#include "esrm/metrics.hpp"
#include "oracles.hpp"

using namespace esrm;
using namespace esrm::eval;

namespace {

AccuracyMatrix matrix_of(std::vector<std::vector<double>> rows) {
  AccuracyMatrix m;
  m.a = std::move(rows);
  return m;
}

}  // namespace

TEST_CASE("final_average_accuracy") {
  CHECK(final_average_accuracy(matrix_of({{0.8}})) == doctest::Approx(0.8));
  CHECK(final_average_accuracy(matrix_of({{0.9, 0.1}, {0.4, 0.6}})) == doctest::Approx(0.5));

  // consistent task permutation leaves FAA unchanged
  esrm::Rng rng(3);
  std::vector<std::vector<double>> a(4, std::vector<double>(4));
  for (auto& row : a)
    for (double& v : row) v = rng.uniform01();
  std::vector<std::size_t> perm{2, 0, 3, 1};
  std::vector<std::vector<double>> b(4, std::vector<double>(4));
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t j = 0; j < 4; ++j) b[t][j] = a[perm[t]][perm[j]];
  // permuting rows moves which row is "last"; apply the identity-permuted
  // final row instead: FAA over a permuted final row has the same mean
  std::vector<std::vector<double>> c = a;
  for (std::size_t j = 0; j < 4; ++j) c[3][j] = a[3][perm[j]];
  CHECK(final_average_accuracy(matrix_of(c)) ==
        doctest::Approx(final_average_accuracy(matrix_of(a))));

  CHECK_THROWS(final_average_accuracy(matrix_of({})));
  CHECK_THROWS(final_average_accuracy(matrix_of({{0.1, 0.2}, {0.3}})));
}

TEST_CASE("learning_accuracy") {
  CHECK(learning_accuracy(matrix_of({{1.0, 0.0}, {0.2, 0.0}})) == doctest::Approx(0.5));
  CHECK(learning_accuracy(matrix_of({{0.8}})) ==
        doctest::Approx(final_average_accuracy(matrix_of({{0.8}}))));
  CHECK(learning_accuracy(matrix_of({{0.7, 0.0, 0.0}, {0.1, 0.7, 0.0}, {0.1, 0.2, 0.7}})) ==
        doctest::Approx(0.7));
}

TEST_CASE("relative_forgetting") {
  // accuracies never drop -> 0
  CHECK(relative_forgetting(matrix_of({{0.5, 0.0}, {0.6, 0.9}})) == doctest::Approx(0.0));

  // total forgetting: diagonal 0.5, final row 0 for j < T-1 -> 1.0
  CHECK(relative_forgetting(matrix_of({{0.5, 0.0, 0.0}, {0.1, 0.5, 0.0}, {0.0, 0.0, 0.5}})) ==
        doctest::Approx(1.0));

  // zero-max tasks contribute 0
  CHECK(relative_forgetting(matrix_of({{0.0, 0.0}, {0.0, 0.5}})) == doctest::Approx(0.0));

  CHECK_THROWS(relative_forgetting(matrix_of({{0.5}})));

  // random matrices match the per-task loop oracle exactly
  esrm::Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const long T = 2 + static_cast<long>(rng.uniform_int(5));
    std::vector<std::vector<double>> a(static_cast<std::size_t>(T),
                                       std::vector<double>(static_cast<std::size_t>(T)));
    for (auto& row : a)
      for (double& v : row) v = rng.uniform01();
    CHECK(relative_forgetting(matrix_of(a)) == doctest::Approx(oracle::relative_forgetting(a)));
  }
}

TEST_CASE("metrics stay in [0,1] on random matrices") {
  esrm::Rng rng(18);
  for (int trial = 0; trial < 20; ++trial) {
    const long T = 2 + static_cast<long>(rng.uniform_int(4));
    std::vector<std::vector<double>> a(static_cast<std::size_t>(T),
                                       std::vector<double>(static_cast<std::size_t>(T)));
    for (auto& row : a)
      for (double& v : row) v = rng.uniform01();
    const AccuracyMatrix m = matrix_of(a);
    for (double v : {final_average_accuracy(m), learning_accuracy(m), relative_forgetting(m)}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("synthetic_roc_auc: separation, ties, oracle agreement, invariance") {
  using data::Provenance;
  const std::vector<double> separated{3.0, 2.5, 1.0, 0.5};
  const std::vector<Provenance> prov{Provenance::real, Provenance::real, Provenance::synthetic,
                                     Provenance::synthetic};
  CHECK(synthetic_roc_auc(separated, prov) == doctest::Approx(1.0));

  const std::vector<double> tied{1.0, 2.0, 1.0, 2.0};
  CHECK(synthetic_roc_auc(tied, prov) == doctest::Approx(0.5));

  CHECK_THROWS(synthetic_roc_auc({1.0, 2.0}, {Provenance::real, Provenance::real}));

  esrm::Rng rng(19);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 5 + static_cast<int>(rng.uniform_int(40));
    std::vector<double> scores;
    std::vector<Provenance> p;
    std::vector<bool> is_real;
    int reals = 0;
    for (int i = 0; i < n; ++i) {
      // quantized scores force plenty of ties
      scores.push_back(std::floor(rng.uniform01() * 8.0) / 8.0);
      const bool r = rng.uniform01() < 0.5;
      p.push_back(r ? Provenance::real : Provenance::synthetic);
      is_real.push_back(r);
      reals += r;
    }
    if (reals == 0 || reals == n) continue;
    const double got = synthetic_roc_auc(scores, p);
    CHECK(got == doctest::Approx(oracle::auc(scores, is_real)).epsilon(1e-12));

    // strictly monotone transform leaves AUC unchanged
    std::vector<double> warped;
    for (double s : scores) warped.push_back(std::exp(2.0 * s) + 1.0);
    CHECK(synthetic_roc_auc(warped, p) == doctest::Approx(got).epsilon(1e-12));
  }
}

TEST_CASE("entropy histogram: provenance split and conservation") {
  nn::LearnerModel model(nn::Backbone::small_cnn, 4, 3, 5);
  data::LabeledDataset ds;
  ds.name = "hist";
  ds.class_count = 4;
  esrm::Rng rng(6);
  for (int i = 0; i < 30; ++i) {
    data::Sample s;
    s.id = i;
    s.label = i % 4;
    s.provenance = i < 18 ? data::Provenance::real : data::Provenance::synthetic;
    auto img = std::make_shared<Image>(16, 16, 3);
    for (float& v : img->px) v = static_cast<float>(rng.uniform01());
    s.image = img;
    ds.samples.push_back(std::move(s));
  }

  const EntropyHistogram hist = entropy_histogram(model, ds);
  CHECK(hist.max_entropy == doctest::Approx(std::log(4.0)));
  long real_total = 0, syn_total = 0;
  for (int b = 0; b < EntropyHistogram::kBins; ++b) {
    real_total += hist.real[static_cast<std::size_t>(b)];
    syn_total += hist.synthetic[static_cast<std::size_t>(b)];
  }
  CHECK(real_total == 18);
  CHECK(syn_total == 12);

  // all-real dataset leaves the synthetic histogram empty
  for (data::Sample& s : ds.samples) s.provenance = data::Provenance::real;
  const EntropyHistogram all_real = entropy_histogram(model, ds);
  long stray = 0;
  for (long v : all_real.synthetic) stray += v;
  CHECK(stray == 0);
}

TEST_CASE("export_embeddings: filter, header-only output, ordering") {
  nn::LearnerModel model(nn::Backbone::small_cnn, 4, 3, 5);
  replay::MemoryBuffer buffer(8, replay::Strategy::reservoir);
  esrm::Rng rng(7);
  for (int i = 0; i < 6; ++i) {
    data::Sample s;
    s.id = 10 - i;  // descending ids to exercise the sort
    s.label = i % 3;
    auto img = std::make_shared<Image>(16, 16, 3);
    for (float& v : img->px) v = static_cast<float>(rng.uniform01());
    s.image = img;
    buffer.restore_slot(s, 0.0);
  }

  std::ostringstream all;
  export_embeddings(model, buffer, {}, all);
  std::istringstream lines(all.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line.rfind("id\tlabel\tprovenance\tz0", 0) == 0);
  long prev = -1;
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    const long id = std::stol(line.substr(0, line.find('\t')));
    CHECK(id > prev);  // ordered by id
    prev = id;
  }
  CHECK(rows == 6);

  std::ostringstream none;
  export_embeddings(model, buffer, {99}, none);
  const std::string none_text = none.str();
  CHECK(none_text.rfind("id\tlabel\tprovenance\tz0", 0) == 0);
  CHECK(std::count(none_text.begin(), none_text.end(), '\n') == 1);  // header only

  std::ostringstream some;
  export_embeddings(model, buffer, {0}, some);
  const std::string some_text = some.str();
  int matching = 0;
  for (const replay::BufferSlot& s : buffer.slots()) matching += s.sample.label == 0;
  CHECK(std::count(some_text.begin(), some_text.end(), '\n') == 1 + matching);
}
