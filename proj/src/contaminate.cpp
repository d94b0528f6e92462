#include "esrm/data/contaminate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "esrm/rng.hpp"

namespace esrm::data {

namespace {

void validate(const LabeledDataset& real, const std::map<std::string, LabeledDataset>& twins,
              const ContaminationSpec& spec) {
  if (spec.ratio_P < 0.0 || spec.ratio_P > 1.0)
    throw std::invalid_argument("contamination ratio must lie in [0,1]");
  double share_sum = 0.0;
  for (const auto& [tag, share] : spec.source_shares) {
    if (share < 0.0) throw std::invalid_argument("negative share for source " + tag);
    if (!twins.count(tag)) throw std::invalid_argument("no twin dataset for source " + tag);
    share_sum += share;
  }
  if (spec.ratio_P > 0.0 && std::abs(share_sum - 1.0) > 1e-9)
    throw std::invalid_argument("source shares must sum to 1");
  for (const auto& [tag, twin] : twins) {
    if (twin.class_count != real.class_count)
      throw std::runtime_error("twin " + tag + " class count mismatch");
  }
}

// Largest-remainder split of k_c substitutions across sources. Quotas are
// share * P * n_c; floors are topped up in descending fractional-part order,
// ties resolved by tag order.
std::map<std::string, long> per_source_counts(const ContaminationSpec& spec, long k_c,
                                              double p_times_nc) {
  std::map<std::string, long> counts;
  std::vector<std::pair<double, std::string>> frac;  // (-fractional part, tag)
  long assigned = 0;
  for (const auto& [tag, share] : spec.source_shares) {
    const double quota = share * p_times_nc;
    const long base = static_cast<long>(std::floor(quota));
    counts[tag] = base;
    assigned += base;
    frac.emplace_back(-(quota - std::floor(quota)), tag);
  }
  std::sort(frac.begin(), frac.end());
  for (std::size_t i = 0; assigned < k_c; ++i, ++assigned) counts[frac[i].second] += 1;
  return counts;
}

}  // namespace

LabeledDataset contaminate(const LabeledDataset& real,
                           const std::map<std::string, LabeledDataset>& twins,
                           const ContaminationSpec& spec) {
  validate(real, twins, spec);

  LabeledDataset out = real;
  out.name = real.name + "_P" + std::to_string(spec.ratio_P);

  for (int c = 0; c < real.class_count; ++c) {
    const std::vector<std::size_t> class_positions = real.indices_of_class(c);
    const long n_c = static_cast<long>(class_positions.size());
    const double p_times_nc = spec.ratio_P * static_cast<double>(n_c);
    const long k_c = std::llround(p_times_nc);
    if (k_c == 0) continue;

    const auto counts = per_source_counts(spec, k_c, p_times_nc);

    // One stream per class so the draw for class c is independent of how
    // many other classes exist.
    Rng rng(derive_seed(spec.seed, 1000003ULL * static_cast<std::uint64_t>(c)));
    const auto replaced = rng.sample_indices(static_cast<std::size_t>(n_c),
                                             static_cast<std::size_t>(k_c));

    std::size_t cursor = 0;
    for (const auto& [tag, k_s] : counts) {
      const LabeledDataset& twin = twins.at(tag);
      const std::vector<std::size_t> pool = twin.indices_of_class(c);
      if (static_cast<long>(pool.size()) < k_s)
        throw std::runtime_error("twin " + tag + " has too few samples for class " +
                                 std::to_string(c));
      const auto picks = rng.sample_indices(pool.size(), static_cast<std::size_t>(k_s));
      for (long j = 0; j < k_s; ++j) {
        const std::size_t pos = class_positions[replaced[cursor++]];
        const Sample& donor = twin.samples[pool[picks[static_cast<std::size_t>(j)]]];
        Sample& dst = out.samples[pos];
        dst.image = donor.image;
        dst.provenance = Provenance::synthetic;
        dst.source_tag = tag;
        // label stays c; twins mirror the class structure
      }
    }
  }

  for (std::size_t i = 0; i < out.samples.size(); ++i)
    out.samples[i].id = static_cast<long>(i);
  return out;
}

}  // namespace esrm::data
