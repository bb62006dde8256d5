// Copyright 2026 The Deanon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Adversary background knowledge: noisy partial views of a target record.
#ifndef DEANON_AUX_HPP
#define DEANON_AUX_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "deanon/common.hpp"
#include "deanon/dates.hpp"
#include "deanon/ingest.hpp"
#include "deanon/model.hpp"
#include "deanon/rng.hpp"

namespace deanon {

enum class AuxSelection {
  kUniformOverSupport,
  kOutsideTopRanks,  // uniform over support attributes ranked below rank_cutoff
};

// "m of m'": m_total entries of which at least m_total - wrong_entry_count
// are within (rating_noise, date_noise) of the target's values.
struct AuxSpec {
  std::size_t m_total = 8;
  std::size_t wrong_entry_count = 0;
  AuxSelection selection = AuxSelection::kUniformOverSupport;
  std::size_t rank_cutoff = 0;
  int rating_noise = 0;
  std::optional<int> date_noise = 0;  // nullopt: dates omitted from aux
  std::optional<double> record_size_error;  // leak |supp| within this relative error
  std::uint64_t seed = 0;

  std::size_t m_correct_min() const { return m_total - wrong_entry_count; }

  // Attribute similarity under which every correct entry matches.
  SimConfig implied_sim_config() const { return SimConfig{rating_noise, date_noise}; }

  void validate() const {
    if (m_total == 0) throw DomainError("aux must have at least one entry");
    if (wrong_entry_count > m_total) throw DomainError("wrong_entry_count exceeds m_total");
    if (rating_noise < 0) throw DomainError("rating_noise must be >= 0");
    if (date_noise && *date_noise < 0) throw DomainError("date_noise must be >= 0");
    if (record_size_error && !(*record_size_error >= 0.0)) {
      throw DomainError("record size error must be >= 0");
    }
  }
};

// What the attack sees: perturbed cells keyed by attribute, plus an optional
// approximate record size.
struct AuxInfo {
  Record entries;
  std::optional<std::size_t> claimed_record_size;

  std::size_t size() const { return entries.support_size(); }
  bool empty() const { return entries.empty(); }
};

// AuxInfo plus ground truth that must never reach the attack code.
struct SampledAux {
  AuxInfo aux;
  std::vector<AttributeId> wrong_attributes;
};

// Samples aux for many targets of one dataset; caches the popularity ranks.
class AuxSampler {
 public:
  explicit AuxSampler(const Dataset& ds)
      : ds_(ds), rank_of_(rank_lookup(rank_attributes(ds))) {}

  SampledAux sample(RecordId target, const AuxSpec& spec) const {
    spec.validate();
    const Record& record = ds_.record(target);
    Rng rng(derive_seed(spec.seed, target.value));

    std::vector<Record::Entry> pool;
    if (spec.selection == AuxSelection::kUniformOverSupport) {
      if (record.support_size() < spec.m_total) {
        throw DomainError("target support " + std::to_string(record.support_size()) +
                          " smaller than m_total " + std::to_string(spec.m_total));
      }
      pool.assign(record.entries().begin(), record.entries().end());
    } else {
      for (const auto& e : record.entries()) {
        if (rank_of_[e.attribute.index()] > spec.rank_cutoff) pool.push_back(e);
      }
      if (pool.size() < spec.m_total) {
        throw DomainError("only " + std::to_string(pool.size()) +
                          " target attributes lie outside the top " +
                          std::to_string(spec.rank_cutoff));
      }
    }
    partial_shuffle(pool, spec.m_total, rng);
    pool.resize(spec.m_total);
    // The first wrong_entry_count of a second shuffle are corrupted.
    partial_shuffle(pool, spec.wrong_entry_count, rng);

    SampledAux out;
    std::vector<Record::Entry> entries;
    entries.reserve(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const bool wrong = i < spec.wrong_entry_count;
      const Cell cell = wrong ? corrupt(pool[i].cell, spec, rng) : perturb(pool[i].cell, spec, rng);
      entries.push_back({pool[i].attribute, cell});
      if (wrong) out.wrong_attributes.push_back(pool[i].attribute);
    }
    std::sort(out.wrong_attributes.begin(), out.wrong_attributes.end());
    out.aux.entries = Record(std::move(entries));
    if (spec.record_size_error) {
      const double err = *spec.record_size_error;
      const double factor = 1.0 - err + 2.0 * err * rng.uniform();
      out.aux.claimed_record_size = static_cast<std::size_t>(
          std::llround(static_cast<double>(record.support_size()) * factor));
    }
    return out;
  }

 private:
  static void partial_shuffle(std::vector<Record::Entry>& v, std::size_t k, Rng& rng) {
    for (std::size_t i = 0; i < k && i < v.size(); ++i) {
      const auto j = i + rng.below(v.size() - i);
      std::swap(v[i], v[j]);
    }
  }

  Cell perturb(const Cell& cell, const AuxSpec& spec, Rng& rng) const {
    std::optional<int> rating = cell.rating();
    if (rating && spec.rating_noise > 0) {
      rating = std::clamp(*rating + static_cast<int>(rng.between(-spec.rating_noise,
                                                                 spec.rating_noise)),
                          1, ds_.rating_scale());
    }
    std::optional<int> date;
    if (spec.date_noise && cell.has_date()) {
      date = std::clamp(*cell.date() + static_cast<int>(rng.between(-*spec.date_noise,
                                                                    *spec.date_noise)),
                        kMinDay, kMaxDay);
    }
    return Cell{rating, date};
  }

  // Resamples rating and date uniformly, avoiding values within the noise
  // thresholds of the truth whenever the domain allows it.
  Cell corrupt(const Cell& cell, const AuxSpec& spec, Rng& rng) const {
    std::optional<int> rating = cell.rating();
    if (rating) {
      std::vector<int> options;
      for (int v = 1; v <= ds_.rating_scale(); ++v) {
        if (std::abs(v - *rating) > spec.rating_noise) options.push_back(v);
      }
      if (!options.empty()) rating = options[rng.below(options.size())];
    }
    std::optional<int> date;
    if (spec.date_noise && cell.has_date()) {
      date = cell.date();
      auto [lo, hi] = ds_.date_bounds().value_or(std::pair{*date, *date});
      const int near_lo = *date - *spec.date_noise;
      const int near_hi = *date + *spec.date_noise;
      const std::int64_t below = std::max(0, near_lo - lo);   // [lo, near_lo)
      const std::int64_t above = std::max(0, hi - near_hi);   // (near_hi, hi]
      if (below + above > 0) {
        const auto pick = static_cast<std::int64_t>(rng.below(
            static_cast<std::uint64_t>(below + above)));
        date = pick < below ? lo + static_cast<int>(pick)
                            : near_hi + 1 + static_cast<int>(pick - below);
      }
    }
    return Cell{rating, date};
  }

  const Dataset& ds_;
  std::vector<std::size_t> rank_of_;
};

inline SampledAux sample_aux(const Dataset& ds, RecordId target, const AuxSpec& spec) {
  return AuxSampler(ds).sample(target, spec);
}

// Reads aux from a canonical-format file holding exactly one record key.
// Attribute keys are resolved against the dataset's maps.
inline AuxInfo aux_from_file(std::istream& in, const IdMaps& maps,
                             const ParseOptions& opts = {}) {
  Ingested parsed = parse_canonical(in, opts);
  if (parsed.dataset.size() == 0) throw ParseError(0, "aux file has no rows");
  if (parsed.dataset.size() > 1) {
    throw ParseError(0, "aux file names " + std::to_string(parsed.dataset.size()) +
                            " record keys; expected exactly one");
  }
  std::vector<Record::Entry> entries;
  std::string unknown;
  for (const auto& e : parsed.dataset.record(RecordId{0u}).entries()) {
    const std::string& key = parsed.maps.attribute_key(e.attribute);
    if (auto id = maps.find_attribute(key)) {
      entries.push_back({*id, e.cell});
    } else {
      unknown += (unknown.empty() ? "" : ", ") + key;
    }
  }
  if (!unknown.empty()) throw ParseError(0, "aux attributes not in dataset: " + unknown);
  return AuxInfo{Record(std::move(entries)), std::nullopt};
}

}  // namespace deanon

#endif  // DEANON_AUX_HPP
