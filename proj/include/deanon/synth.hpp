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
// Seeded synthetic sparse datasets with Zipf attribute popularity.
//
// These generative laws are instrumentation, not a model of any real corpus:
//   - attribute j has popularity weight (j + 1)^-zipf_exponent, so attribute
//     id order is popularity order;
//   - record support size is round(exp(mu + sigma * Z)), clamped to [1, M];
//   - a record's attributes are drawn without replacement in proportion to
//     popularity;
//   - each cell gets an independent categorical rating and a uniform date.
//
// Record i draws from its own stream keyed by (master_seed, i), so the
// output does not depend on the thread count.
#ifndef DEANON_SYNTH_HPP
#define DEANON_SYNTH_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <utility>
#include <vector>

#include "deanon/common.hpp"
#include "deanon/dates.hpp"
#include "deanon/keyvalue.hpp"
#include "deanon/model.hpp"
#include "deanon/parallel.hpp"
#include "deanon/rng.hpp"

namespace deanon {

struct SynthSpec {
  std::size_t n_records = 1000;
  std::size_t n_attributes = 2000;
  double zipf_exponent = 1.0;
  double support_mu = 4.0;  // log of the median support size
  double support_sigma = 0.5;
  std::vector<double> rating_law{0.05, 0.10, 0.30, 0.35, 0.20};  // P(rating = 1..R)
  int date_start = 365;   // 2000-01-01
  int date_end = 2556;    // 2005-12-31
  std::uint64_t master_seed = 1;

  int rating_scale() const { return static_cast<int>(rating_law.size()); }

  void validate() const {
    if (n_records < 1) throw DomainError("n_records must be >= 1");
    if (n_attributes < 1) throw DomainError("n_attributes must be >= 1");
    if (!(zipf_exponent > 0.0)) throw DomainError("zipf_exponent must be > 0");
    if (!(support_sigma >= 0.0) || !std::isfinite(support_mu)) {
      throw DomainError("support law needs finite mu and sigma >= 0");
    }
    if (rating_law.empty()) throw DomainError("rating_law is empty");
    double sum = 0.0;
    for (double p : rating_law) {
      if (!(p >= 0.0)) throw DomainError("rating_law has a negative weight");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DomainError("rating_law must sum to 1");
    if (date_start > date_end) throw DomainError("date range is empty");
    if (date_start < kMinDay || date_end > kMaxDay) {
      throw DomainError("date range outside 1999-01-01..2035-12-31");
    }
    // A median support above M means the clamp, not the law, decides most
    // support sizes.
    if (std::exp(support_mu) > static_cast<double>(n_attributes) + 0.5) {
      throw DomainError("support size law exceeds n_attributes");
    }
  }

  // Keys: n_records, n_attributes, zipf_exponent, support_mu, support_sigma,
  // rating_law (list), date_start, date_end (YYYY-MM-DD), seed.
  static SynthSpec from_config(const KeyValueConfig& cfg) {
    SynthSpec s;
    s.n_records = cfg.get<std::size_t>("n_records", s.n_records);
    s.n_attributes = cfg.get<std::size_t>("n_attributes", s.n_attributes);
    s.zipf_exponent = cfg.get<double>("zipf_exponent", s.zipf_exponent);
    s.support_mu = cfg.get<double>("support_mu", s.support_mu);
    s.support_sigma = cfg.get<double>("support_sigma", s.support_sigma);
    s.rating_law = cfg.get_list<double>("rating_law", s.rating_law);
    auto date = [&](const char* key, int fallback) {
      if (!cfg.has(key)) return fallback;
      const auto text = cfg.get<std::string>(key, "");
      const auto day = parse_iso_date(text);
      if (!day) throw ParseError(0, std::string("bad date for '") + key + "': " + text);
      return *day;
    };
    s.date_start = date("date_start", s.date_start);
    s.date_end = date("date_end", s.date_end);
    s.master_seed = cfg.get<std::uint64_t>("seed", s.master_seed);
    s.validate();
    return s;
  }
};

namespace detail {

inline constexpr std::uint64_t kRecordStream = 0x5EC0;
inline constexpr std::uint64_t kPlantStream = 0x91A7;

// Popularity-weighted sampling of distinct attribute ids.
class ZipfAttributeSampler {
 public:
  ZipfAttributeSampler(std::size_t n_attributes, double exponent)
      : weights_(n_attributes), cumulative_(n_attributes) {
    double total = 0.0;
    for (std::size_t j = 0; j < n_attributes; ++j) {
      weights_[j] = std::pow(static_cast<double>(j + 1), -exponent);
      total += weights_[j];
      cumulative_[j] = total;
    }
  }

  std::size_t size() const { return weights_.size(); }

  // k distinct attributes, sorted. Successive sampling without replacement:
  // rejection of repeats for small k, exponential-key selection otherwise.
  std::vector<AttributeId> sample(std::size_t k, Rng& rng,
                                  const std::vector<bool>* excluded = nullptr) const {
    std::vector<AttributeId> out;
    out.reserve(k);
    if (2 * k <= size() && excluded == nullptr) {
      std::vector<bool> taken(size(), false);
      while (out.size() < k) {
        const double u = rng.uniform() * cumulative_.back();
        auto j = static_cast<std::size_t>(
            std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());
        j = std::min(j, size() - 1);
        if (taken[j]) continue;
        taken[j] = true;
        out.push_back(AttributeId{j});
      }
    } else {
      // Efraimidis-Spirakis: keep the k largest log(u) / w.
      std::vector<std::pair<double, std::size_t>> keys;
      keys.reserve(size());
      for (std::size_t j = 0; j < size(); ++j) {
        const double u = 1.0 - rng.uniform();
        if (excluded != nullptr && (*excluded)[j]) continue;
        keys.emplace_back(std::log(u) / weights_[j], j);
      }
      if (keys.size() < k) throw DomainError("not enough attributes to sample from");
      std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(k), keys.end(),
                        [](const auto& a, const auto& b) {
                          return a.first > b.first || (a.first == b.first && a.second < b.second);
                        });
      for (std::size_t i = 0; i < k; ++i) out.push_back(AttributeId{keys[i].second});
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

inline int sample_rating(const std::vector<double>& law, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < law.size(); ++i) {
    acc += law[i];
    if (u < acc) return static_cast<int>(i + 1);
  }
  // Rounding slack: fall back to the last rating with positive mass.
  for (std::size_t i = law.size(); i-- > 0;) {
    if (law[i] > 0.0) return static_cast<int>(i + 1);
  }
  return 1;
}

inline Cell sample_cell(const SynthSpec& spec, Rng& rng) {
  const int rating = sample_rating(spec.rating_law, rng);
  const int date = static_cast<int>(rng.between(spec.date_start, spec.date_end));
  return Cell{rating, date};
}

inline std::size_t sample_support_size(const SynthSpec& spec, Rng& rng) {
  const double z = spec.support_sigma > 0.0 ? rng.normal() : 0.0;
  const double raw = std::round(std::exp(spec.support_mu + spec.support_sigma * z));
  const double clamped = std::clamp(raw, 1.0, static_cast<double>(spec.n_attributes));
  return static_cast<std::size_t>(clamped);
}

inline Record sample_record(const SynthSpec& spec, const ZipfAttributeSampler& sampler,
                            Rng& rng) {
  const std::size_t k = sample_support_size(spec, rng);
  const auto attributes = sampler.sample(k, rng);
  std::vector<Record::Entry> entries;
  entries.reserve(k);
  for (AttributeId a : attributes) entries.push_back({a, sample_cell(spec, rng)});
  return Record(std::move(entries));
}

}  // namespace detail

inline Dataset generate(const SynthSpec& spec, unsigned threads = 1) {
  spec.validate();
  const detail::ZipfAttributeSampler sampler(spec.n_attributes, spec.zipf_exponent);
  std::vector<Record> records(spec.n_records);
  parallel_for(spec.n_records, threads, [&](std::size_t i) {
    Rng rng(derive_seed(spec.master_seed, detail::kRecordStream, i));
    records[i] = detail::sample_record(spec, sampler, rng);
  });
  return Dataset(std::move(records), spec.n_attributes, spec.rating_scale());
}

struct PlantedDataset {
  Dataset dataset;
  RecordId target;
  RecordId twin;
};

// Appends `target` and a near-duplicate of it. The twin keeps a copy of all
// but c of the target's cells and replaces those c with cells on fresh
// attributes, so sim_record(target, twin) = (k - c) / (k + c); c is chosen
// to land closest to 1 - twin_distance.
inline PlantedDataset plant_record(const Dataset& ds, Record target, const SynthSpec& spec,
                                   double twin_distance) {
  if (!(twin_distance >= 0.0 && twin_distance <= 1.0)) {
    throw DomainError("twin_distance must be in [0, 1]");
  }
  const std::size_t k = target.support_size();
  if (k == 0) throw DomainError("cannot plant an empty record");
  const std::size_t n_attributes = std::max(ds.n_attributes(), spec.n_attributes);

  const double goal = 1.0 - twin_distance;
  std::size_t replaced = 0;
  double best_gap = 2.0;
  for (std::size_t c = 0; c <= k; ++c) {
    const double s = static_cast<double>(k - c) / static_cast<double>(k + c);
    if (std::abs(s - goal) < best_gap) {
      best_gap = std::abs(s - goal);
      replaced = c;
    }
  }
  if (n_attributes - k < replaced) {
    throw DomainError("not enough fresh attributes to build the twin");
  }

  Rng rng(derive_seed(spec.master_seed, detail::kPlantStream, ds.size()));
  std::vector<Record::Entry> kept(target.entries().begin(), target.entries().end());
  // Drop `replaced` cells chosen uniformly (partial Fisher-Yates).
  for (std::size_t i = 0; i < replaced; ++i) {
    const auto j = i + rng.below(kept.size() - i);
    std::swap(kept[i], kept[j]);
  }
  std::vector<Record::Entry> twin(kept.begin() + static_cast<std::ptrdiff_t>(replaced),
                                  kept.end());
  if (replaced > 0) {
    std::vector<bool> excluded(n_attributes, false);
    for (const auto& e : target.entries()) excluded[e.attribute.index()] = true;
    const detail::ZipfAttributeSampler sampler(n_attributes, spec.zipf_exponent);
    for (AttributeId a : sampler.sample(replaced, rng, &excluded)) {
      twin.push_back({a, detail::sample_cell(spec, rng)});
    }
  }

  std::vector<Record> records(ds.records().begin(), ds.records().end());
  const RecordId target_id{records.size()};
  records.push_back(std::move(target));
  records.emplace_back(std::move(twin));
  return {Dataset(std::move(records), n_attributes,
                  std::max(ds.rating_scale(), spec.rating_scale())),
          target_id, RecordId{target_id.value + 1}};
}

// Draws the target from the spec's laws on a dedicated stream, then plants
// it with a twin.
inline PlantedDataset plant_target(const Dataset& ds, const SynthSpec& spec,
                                   double twin_distance) {
  spec.validate();
  const detail::ZipfAttributeSampler sampler(spec.n_attributes, spec.zipf_exponent);
  Rng rng(derive_seed(spec.master_seed, detail::kPlantStream, ~std::uint64_t{0}, ds.size()));
  return plant_record(ds, detail::sample_record(spec, sampler, rng), spec, twin_distance);
}

}  // namespace deanon

#endif  // DEANON_SYNTH_HPP
