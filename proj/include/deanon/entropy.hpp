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
#ifndef DEANON_ENTROPY_HPP
#define DEANON_ENTROPY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "deanon/common.hpp"

namespace deanon {

// Probability distribution over record ids; entries sorted by id, zero-mass
// records omitted.
class Distribution {
 public:
  Distribution() = default;
  explicit Distribution(std::vector<std::pair<RecordId, double>> mass) : mass_(std::move(mass)) {
    std::sort(mass_.begin(), mass_.end());
  }

  static Distribution uniform(std::span<const RecordId> support) {
    std::vector<std::pair<RecordId, double>> mass;
    mass.reserve(support.size());
    const double p = 1.0 / static_cast<double>(support.size());
    for (RecordId r : support) mass.emplace_back(r, p);
    Distribution d(std::move(mass));
    d.uniform_count_ = support.size();
    return d;
  }

  std::span<const std::pair<RecordId, double>> entries() const { return mass_; }
  std::size_t support_size() const { return mass_.size(); }
  bool empty() const { return mass_.empty(); }

  double probability(RecordId r) const {
    auto it = std::lower_bound(mass_.begin(), mass_.end(), r,
                               [](const auto& e, RecordId id) { return e.first < id; });
    return it != mass_.end() && it->first == r ? it->second : 0.0;
  }

  // -log2 p(r), exact for uniform distributions where 1/k is inexact.
  double code_length(RecordId r) const {
    const double p = probability(r);
    if (p <= 0.0) return std::numeric_limits<double>::infinity();
    if (uniform_count_ > 0) return std::log2(static_cast<double>(uniform_count_));
    return -std::log2(p);
  }

  double total() const {
    double sum = 0.0;
    for (const auto& [r, p] : mass_) sum += p;
    return sum;
  }

  // Entries by decreasing probability, ties by id.
  std::vector<std::pair<RecordId, double>> top(std::size_t j) const {
    std::vector<std::pair<RecordId, double>> ranked(mass_.begin(), mass_.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > j) ranked.resize(j);
    return ranked;
  }

 private:
  std::vector<std::pair<RecordId, double>> mass_;
  std::size_t uniform_count_ = 0;  // nonzero for uniform()
};

// Bits needed to single out the target given the adversary's lineup: the
// shortest optimal code length -log2 p over records similar to the target
// that carry mass. Falls back to the a priori entropy log2(N) when no such
// record has mass.
inline double entropy_of_target(const Distribution& lineup, std::span<const RecordId> similar,
                                std::size_t n_records) {
  double best = std::numeric_limits<double>::infinity();
  for (RecordId r : similar) {
    best = std::min(best, lineup.code_length(r));
  }
  if (best == std::numeric_limits<double>::infinity()) {
    return std::log2(static_cast<double>(n_records));
  }
  return std::max(0.0, best);
}

inline double entropy_of_target(const Distribution& lineup, RecordId target,
                                std::size_t n_records) {
  return entropy_of_target(lineup, std::span<const RecordId>(&target, 1), n_records);
}

// Average of the lineup with the uniform distribution over all N records.
// Every record gets mass, and a record's code length grows by at most 1 bit.
inline Distribution mix_with_uniform(const Distribution& lineup, std::size_t n_records) {
  if (n_records == 0) throw DomainError("mix_with_uniform needs N >= 1");
  std::vector<std::pair<RecordId, double>> mass(n_records);
  const double floor = 0.5 / static_cast<double>(n_records);
  for (std::size_t r = 0; r < n_records; ++r) mass[r] = {RecordId{r}, floor};
  for (const auto& [r, p] : lineup.entries()) {
    if (r.index() >= n_records) throw DomainError("lineup record outside [0, N)");
    mass[r.index()].second += 0.5 * p;
  }
  return Distribution(std::move(mass));
}

}  // namespace deanon

#endif  // DEANON_ENTROPY_HPP
