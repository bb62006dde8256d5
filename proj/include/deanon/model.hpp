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
// Sparse record model: cells, records, the indexed dataset, attribute and
// record similarity, and nearest-neighbour sparsity profiling.
#ifndef DEANON_MODEL_HPP
#define DEANON_MODEL_HPP

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "deanon/common.hpp"
#include "deanon/parallel.hpp"

namespace deanon {

// One non-null matrix entry: an optional rating and an optional date (days
// since 1999-01-01). Packed into 8 bytes; a default-constructed cell has
// neither component.
class Cell {
 public:
  constexpr Cell() = default;
  constexpr Cell(std::optional<int> rating, std::optional<int> date)
      : rating_(rating ? static_cast<std::int16_t>(*rating) : kNoRating),
        date_(date ? static_cast<std::int32_t>(*date) : kNoDate) {}

  constexpr std::optional<int> rating() const {
    if (rating_ == kNoRating) return std::nullopt;
    return rating_;
  }
  constexpr std::optional<int> date() const {
    if (date_ == kNoDate) return std::nullopt;
    return date_;
  }
  constexpr bool has_rating() const { return rating_ != kNoRating; }
  constexpr bool has_date() const { return date_ != kNoDate; }
  constexpr bool empty() const { return !has_rating() && !has_date(); }

  friend constexpr bool operator==(const Cell&, const Cell&) = default;

 private:
  static constexpr std::int16_t kNoRating = std::numeric_limits<std::int16_t>::min();
  static constexpr std::int32_t kNoDate = std::numeric_limits<std::int32_t>::min();

  std::int16_t rating_ = kNoRating;
  std::int32_t date_ = kNoDate;
};

// A row of the data matrix, stored as entries sorted by attribute.
class Record {
 public:
  struct Entry {
    AttributeId attribute;
    Cell cell;

    friend constexpr bool operator==(const Entry&, const Entry&) = default;
  };

  Record() = default;

  // Sorts the entries; throws DomainError on a repeated attribute.
  explicit Record(std::vector<Entry> entries) : entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(),
              [](const Entry& a, const Entry& b) { return a.attribute < b.attribute; });
    const auto dup = std::adjacent_find(
        entries_.begin(), entries_.end(),
        [](const Entry& a, const Entry& b) { return a.attribute == b.attribute; });
    if (dup != entries_.end()) {
      throw DomainError("duplicate attribute " + std::to_string(dup->attribute.value) +
                        " in record");
    }
  }

  std::span<const Entry> entries() const { return entries_; }
  std::size_t support_size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const Cell* find(AttributeId attribute) const {
    auto it = std::lower_bound(
        entries_.begin(), entries_.end(), attribute,
        [](const Entry& e, AttributeId a) { return e.attribute < a; });
    if (it == entries_.end() || it->attribute != attribute) return nullptr;
    return &it->cell;
  }

  friend bool operator==(const Record&, const Record&) = default;

 private:
  std::vector<Entry> entries_;
};

// Immutable record collection with an attribute -> records inverted index.
// Safe to share across threads once constructed.
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::vector<Record> records, std::size_t n_attributes, int rating_scale = 5)
      : records_(std::move(records)),
        n_attributes_(n_attributes),
        rating_scale_(rating_scale) {
    if (rating_scale_ < 1) throw DomainError("rating scale must be >= 1");
    if (records_.size() > std::numeric_limits<std::uint32_t>::max() ||
        n_attributes_ > std::numeric_limits<std::uint32_t>::max()) {
      throw DomainError("dataset dimensions exceed 32-bit ids");
    }
    offsets_.assign(n_attributes_ + 1, 0);
    for (const Record& r : records_) {
      for (const auto& e : r.entries()) {
        if (e.attribute.index() >= n_attributes_) {
          throw DomainError("attribute id " + std::to_string(e.attribute.value) +
                            " outside [0, " + std::to_string(n_attributes_) + ")");
        }
        if (e.cell.empty()) throw DomainError("cell without rating or date");
        if (auto rating = e.cell.rating(); rating && (*rating < 1 || *rating > rating_scale_)) {
          throw DomainError("rating " + std::to_string(*rating) + " outside [1, " +
                            std::to_string(rating_scale_) + "]");
        }
        if (auto date = e.cell.date()) {
          min_date_ = std::min(min_date_.value_or(*date), *date);
          max_date_ = std::max(max_date_.value_or(*date), *date);
        }
        ++offsets_[e.attribute.index() + 1];
      }
    }
    for (std::size_t a = 0; a < n_attributes_; ++a) offsets_[a + 1] += offsets_[a];
    postings_.resize(offsets_.back());
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    // Records are visited in id order, so every posting list comes out sorted.
    for (std::size_t r = 0; r < records_.size(); ++r) {
      for (const auto& e : records_[r].entries()) {
        postings_[cursor[e.attribute.index()]++] = RecordId{r};
      }
    }
  }

  std::size_t size() const { return records_.size(); }
  std::size_t n_attributes() const { return n_attributes_; }
  int rating_scale() const { return rating_scale_; }
  std::size_t total_cells() const { return postings_.size(); }

  std::span<const Record> records() const { return records_; }
  const Record& record(RecordId id) const { return records_.at(id.index()); }

  // Records whose support contains `attribute`, in increasing id order.
  std::span<const RecordId> postings(AttributeId attribute) const {
    if (attribute.index() >= n_attributes_) return {};
    return std::span<const RecordId>(postings_).subspan(
        offsets_[attribute.index()],
        offsets_[attribute.index() + 1] - offsets_[attribute.index()]);
  }

  std::size_t col_support(AttributeId attribute) const {
    return postings(attribute).size();
  }

  // Smallest and largest date present in any cell.
  std::optional<std::pair<int, int>> date_bounds() const {
    if (!min_date_) return std::nullopt;
    return std::pair{*min_date_, *max_date_};
  }

 private:
  std::vector<Record> records_;
  std::size_t n_attributes_ = 0;
  int rating_scale_ = 5;
  std::vector<std::size_t> offsets_{0};
  std::vector<RecordId> postings_;
  std::optional<int> min_date_;
  std::optional<int> max_date_;
};

// Thresholds of the attribute similarity. rating_threshold 0 means exact
// rating match; an empty date_threshold ignores dates entirely.
struct SimConfig {
  int rating_threshold = 0;
  std::optional<int> date_threshold = 0;
};

// Binary threshold similarity between two cells. A component missing on
// either side is not compared.
constexpr double sim_attr(const Cell& a, const Cell& b, const SimConfig& cfg) {
  if (a.has_rating() && b.has_rating() &&
      std::abs(*a.rating() - *b.rating()) > cfg.rating_threshold) {
    return 0.0;
  }
  if (cfg.date_threshold && a.has_date() && b.has_date() &&
      std::abs(static_cast<long long>(*a.date()) - *b.date()) > *cfg.date_threshold) {
    return 0.0;
  }
  return 1.0;
}

// Null on either side is never similar.
constexpr double sim_attr(const Cell* a, const Cell* b, const SimConfig& cfg) {
  if (a == nullptr || b == nullptr) return 0.0;
  return sim_attr(*a, *b, cfg);
}

// Attribute similarity kernel usable by sim_record. Must return a value in
// [0, 1]; only ThresholdSim ships.
template <class F>
concept AttributeSimilarity = requires(const F& f, const Cell& a, const Cell& b) {
  { f(a, b) } -> std::convertible_to<double>;
};

struct ThresholdSim {
  SimConfig config;
  constexpr double operator()(const Cell& a, const Cell& b) const {
    return sim_attr(a, b, config);
  }
};

// Generalized cosine similarity: sum of attribute similarities over the union
// of supports, divided by the size of that union. Null attributes contribute
// zero, so only the intersection is evaluated.
template <AttributeSimilarity Sim>
double sim_record(const Record& r1, const Record& r2, const Sim& sim) {
  const auto a = r1.entries();
  const auto b = r2.entries();
  if (a.empty() && b.empty()) {
    throw DomainError("record similarity undefined for two empty records");
  }
  double sum = 0.0;
  std::size_t shared = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].attribute < b[j].attribute) {
      ++i;
    } else if (b[j].attribute < a[i].attribute) {
      ++j;
    } else {
      sum += sim(a[i].cell, b[j].cell);
      ++shared;
      ++i;
      ++j;
    }
  }
  const std::size_t union_size = a.size() + b.size() - shared;
  return sum / static_cast<double>(union_size);
}

inline double sim_record(const Record& r1, const Record& r2, const SimConfig& cfg) {
  return sim_record(r1, r2, ThresholdSim{cfg});
}

struct Neighbor {
  RecordId id;
  double similarity = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

namespace detail {

// Per-thread visited marks for candidate enumeration, reset by bumping the
// generation instead of clearing.
struct VisitMarks {
  std::vector<std::uint32_t> stamp;
  std::uint32_t generation = 0;

  void begin(std::size_t n) {
    if (stamp.size() < n) stamp.resize(n, 0);
    if (++generation == 0) {
      std::fill(stamp.begin(), stamp.end(), 0);
      generation = 1;
    }
  }
  bool visit(RecordId id) {
    if (stamp[id.index()] == generation) return false;
    stamp[id.index()] = generation;
    return true;
  }
};

inline VisitMarks& thread_marks() {
  thread_local VisitMarks marks;
  return marks;
}

}  // namespace detail

// Most similar other record. Only records sharing an attribute with the query
// are evaluated; all others have similarity 0. Ties go to the smallest id.
// An empty query record has similarity 0 to everything.
inline Neighbor nearest_neighbor_sim(const Dataset& ds, RecordId rid, const SimConfig& cfg) {
  if (ds.size() < 2) throw DomainError("nearest neighbour needs at least 2 records");
  if (rid.index() >= ds.size()) throw DomainError("record id out of range");
  Neighbor best{RecordId{rid.value == 0 ? 1u : 0u}, 0.0};
  const Record& query = ds.record(rid);
  auto& marks = detail::thread_marks();
  marks.begin(ds.size());
  marks.visit(rid);
  const ThresholdSim sim{cfg};
  for (const auto& e : query.entries()) {
    for (RecordId other : ds.postings(e.attribute)) {
      if (!marks.visit(other)) continue;
      const double s = sim_record(query, ds.record(other), sim);
      if (s > best.similarity || (s == best.similarity && other < best.id)) {
        best = {other, s};
      }
    }
  }
  return best;
}

// Nearest-neighbour similarity of every record, with the empirical sparsity
// curve delta(eps) = fraction of records whose nearest neighbour is more
// similar than eps.
class SparsityProfile {
 public:
  explicit SparsityProfile(std::vector<Neighbor> nearest)
      : nearest_(std::move(nearest)) {
    sorted_.reserve(nearest_.size());
    for (const auto& n : nearest_) sorted_.push_back(n.similarity);
    std::sort(sorted_.begin(), sorted_.end());
  }

  std::span<const Neighbor> nearest() const { return nearest_; }
  std::span<const double> sorted_similarities() const { return sorted_; }

  double delta(double eps) const {
    if (sorted_.empty()) return 0.0;
    const auto above = sorted_.end() - std::upper_bound(sorted_.begin(), sorted_.end(), eps);
    return static_cast<double>(above) / static_cast<double>(sorted_.size());
  }

  // Fraction of records whose nearest-neighbour similarity is at least x.
  double at_least(double x) const {
    if (sorted_.empty()) return 0.0;
    const auto n = sorted_.end() - std::lower_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(n) / static_cast<double>(sorted_.size());
  }

  // (eps, delta) sparsity holds when delta(eps) <= delta_bound.
  bool is_sparse(double eps, double delta_bound) const { return delta(eps) <= delta_bound; }

 private:
  std::vector<Neighbor> nearest_;
  std::vector<double> sorted_;
};

inline SparsityProfile sparsity_profile(const Dataset& ds, const SimConfig& cfg,
                                        unsigned threads = 1) {
  if (ds.size() < 2) throw DomainError("sparsity profile needs at least 2 records");
  std::vector<Neighbor> nearest(ds.size());
  parallel_for(ds.size(), threads, [&](std::size_t i) {
    nearest[i] = nearest_neighbor_sim(ds, RecordId{i}, cfg);
  });
  return SparsityProfile(std::move(nearest));
}

}  // namespace deanon

#endif  // DEANON_MODEL_HPP
