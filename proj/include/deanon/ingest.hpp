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
// Text formats and descriptive statistics.
//
// Canonical format (UTF-8, '\n' line ends, no quoting):
//
//   record_id,attribute_id,rating,date
//   u17,m42,4,2005-03-01
//   u17,m7,,2004-11-30        <- empty field = missing component
//
// Per-attribute block format (one block per attribute, blank lines ignored):
//
//   42:
//   u17,4,2005-03-01
//   u9,3,2004-02-11
//
// Keys are restricted to [A-Za-z0-9_-]. Ids are assigned in order of first
// appearance.
#ifndef DEANON_INGEST_HPP
#define DEANON_INGEST_HPP

#include <algorithm>
#include <array>
#include <charconv>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "deanon/common.hpp"
#include "deanon/dates.hpp"
#include "deanon/model.hpp"

namespace deanon {

inline constexpr std::string_view kCanonicalHeader = "record_id,attribute_id,rating,date";

inline bool is_valid_key(std::string_view key) {
  if (key.empty()) return false;
  return std::all_of(key.begin(), key.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '-';
  });
}

// Bidirectional mapping between external string keys and dense ids.
class IdMaps {
 public:
  RecordId intern_record(std::string_view key) {
    return RecordId{intern(key, record_keys_, record_index_)};
  }
  AttributeId intern_attribute(std::string_view key) {
    return AttributeId{intern(key, attribute_keys_, attribute_index_)};
  }

  std::optional<RecordId> find_record(std::string_view key) const {
    auto it = record_index_.find(std::string(key));
    if (it == record_index_.end()) return std::nullopt;
    return RecordId{it->second};
  }
  std::optional<AttributeId> find_attribute(std::string_view key) const {
    auto it = attribute_index_.find(std::string(key));
    if (it == attribute_index_.end()) return std::nullopt;
    return AttributeId{it->second};
  }

  const std::string& record_key(RecordId id) const { return record_keys_.at(id.index()); }
  const std::string& attribute_key(AttributeId id) const {
    return attribute_keys_.at(id.index());
  }

  std::size_t record_count() const { return record_keys_.size(); }
  std::size_t attribute_count() const { return attribute_keys_.size(); }

  // Maps where record i is "r<i>" and attribute j is "a<j>".
  static IdMaps synthetic(std::size_t n_records, std::size_t n_attributes) {
    IdMaps maps;
    for (std::size_t i = 0; i < n_records; ++i) maps.intern_record("r" + std::to_string(i));
    for (std::size_t j = 0; j < n_attributes; ++j) {
      maps.intern_attribute("a" + std::to_string(j));
    }
    return maps;
  }

 private:
  static std::uint32_t intern(std::string_view key, std::vector<std::string>& keys,
                              std::unordered_map<std::string, std::uint32_t>& index) {
    auto [it, inserted] =
        index.try_emplace(std::string(key), static_cast<std::uint32_t>(keys.size()));
    if (inserted) keys.emplace_back(key);
    return it->second;
  }

  std::vector<std::string> record_keys_;
  std::vector<std::string> attribute_keys_;
  std::unordered_map<std::string, std::uint32_t> record_index_;
  std::unordered_map<std::string, std::uint32_t> attribute_index_;
};

struct ParseOptions {
  int rating_scale = 5;
};

struct Ingested {
  Dataset dataset;
  IdMaps maps;
};

namespace detail {

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

inline bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t") == std::string_view::npos;
}

// Splits on ',' into exactly N fields; returns false on any other count.
template <std::size_t N>
bool split_fields(std::string_view line, std::array<std::string_view, N>& out) {
  std::size_t start = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const std::size_t comma = line.find(',', start);
    if (i + 1 < N) {
      if (comma == std::string_view::npos) return false;
      out[i] = line.substr(start, comma - start);
      start = comma + 1;
    } else {
      if (comma != std::string_view::npos) return false;
      out[i] = line.substr(start);
    }
  }
  return true;
}

inline Cell parse_cell(std::string_view rating_text, std::string_view date_text,
                       int rating_scale, std::size_t line) {
  std::optional<int> rating;
  std::optional<int> date;
  if (!rating_text.empty()) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(rating_text.data(), rating_text.data() + rating_text.size(), v);
    if (ec != std::errc{} || ptr != rating_text.data() + rating_text.size()) {
      throw ParseError(line, "unparsable rating '" + std::string(rating_text) + "'");
    }
    if (v < 1 || v > rating_scale) {
      throw ParseError(line, "rating " + std::to_string(v) + " outside [1, " +
                                 std::to_string(rating_scale) + "]");
    }
    rating = v;
  }
  if (!date_text.empty()) {
    date = parse_iso_date(date_text);
    if (!date) {
      throw ParseError(line, "invalid date '" + std::string(date_text) +
                                 "' (expected YYYY-MM-DD within 1999-01-01..2035-12-31)");
    }
  }
  if (!rating && !date) throw ParseError(line, "cell has neither rating nor date");
  return Cell{rating, date};
}

inline void check_key(std::string_view key, std::string_view what, std::size_t line) {
  if (!is_valid_key(key)) {
    throw ParseError(line, "invalid " + std::string(what) + " '" + std::string(key) +
                               "' (allowed: [A-Za-z0-9_-]+)");
  }
}

// Accumulates cells keyed by external ids and produces the dataset.
class DatasetBuilder {
 public:
  explicit DatasetBuilder(int rating_scale) : rating_scale_(rating_scale) {}

  void add(std::string_view record_key, std::string_view attribute_key, Cell cell,
           std::size_t line) {
    const RecordId r = maps_.intern_record(record_key);
    const AttributeId a = maps_.intern_attribute(attribute_key);
    if (r.index() == rows_.size()) rows_.emplace_back();
    rows_[r.index()].push_back({Record::Entry{a, cell}, line});
  }

  Ingested finish() && {
    std::vector<Record> records;
    records.reserve(rows_.size());
    for (auto& row : rows_) {
      std::stable_sort(row.begin(), row.end(), [](const auto& x, const auto& y) {
        return x.first.attribute < y.first.attribute;
      });
      for (std::size_t i = 1; i < row.size(); ++i) {
        if (row[i].first.attribute == row[i - 1].first.attribute) {
          const std::size_t line = std::max(row[i].second, row[i - 1].second);
          throw ParseError(line, "duplicate (record, attribute) pair (" +
                                     maps_.record_key(RecordId{records.size()}) + ", " +
                                     maps_.attribute_key(row[i].first.attribute) + ")");
        }
      }
      std::vector<Record::Entry> entries;
      entries.reserve(row.size());
      for (const auto& [entry, line] : row) entries.push_back(entry);
      records.emplace_back(std::move(entries));
      std::vector<std::pair<Record::Entry, std::size_t>>().swap(row);
    }
    const std::size_t n_attributes = maps_.attribute_count();
    return Ingested{Dataset(std::move(records), n_attributes, rating_scale_), std::move(maps_)};
  }

 private:
  int rating_scale_;
  IdMaps maps_;
  std::vector<std::vector<std::pair<Record::Entry, std::size_t>>> rows_;
};

inline void check_stream(const std::istream& in) {
  if (in.bad()) throw IoError("read error");
}

}  // namespace detail

// Parses the canonical comma-separated format in a single streaming pass.
inline Ingested parse_canonical(std::istream& in, const ParseOptions& opts = {}) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (!have_header && std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (detail::is_blank(line)) continue;
    if (line != kCanonicalHeader) {
      throw ParseError(line_no, "expected header '" + std::string(kCanonicalHeader) + "'");
    }
    have_header = true;
  }
  detail::check_stream(in);
  if (!have_header) throw ParseError(0, "missing header line");

  detail::DatasetBuilder builder(opts.rating_scale);
  std::array<std::string_view, 4> fields;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (detail::is_blank(line)) continue;
    if (!detail::split_fields(line, fields)) {
      throw ParseError(line_no, "expected 4 comma-separated fields");
    }
    detail::check_key(fields[0], "record key", line_no);
    detail::check_key(fields[1], "attribute key", line_no);
    builder.add(fields[0], fields[1],
                detail::parse_cell(fields[2], fields[3], opts.rating_scale, line_no), line_no);
  }
  detail::check_stream(in);
  return std::move(builder).finish();
}

// Parses the per-attribute block format: "<attribute_key>:" header lines each
// followed by "<record_key>,<rating>,<YYYY-MM-DD>" lines.
inline Ingested parse_movie_per_file(std::istream& in, const ParseOptions& opts = {}) {
  detail::DatasetBuilder builder(opts.rating_scale);
  std::string line;
  std::string attribute;
  std::size_t line_no = 0;
  std::array<std::string_view, 3> fields;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (detail::is_blank(line)) continue;
    if (line.back() == ':') {
      std::string_view key(line.data(), line.size() - 1);
      detail::check_key(key, "attribute key", line_no);
      attribute.assign(key);
      continue;
    }
    if (attribute.empty()) throw ParseError(line_no, "row before any '<attribute>:' header");
    if (!detail::split_fields(line, fields)) {
      throw ParseError(line_no, "expected 3 comma-separated fields");
    }
    detail::check_key(fields[0], "record key", line_no);
    builder.add(fields[0], attribute,
                detail::parse_cell(fields[1], fields[2], opts.rating_scale, line_no), line_no);
  }
  detail::check_stream(in);
  return std::move(builder).finish();
}

// Emits the canonical format: records in id order, cells in attribute order.
// Records with empty support have no representation and are skipped.
inline void write_canonical(std::ostream& out, const Dataset& ds, const IdMaps& maps) {
  out << kCanonicalHeader << '\n';
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const std::string& rkey = maps.record_key(RecordId{r});
    for (const auto& e : ds.record(RecordId{r}).entries()) {
      out << rkey << ',' << maps.attribute_key(e.attribute) << ',';
      if (auto rating = e.cell.rating()) out << *rating;
      out << ',';
      if (auto date = e.cell.date()) out << format_iso_date(*date);
      out << '\n';
    }
  }
  if (!out) throw IoError("write error");
}

struct RankedAttribute {
  std::size_t rank = 0;  // 1 = most supported
  AttributeId attribute;
  std::size_t support = 0;
};

struct PopularityMarginal {
  std::size_t rank_cutoff = 0;
  std::size_t min_count = 0;
  double fraction = 0.0;  // of records with >= min_count attributes ranked > cutoff
};

struct DatasetStats {
  std::map<std::size_t, std::size_t> ratings_per_record;  // k -> records with k cells
  std::vector<RankedAttribute> attribute_ranks;
  std::vector<PopularityMarginal> popularity_marginals;
};

inline constexpr std::array<std::size_t, 3> kMarginalCutoffs{100, 500, 1000};
inline constexpr std::array<std::size_t, 3> kMarginalMinCounts{1, 5, 10};

// Attributes sorted by support, descending; ties by attribute id.
inline std::vector<RankedAttribute> rank_attributes(const Dataset& ds) {
  std::vector<RankedAttribute> ranks(ds.n_attributes());
  for (std::size_t a = 0; a < ds.n_attributes(); ++a) {
    ranks[a].attribute = AttributeId{a};
    ranks[a].support = ds.col_support(AttributeId{a});
  }
  std::stable_sort(ranks.begin(), ranks.end(),
                   [](const auto& x, const auto& y) { return x.support > y.support; });
  for (std::size_t i = 0; i < ranks.size(); ++i) ranks[i].rank = i + 1;
  return ranks;
}

// rank_of[attribute] = popularity rank (1-based).
inline std::vector<std::size_t> rank_lookup(const std::vector<RankedAttribute>& ranks) {
  std::vector<std::size_t> rank_of(ranks.size());
  for (const auto& r : ranks) rank_of[r.attribute.index()] = r.rank;
  return rank_of;
}

inline DatasetStats compute_stats(const Dataset& ds) {
  DatasetStats stats;
  for (const Record& r : ds.records()) ++stats.ratings_per_record[r.support_size()];
  stats.attribute_ranks = rank_attributes(ds);
  const auto rank_of = rank_lookup(stats.attribute_ranks);

  for (std::size_t cutoff : kMarginalCutoffs) {
    std::array<std::size_t, kMarginalMinCounts.size()> hits{};
    for (const Record& r : ds.records()) {
      std::size_t outside = 0;
      for (const auto& e : r.entries()) outside += rank_of[e.attribute.index()] > cutoff;
      for (std::size_t k = 0; k < kMarginalMinCounts.size(); ++k) {
        hits[k] += outside >= kMarginalMinCounts[k];
      }
    }
    for (std::size_t k = 0; k < kMarginalMinCounts.size(); ++k) {
      const double fraction =
          ds.size() == 0 ? 0.0 : static_cast<double>(hits[k]) / static_cast<double>(ds.size());
      stats.popularity_marginals.push_back({cutoff, kMarginalMinCounts[k], fraction});
    }
  }
  return stats;
}

}  // namespace deanon

#endif  // DEANON_INGEST_HPP
