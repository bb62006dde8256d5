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
// Scoring, matching criteria and record selection.
//
// The attack template: score every released record against the aux, apply a
// matching criterion (empty matching set = "not in the release"), then either
// pick the best-scoring record or emit a lineup distribution. Two
// instantiations ship:
//
//   - min-similarity (1A): score = least similar aux attribute; the matching
//     set is every record scoring above alpha; the lineup is uniform on it.
//   - weighted (1B): score = sum of rarity-weighted attribute matches; a match
//     is declared only when the top score stands out by phi standard
//     deviations from the runner-up; the lineup is softmax(score / sigma).
//
// Every shipped scorer gives 0 to a record sharing no aux attribute, so only
// records found through the inverted index are scored. Non-candidates take
// part in the statistics (max, second max, sigma) as implicit zeros.
#ifndef DEANON_MATCH_HPP
#define DEANON_MATCH_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "deanon/aux.hpp"
#include "deanon/common.hpp"
#include "deanon/entropy.hpp"
#include "deanon/model.hpp"

namespace deanon {

struct AlgoParams {
  double alpha = 0.9;  // min-similarity acceptance threshold
  double phi = 1.5;    // eccentricity threshold
  double rho0 = 1.5;   // rating kernel scale
  double d0 = 30.0;    // date kernel scale, days
  SimConfig sim_config{0, 14};
  // When set and the aux claims a record size, candidates whose support lies
  // outside claimed * [1 - err, 1 + err] are dropped before selection.
  std::optional<double> record_size_error;

  void validate() const {
    if (!(phi > 0.0)) throw DomainError("phi must be > 0");
    if (!(rho0 > 0.0) || !(d0 > 0.0)) throw DomainError("rho0 and d0 must be > 0");
    if (sim_config.rating_threshold < 0 ||
        (sim_config.date_threshold && *sim_config.date_threshold < 0)) {
      throw DomainError("similarity thresholds must be >= 0");
    }
    if (record_size_error && !(*record_size_error >= 0.0)) {
      throw DomainError("record size error must be >= 0");
    }
  }
};

// Rarity weight 1 / ln|supp(i)|. Supports below 2 are clamped to 2 so that a
// singleton attribute gets the largest finite weight.
inline double attribute_weight(std::size_t col_support) {
  return 1.0 / std::log(static_cast<double>(std::max<std::size_t>(col_support, 2)));
}

// Least similar aux attribute; an attribute missing from the candidate scores 0.
inline double score_1a(const AuxInfo& aux, const Record& candidate, const SimConfig& cfg) {
  if (aux.empty()) throw DomainError("aux is empty");
  double score = 1.0;
  for (const auto& e : aux.entries.entries()) {
    score = std::min(score, sim_attr(&e.cell, candidate.find(e.attribute), cfg));
    if (score == 0.0) break;
  }
  return score;
}

inline double score_1b_generic(const AuxInfo& aux, const Record& candidate, const Dataset& ds,
                               const SimConfig& cfg) {
  if (aux.empty()) throw DomainError("aux is empty");
  double score = 0.0;
  for (const auto& e : aux.entries.entries()) {
    const double s = sim_attr(&e.cell, candidate.find(e.attribute), cfg);
    if (s != 0.0) score += attribute_weight(ds.col_support(e.attribute)) * s;
  }
  return score;
}

// Weighted sum of exponential rating and date kernels,
// wt(i) * (exp(-|drating| / rho0) + exp(-|ddate| / d0)), over aux attributes
// the candidate has. A component missing on either side drops its kernel.
inline double score_netflix(const AuxInfo& aux, const Record& candidate, const Dataset& ds,
                            const AlgoParams& params) {
  if (aux.empty()) throw DomainError("aux is empty");
  double score = 0.0;
  for (const auto& e : aux.entries.entries()) {
    const Cell* other = candidate.find(e.attribute);
    if (other == nullptr) continue;
    double kernel = 0.0;
    if (e.cell.has_rating() && other->has_rating()) {
      kernel += std::exp(-std::abs(*e.cell.rating() - *other->rating()) / params.rho0);
    }
    if (e.cell.has_date() && other->has_date()) {
      kernel += std::exp(-std::abs(static_cast<double>(*e.cell.date()) - *other->date()) /
                         params.d0);
    }
    score += attribute_weight(ds.col_support(e.attribute)) * kernel;
  }
  return score;
}

enum class ScorerKind { kMinSim, kWeighted, kNetflix };

inline std::string_view to_string(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::kMinSim: return "1a";
    case ScorerKind::kWeighted: return "1b";
    case ScorerKind::kNetflix: return "netflix";
  }
  return "?";
}

inline std::optional<ScorerKind> parse_scorer(std::string_view text) {
  if (text == "1a" || text == "1A") return ScorerKind::kMinSim;
  if (text == "1b" || text == "1B" || text == "1b-generic") return ScorerKind::kWeighted;
  if (text == "netflix" || text == "1b-netflix") return ScorerKind::kNetflix;
  return std::nullopt;
}

// Score of one record under the chosen scorer.
inline double score_record(ScorerKind kind, const AuxInfo& aux, const Record& candidate,
                           const Dataset& ds, const AlgoParams& params) {
  switch (kind) {
    case ScorerKind::kMinSim: return score_1a(aux, candidate, params.sim_config);
    case ScorerKind::kWeighted: return score_1b_generic(aux, candidate, ds, params.sim_config);
    case ScorerKind::kNetflix: return score_netflix(aux, candidate, ds, params);
  }
  return 0.0;
}

// Scores over the candidate set (records sharing an aux attribute), sorted by
// id. Every other record implicitly scores 0.
class ScoreVector {
 public:
  ScoreVector() = default;
  ScoreVector(std::size_t n_records, std::vector<std::pair<RecordId, double>> scores)
      : n_records_(n_records), scores_(std::move(scores)) {}

  std::size_t n_records() const { return n_records_; }
  std::span<const std::pair<RecordId, double>> candidates() const { return scores_; }

  double score(RecordId r) const {
    auto it = std::lower_bound(scores_.begin(), scores_.end(), r,
                               [](const auto& e, RecordId id) { return e.first < id; });
    return it != scores_.end() && it->first == r ? it->second : 0.0;
  }

  ScoreVector scaled(double c) const {
    ScoreVector out = *this;
    for (auto& [r, s] : out.scores_) s *= c;
    return out;
  }

  // Removes candidates whose support size fails the predicate.
  template <class Pred>
  ScoreVector filtered(Pred keep) const {
    ScoreVector out(n_records_, {});
    for (const auto& e : scores_) {
      if (keep(e.first)) out.scores_.push_back(e);
    }
    return out;
  }

 private:
  std::size_t n_records_ = 0;
  std::vector<std::pair<RecordId, double>> scores_;
};

inline std::vector<RecordId> candidate_records(const Dataset& ds, const AuxInfo& aux) {
  std::vector<RecordId> out;
  auto& marks = detail::thread_marks();
  marks.begin(ds.size());
  for (const auto& e : aux.entries.entries()) {
    for (RecordId r : ds.postings(e.attribute)) {
      if (marks.visit(r)) out.push_back(r);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline ScoreVector score_all(const Dataset& ds, const AuxInfo& aux, ScorerKind kind,
                             const AlgoParams& params) {
  if (aux.empty()) throw DomainError("aux is empty");
  const auto candidates = candidate_records(ds, aux);
  std::vector<std::pair<RecordId, double>> scores;
  scores.reserve(candidates.size());
  for (RecordId r : candidates) {
    scores.emplace_back(r, score_record(kind, aux, ds.record(r), ds, params));
  }
  return ScoreVector(ds.size(), std::move(scores));
}

// Drops candidates whose support size lies outside
// [claimed * (1 - rel_err), claimed * (1 + rel_err)].
inline ScoreVector record_size_filter(const ScoreVector& sv, const Dataset& ds,
                                      std::size_t claimed_size, double rel_err) {
  if (!(rel_err >= 0.0)) throw DomainError("rel_err must be >= 0");
  const double lo = static_cast<double>(claimed_size) * (1.0 - rel_err);
  const double hi = static_cast<double>(claimed_size) * (1.0 + rel_err);
  return sv.filtered([&](RecordId r) {
    const auto size = static_cast<double>(ds.record(r).support_size());
    return size >= lo && size <= hi;
  });
}

// Order statistics and spread of the full score vector (implicit zeros
// included). sigma is the population standard deviation.
struct ScoreStats {
  double max = 0.0;
  double max2 = 0.0;
  double sigma = 0.0;
  double mean = 0.0;
  RecordId argmax;
  std::size_t candidates = 0;

  // (max - max2) / sigma; 0 when sigma is 0.
  double eccentricity() const { return sigma > 0.0 ? (max - max2) / sigma : 0.0; }
};

inline ScoreStats score_stats(const ScoreVector& sv) {
  const std::size_t n = sv.n_records();
  if (n < 2) throw DomainError("score statistics need at least 2 records");
  const auto cand = sv.candidates();
  const bool has_zeros = cand.size() < n;

  ScoreStats st;
  st.candidates = cand.size();
  double sum = 0.0;
  double sumsq = 0.0;
  double lo = has_zeros ? 0.0 : cand.front().second;
  double hi = lo;
  bool have_max = false;
  double max = 0.0;
  double max2 = 0.0;
  auto push = [&](double s) {
    if (!have_max) {
      max = s;
      max2 = -std::numeric_limits<double>::infinity();
      have_max = true;
    } else if (s > max) {
      max2 = max;
      max = s;
    } else if (s > max2) {
      max2 = s;
    }
  };
  for (const auto& [r, s] : cand) {
    sum += s;
    sumsq += s * s;
    lo = std::min(lo, s);
    hi = std::max(hi, s);
    push(s);
  }
  // Implicit zeros: one or two copies settle the order statistics.
  if (has_zeros) {
    push(0.0);
    if (n - cand.size() >= 2) push(0.0);
  }
  st.max = max;
  st.max2 = max2;
  st.mean = sum / static_cast<double>(n);
  if (lo == hi) {
    st.sigma = 0.0;
  } else {
    const double var = sumsq / static_cast<double>(n) - st.mean * st.mean;
    st.sigma = var > 0.0 ? std::sqrt(var) : 0.0;
  }

  // Smallest id attaining the maximum.
  std::optional<RecordId> best;
  for (const auto& [r, s] : cand) {
    if (s == max) {
      best = r;
      break;
    }
  }
  if (max == 0.0 && has_zeros) {
    // Smallest id that is not a candidate, or a zero-scoring candidate.
    std::uint32_t gap = 0;
    for (const auto& [r, s] : cand) {
      if (r.value != gap) break;
      ++gap;
    }
    if (!best || RecordId{gap} < *best) best = RecordId{gap};
  }
  st.argmax = *best;
  return st;
}

enum class MatchKind { kBestGuess, kNoMatch, kLineup };

inline std::string_view to_string(MatchKind kind) {
  switch (kind) {
    case MatchKind::kBestGuess: return "best-guess";
    case MatchKind::kNoMatch: return "no-match";
    case MatchKind::kLineup: return "lineup";
  }
  return "?";
}

struct MatchOutcome {
  MatchKind kind = MatchKind::kNoMatch;
  std::optional<RecordId> best_guess;
  Distribution lineup;  // empty when sigma = 0
  ScoreStats stats;
  std::vector<RecordId> matching_set;  // min-similarity matcher only
};

// Softmax of score / sigma over the candidate set, shifted by the maximum
// candidate score before exponentiating.
inline Distribution lineup_distribution(const ScoreVector& sv, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("lineup distribution needs sigma > 0");
  const auto cand = sv.candidates();
  if (cand.empty()) throw DomainError("lineup distribution needs candidates");
  double top = cand.front().second;
  for (const auto& [r, s] : cand) top = std::max(top, s);
  std::vector<std::pair<RecordId, double>> mass;
  mass.reserve(cand.size());
  double total = 0.0;
  for (const auto& [r, s] : cand) {
    const double w = std::exp((s - top) / sigma);
    mass.emplace_back(r, w);
    total += w;
  }
  for (auto& [r, w] : mass) w /= total;
  return Distribution(std::move(mass));
}

inline Distribution lineup_distribution(const ScoreVector& sv) {
  return lineup_distribution(sv, score_stats(sv).sigma);
}

// Eccentricity criterion on an already computed score vector.
inline MatchOutcome select_best_guess(const ScoreVector& sv, double phi) {
  MatchOutcome out;
  out.stats = score_stats(sv);
  if (out.stats.sigma > 0.0 && out.stats.eccentricity() >= phi) {
    out.kind = MatchKind::kBestGuess;
    out.best_guess = out.stats.argmax;
  }
  if (out.stats.sigma > 0.0 && !sv.candidates().empty()) {
    out.lineup = lineup_distribution(sv, out.stats.sigma);
  }
  return out;
}

inline ScoreVector apply_size_filter(ScoreVector sv, const Dataset& ds, const AuxInfo& aux,
                                     const AlgoParams& params) {
  if (params.record_size_error && aux.claimed_record_size) {
    return record_size_filter(sv, ds, *aux.claimed_record_size, *params.record_size_error);
  }
  return sv;
}

// Weighted scoring with the eccentricity test (generic or case-study scorer).
inline MatchOutcome match_1b(const Dataset& ds, const AuxInfo& aux, const AlgoParams& params,
                             ScorerKind scorer = ScorerKind::kNetflix) {
  params.validate();
  if (ds.size() < 2) throw DomainError("matching needs at least 2 records");
  return select_best_guess(apply_size_filter(score_all(ds, aux, scorer, params), ds, aux, params),
                           params.phi);
}

// Entropic variant: always returns the lineup (kind kLineup) unless sigma = 0.
inline MatchOutcome lineup_1b(const Dataset& ds, const AuxInfo& aux, const AlgoParams& params,
                              ScorerKind scorer = ScorerKind::kNetflix) {
  MatchOutcome out = match_1b(ds, aux, params, scorer);
  if (!out.lineup.empty()) out.kind = MatchKind::kLineup;
  return out;
}

// Records whose min-similarity score exceeds alpha, in id order. Empty means
// "not in the release".
inline std::vector<RecordId> matching_set_1a(const ScoreVector& sv, double alpha) {
  std::vector<RecordId> out;
  if (alpha < 0.0) {
    // Implicit zeros clear a negative threshold too.
    for (std::size_t r = 0; r < sv.n_records(); ++r) {
      if (sv.score(RecordId{r}) > alpha) out.push_back(RecordId{r});
    }
    return out;
  }
  for (const auto& [r, s] : sv.candidates()) {
    if (s > alpha) out.push_back(r);
  }
  return out;
}

inline std::vector<RecordId> match_1a(const Dataset& ds, const AuxInfo& aux,
                                      const AlgoParams& params) {
  ScoreVector sv = apply_size_filter(score_all(ds, aux, ScorerKind::kMinSim, params), ds, aux,
                                     params);
  return matching_set_1a(sv, params.alpha);
}

// Min-similarity attack as an outcome: no-match on an empty matching set, a
// best guess when it is a singleton, a uniform lineup otherwise.
inline MatchOutcome attack_1a(const Dataset& ds, const AuxInfo& aux, const AlgoParams& params) {
  MatchOutcome out;
  ScoreVector sv = apply_size_filter(score_all(ds, aux, ScorerKind::kMinSim, params), ds, aux,
                                     params);
  out.matching_set = matching_set_1a(sv, params.alpha);
  if (ds.size() >= 2) out.stats = score_stats(sv);
  if (out.matching_set.empty()) return out;
  out.lineup = Distribution::uniform(out.matching_set);
  if (out.matching_set.size() == 1) {
    out.kind = MatchKind::kBestGuess;
    out.best_guess = out.matching_set.front();
  } else {
    out.kind = MatchKind::kLineup;
  }
  return out;
}

}  // namespace deanon

#endif  // DEANON_MATCH_HPP
