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
// Trial harness: released-sample construction, attack sweeps over aux
// configurations, equal-error-rate calibration, and empirical checks of the
// aux-size guarantees.
//
// Each trial draws from its own stream keyed by (master_seed, stream, grid
// point, trial index) and writes only its own slot, so results do not depend
// on the number of worker threads.
#ifndef DEANON_EXPERIMENTS_HPP
#define DEANON_EXPERIMENTS_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "deanon/aux.hpp"
#include "deanon/bounds.hpp"
#include "deanon/common.hpp"
#include "deanon/entropy.hpp"
#include "deanon/ingest.hpp"
#include "deanon/keyvalue.hpp"
#include "deanon/match.hpp"
#include "deanon/model.hpp"
#include "deanon/parallel.hpp"
#include "deanon/rng.hpp"
#include "deanon/synth.hpp"

namespace deanon {

// How the released sample is derived from the full dataset.
struct PerturbSpec {
  double sample_fraction = 1.0;  // 1 / lambda
  double rating_flip_prob = 0.0;
  int date_jitter_days = 0;
  double cell_delete_prob = 0.0;

  void validate() const {
    if (!(sample_fraction > 0.0 && sample_fraction <= 1.0)) {
      throw DomainError("sample_fraction must be in (0, 1]");
    }
    for (double p : {rating_flip_prob, cell_delete_prob}) {
      if (!(p >= 0.0 && p <= 1.0)) throw DomainError("probabilities must be in [0, 1]");
    }
    if (date_jitter_days < 0) throw DomainError("date_jitter_days must be >= 0");
  }
};

// Released sample plus the original id of each released record.
struct SampledDataset {
  Dataset dataset;
  std::vector<RecordId> origin;  // sample id -> original id

  // Original id -> sample id, if released.
  std::vector<std::optional<RecordId>> positions(std::size_t n_original) const {
    std::vector<std::optional<RecordId>> pos(n_original);
    for (std::size_t i = 0; i < origin.size(); ++i) pos[origin[i].index()] = RecordId{i};
    return pos;
  }
};

namespace detail {
inline constexpr std::uint64_t kSampleStream = 0x5A3B;
inline constexpr std::uint64_t kTrialStream = 0x7E1A;
inline constexpr std::uint64_t kCalibrationStream = 0xCA1B;
inline constexpr std::uint64_t kTheoremStream = 0x7EE0;
}  // namespace detail

// Record-level Bernoulli(sample_fraction) sampling, then per-cell rating
// resampling, uniform date jitter and deletion. Records left without cells
// are not released.
inline SampledDataset sample_and_perturb(const Dataset& ds, const PerturbSpec& spec,
                                         std::uint64_t seed) {
  spec.validate();
  std::vector<Record> records;
  std::vector<RecordId> origin;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    Rng rng(derive_seed(seed, detail::kSampleStream, r));
    if (!rng.bernoulli(spec.sample_fraction)) continue;
    const Record& src = ds.record(RecordId{r});
    const bool untouched = spec.rating_flip_prob == 0.0 && spec.date_jitter_days == 0 &&
                           spec.cell_delete_prob == 0.0;
    if (untouched) {
      records.push_back(src);
      origin.push_back(RecordId{r});
      continue;
    }
    std::vector<Record::Entry> entries;
    for (const auto& e : src.entries()) {
      if (rng.bernoulli(spec.cell_delete_prob)) continue;
      std::optional<int> rating = e.cell.rating();
      if (rating && rng.bernoulli(spec.rating_flip_prob)) {
        rating = static_cast<int>(rng.between(1, ds.rating_scale()));
      }
      std::optional<int> date = e.cell.date();
      if (date && spec.date_jitter_days > 0) {
        date = std::clamp(*date + static_cast<int>(rng.between(-spec.date_jitter_days,
                                                               spec.date_jitter_days)),
                          kMinDay, kMaxDay);
      }
      entries.push_back({e.attribute, Cell{rating, date}});
    }
    if (entries.empty()) continue;
    records.emplace_back(std::move(entries));
    origin.push_back(RecordId{r});
  }
  if (records.empty()) throw DomainError("released sample is empty");
  return {Dataset(std::move(records), ds.n_attributes(), ds.rating_scale()), std::move(origin)};
}

// Copy of the dataset without one record; later ids shift down by one.
// TODO: score against an exclusion mask instead of rebuilding the index for
// every removal trial; the rebuild dominates on corpus-scale releases.
inline Dataset without_record(const Dataset& ds, RecordId removed) {
  std::vector<Record> records;
  records.reserve(ds.size() - 1);
  for (std::size_t r = 0; r < ds.size(); ++r) {
    if (r != removed.index()) records.push_back(ds.record(RecordId{r}));
  }
  return Dataset(std::move(records), ds.n_attributes(), ds.rating_scale());
}

struct EntropyByRank {
  std::size_t rank = 0;
  AttributeId attribute;
  std::size_t support = 0;
  double bits = 0.0;
};

// Information gained from learning that the target has attribute i:
// log2 N - log2 |supp(i)|, against popularity rank. Unsupported attributes
// are omitted.
inline std::vector<EntropyByRank> entropy_by_rank(const Dataset& ds) {
  std::vector<EntropyByRank> out;
  const double h0 = std::log2(static_cast<double>(ds.size()));
  for (const auto& r : rank_attributes(ds)) {
    if (r.support == 0) continue;
    out.push_back({r.rank, r.attribute, r.support,
                   h0 - std::log2(static_cast<double>(r.support))});
  }
  return out;
}

struct FileSource {
  std::string path;
  std::string format = "canonical";  // or "blocks"
};

struct ExperimentSpec {
  std::variant<SynthSpec, FileSource> source = SynthSpec{};
  AuxSpec aux;                              // base; m_total / wrong come from the grid
  std::vector<std::size_t> m_total_grid{8};
  std::vector<std::size_t> wrong_grid{0};   // one value, or one per m_total
  std::optional<double> wrong_fraction;     // overrides wrong_grid: floor(m * f)
  ScorerKind algorithm = ScorerKind::kNetflix;
  AlgoParams params;
  std::size_t trials = 500;
  PerturbSpec perturb;
  bool removal_test = false;
  bool calibrate_phi = false;
  std::vector<double> phi_grid;  // empty: 0.05, 0.10, ..., 8.00
  std::size_t calibration_trials = 0;  // 0: same as trials
  std::uint64_t master_seed = 1;

  std::vector<AuxSpec> grid() const {
    if (m_total_grid.empty()) throw DomainError("m_total grid is empty");
    if (!wrong_fraction && wrong_grid.size() != 1 && wrong_grid.size() != m_total_grid.size()) {
      throw DomainError("wrong_entries must have one value or one per m_total");
    }
    std::vector<AuxSpec> out;
    for (std::size_t g = 0; g < m_total_grid.size(); ++g) {
      AuxSpec a = aux;
      a.m_total = m_total_grid[g];
      if (wrong_fraction) {
        a.wrong_entry_count = static_cast<std::size_t>(
            std::floor(static_cast<double>(a.m_total) * *wrong_fraction + 1e-9));
      } else {
        a.wrong_entry_count = wrong_grid.size() == 1 ? wrong_grid[0] : wrong_grid[g];
      }
      a.validate();
      out.push_back(a);
    }
    return out;
  }

  std::vector<double> phis() const {
    if (!phi_grid.empty()) return phi_grid;
    std::vector<double> out;
    for (int i = 1; i <= 160; ++i) out.push_back(0.05 * i);
    return out;
  }

  void validate() const {
    if (trials < 1) throw DomainError("trials must be >= 1");
    perturb.validate();
    params.validate();
    if (calibrate_phi && (algorithm == ScorerKind::kMinSim || !removal_test)) {
      throw DomainError("phi calibration needs a weighted algorithm and removal_test");
    }
    (void)grid();
  }

  // Keys (all optional):
  //   dataset = path | synthetic      format = canonical | blocks
  //   synthetic keys as for SynthSpec (n_records, zipf_exponent, ...)
  //   algorithm = 1a | 1b | netflix   trials, seed
  //   m_total = 2,4,6,8               wrong_entries = 0,1,1,2 | wrong_fraction
  //   selection = support | outside_top   rank_cutoff
  //   rating_noise, date_noise (days | none), record_size_error
  //   alpha, phi, rho0, d0, rating_threshold, date_threshold (days | none)
  //   sample_fraction, rating_flip_prob, date_jitter_days, cell_delete_prob
  //   removal_test, calibrate_phi, phi_grid, calibration_trials
  static ExperimentSpec from_config(const KeyValueConfig& cfg) {
    ExperimentSpec s;
    const auto source = cfg.get<std::string>("dataset", "synthetic");
    if (source == "synthetic") {
      s.source = SynthSpec::from_config(cfg);
    } else {
      s.source = FileSource{source, cfg.get<std::string>("format", "canonical")};
    }
    auto days_or_none = [&](const char* key, std::optional<int> fallback) -> std::optional<int> {
      if (!cfg.has(key)) return fallback;
      const auto text = cfg.get<std::string>(key, "");
      if (text == "none" || text == "inf") return std::nullopt;
      KeyValueConfig one;
      one.set(key, text);
      return one.get<int>(key, 0);
    };
    const auto algo = cfg.get<std::string>("algorithm", "netflix");
    const auto kind = parse_scorer(algo);
    if (!kind) throw ParseError(0, "unknown algorithm '" + algo + "'");
    s.algorithm = *kind;
    s.trials = cfg.get<std::size_t>("trials", s.trials);
    s.master_seed = cfg.get<std::uint64_t>("seed", s.master_seed);
    s.m_total_grid = cfg.get_list<std::size_t>("m_total", s.m_total_grid);
    s.wrong_grid = cfg.get_list<std::size_t>("wrong_entries", s.wrong_grid);
    if (cfg.has("wrong_fraction")) s.wrong_fraction = cfg.get<double>("wrong_fraction", 0.0);
    const auto selection = cfg.get<std::string>("selection", "support");
    if (selection == "support") {
      s.aux.selection = AuxSelection::kUniformOverSupport;
    } else if (selection == "outside_top") {
      s.aux.selection = AuxSelection::kOutsideTopRanks;
    } else {
      throw ParseError(0, "unknown selection '" + selection + "'");
    }
    s.aux.rank_cutoff = cfg.get<std::size_t>("rank_cutoff", 0);
    s.aux.rating_noise = cfg.get<int>("rating_noise", 0);
    s.aux.date_noise = days_or_none("date_noise", 14);
    if (cfg.has("record_size_error")) {
      s.aux.record_size_error = cfg.get<double>("record_size_error", 0.0);
      s.params.record_size_error = s.aux.record_size_error;
    }
    s.params.alpha = cfg.get<double>("alpha", s.params.alpha);
    s.params.phi = cfg.get<double>("phi", s.params.phi);
    s.params.rho0 = cfg.get<double>("rho0", s.params.rho0);
    s.params.d0 = cfg.get<double>("d0", s.params.d0);
    s.params.sim_config.rating_threshold =
        cfg.get<int>("rating_threshold", s.params.sim_config.rating_threshold);
    s.params.sim_config.date_threshold =
        days_or_none("date_threshold", s.params.sim_config.date_threshold);
    s.perturb.sample_fraction = cfg.get<double>("sample_fraction", 1.0);
    s.perturb.rating_flip_prob = cfg.get<double>("rating_flip_prob", 0.0);
    s.perturb.date_jitter_days = cfg.get<int>("date_jitter_days", 0);
    s.perturb.cell_delete_prob = cfg.get<double>("cell_delete_prob", 0.0);
    s.removal_test = cfg.get<bool>("removal_test", false);
    s.calibrate_phi = cfg.get<bool>("calibrate_phi", false);
    s.phi_grid = cfg.get_list<double>("phi_grid", {});
    s.calibration_trials = cfg.get<std::size_t>("calibration_trials", 0);
    cfg.check_all_used();
    s.validate();
    return s;
  }
};

// Raw per-trial observations; every metric is a function of these and phi.
struct TrialObservation {
  // Attack on the release containing the target.
  bool present_sigma_positive = false;
  double present_eccentricity = 0.0;
  bool present_argmax_is_target = false;
  bool present_1a_unique = false;  // matching set == {target}
  double present_matching_set = 0.0;
  double entropy_bits = 0.0;
  // Same aux against the release without the target.
  bool absent_sigma_positive = false;
  double absent_eccentricity = 0.0;
  bool absent_1a_nonempty = false;
};

struct Summary5 {
  double mean = 0.0;
  double p10 = 0.0;
  double p50 = 0.0;
  double p90 = 0.0;
};

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline Summary5 summarize(std::vector<double> values) {
  Summary5 s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  std::sort(values.begin(), values.end());
  s.p10 = quantile_sorted(values, 0.1);
  s.p50 = quantile_sorted(values, 0.5);
  s.p90 = quantile_sorted(values, 0.9);
  return s;
}

struct ErrorRates {
  double success_rate = 0.0;
  double false_negative_rate = 0.0;
  std::optional<double> false_positive_rate;
  double mean_matching_set_size = 0.0;
};

// Rates at eccentricity threshold phi. A present-arm trial succeeds when the
// attack names the target; any other outcome (no match or a wrong record)
// is a false negative. A removal-arm trial that names any record is a false
// positive.
inline ErrorRates error_rates(const std::vector<TrialObservation>& trials, ScorerKind algorithm,
                              double phi, bool removal_test) {
  ErrorRates r;
  std::size_t hits = 0;
  std::size_t false_pos = 0;
  double set_size = 0.0;
  for (const auto& t : trials) {
    if (algorithm == ScorerKind::kMinSim) {
      hits += t.present_1a_unique;
      false_pos += t.absent_1a_nonempty;
      set_size += t.present_matching_set;
    } else {
      const bool match = t.present_sigma_positive && t.present_eccentricity >= phi;
      hits += match && t.present_argmax_is_target;
      set_size += match ? 1.0 : 0.0;
      false_pos += t.absent_sigma_positive && t.absent_eccentricity >= phi;
    }
  }
  const auto n = static_cast<double>(trials.size());
  r.success_rate = static_cast<double>(hits) / n;
  r.false_negative_rate = 1.0 - r.success_rate;
  if (removal_test) r.false_positive_rate = static_cast<double>(false_pos) / n;
  r.mean_matching_set_size = set_size / n;
  return r;
}

// Equal-error-rate phi: minimizes |FPR - FNR|, then max(FPR, FNR), then phi.
inline double calibrate_phi(const std::vector<TrialObservation>& trials, ScorerKind algorithm,
                            const std::vector<double>& grid) {
  double best_phi = grid.at(0);
  double best_gap = std::numeric_limits<double>::infinity();
  double best_worst = std::numeric_limits<double>::infinity();
  for (double phi : grid) {
    const auto r = error_rates(trials, algorithm, phi, true);
    const double gap = std::abs(*r.false_positive_rate - r.false_negative_rate);
    const double worst = std::max(*r.false_positive_rate, r.false_negative_rate);
    if (gap < best_gap || (gap == best_gap && worst < best_worst)) {
      best_gap = gap;
      best_worst = worst;
      best_phi = phi;
    }
  }
  return best_phi;
}

struct GridPointResult {
  AuxSpec aux;
  std::size_t trials = 0;
  std::size_t eligible_targets = 0;
  double phi = 0.0;
  ErrorRates rates;
  double mean_entropy_bits = 0.0;
  Summary5 present_eccentricity;
  Summary5 absent_eccentricity;
};

struct ExperimentResult {
  std::size_t original_records = 0;
  std::size_t released_records = 0;
  ScorerKind algorithm = ScorerKind::kNetflix;
  std::vector<GridPointResult> points;
  double seconds = 0.0;
};

namespace detail {

inline std::size_t eligible_count(const Record& r, const AuxSpec& aux,
                                  const std::vector<std::size_t>& rank_of) {
  if (aux.selection == AuxSelection::kUniformOverSupport) return r.support_size();
  std::size_t n = 0;
  for (const auto& e : r.entries()) n += rank_of[e.attribute.index()] > aux.rank_cutoff;
  return n;
}

inline TrialObservation run_trial(const SampledDataset& release,
                                  const AuxSampler& sampler, const std::vector<RecordId>& eligible,
                                  const ExperimentSpec& spec, const AuxSpec& aux_base,
                                  std::uint64_t trial_seed) {
  Rng rng(trial_seed);
  const RecordId target{eligible[rng.below(eligible.size())]};
  AuxSpec aux_spec = aux_base;
  aux_spec.seed = rng();
  const AuxInfo aux = sampler.sample(release.origin[target.index()], aux_spec).aux;
  const Dataset& ds = release.dataset;

  TrialObservation t;
  if (spec.algorithm == ScorerKind::kMinSim) {
    const MatchOutcome out = attack_1a(ds, aux, spec.params);
    t.present_1a_unique = out.matching_set.size() == 1 && out.matching_set[0] == target;
    t.present_matching_set = static_cast<double>(out.matching_set.size());
    t.entropy_bits = entropy_of_target(out.lineup, target, ds.size());
  } else {
    const MatchOutcome out = match_1b(ds, aux, spec.params, spec.algorithm);
    t.present_sigma_positive = out.stats.sigma > 0.0;
    t.present_eccentricity = out.stats.eccentricity();
    t.present_argmax_is_target = out.stats.argmax == target;
    t.entropy_bits = entropy_of_target(out.lineup, target, ds.size());
  }
  if (spec.removal_test) {
    const Dataset reduced = without_record(ds, target);
    if (spec.algorithm == ScorerKind::kMinSim) {
      t.absent_1a_nonempty = !match_1a(reduced, aux, spec.params).empty();
    } else if (reduced.size() >= 2) {
      const MatchOutcome out = match_1b(reduced, aux, spec.params, spec.algorithm);
      t.absent_sigma_positive = out.stats.sigma > 0.0;
      t.absent_eccentricity = out.stats.eccentricity();
    }
  }
  return t;
}

}  // namespace detail

inline Ingested load_file_source(const FileSource& src, const ParseOptions& opts = {}) {
  std::ifstream in(src.path);
  if (!in) throw IoError("cannot open " + src.path);
  if (src.format == "canonical") return parse_canonical(in, opts);
  if (src.format == "blocks") return parse_movie_per_file(in, opts);
  throw DomainError("unknown format '" + src.format + "'");
}

// Runs the sweep against an already loaded full dataset.
inline ExperimentResult run(const ExperimentSpec& spec, const Dataset& original,
                            unsigned threads = 1) {
  spec.validate();
  const auto start = std::chrono::steady_clock::now();
  const SampledDataset release = sample_and_perturb(original, spec.perturb, spec.master_seed);
  const AuxSampler sampler(original);
  const auto rank_of = rank_lookup(rank_attributes(original));

  ExperimentResult result;
  result.original_records = original.size();
  result.released_records = release.dataset.size();
  result.algorithm = spec.algorithm;
  if (release.dataset.size() < 2) throw DomainError("release needs at least 2 records");

  const auto grid = spec.grid();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const AuxSpec& aux = grid[g];
    std::vector<RecordId> eligible;
    for (std::size_t i = 0; i < release.origin.size(); ++i) {
      if (detail::eligible_count(original.record(release.origin[i]), aux, rank_of) >=
          aux.m_total) {
        eligible.push_back(RecordId{i});
      }
    }
    if (eligible.empty()) {
      throw DomainError("no released record can supply " + std::to_string(aux.m_total) +
                        " aux entries");
    }

    auto run_arm = [&](std::uint64_t stream, std::size_t n) {
      std::vector<TrialObservation> obs(n);
      parallel_for(n, threads, [&](std::size_t i) {
        obs[i] = detail::run_trial(release, sampler, eligible, spec, aux,
                                   derive_seed(spec.master_seed, stream, g, i));
      });
      return obs;
    };

    GridPointResult point;
    point.aux = aux;
    point.trials = spec.trials;
    point.eligible_targets = eligible.size();
    point.phi = spec.params.phi;
    if (spec.calibrate_phi) {
      const std::size_t n_cal = spec.calibration_trials ? spec.calibration_trials : spec.trials;
      point.phi = calibrate_phi(run_arm(detail::kCalibrationStream, n_cal), spec.algorithm,
                                spec.phis());
    }
    const auto obs = run_arm(detail::kTrialStream, spec.trials);
    point.rates = error_rates(obs, spec.algorithm, point.phi, spec.removal_test);
    std::vector<double> present_ecc;
    std::vector<double> absent_ecc;
    double entropy = 0.0;
    for (const auto& t : obs) {
      entropy += t.entropy_bits;
      if (spec.algorithm != ScorerKind::kMinSim) {
        present_ecc.push_back(t.present_eccentricity);
        if (spec.removal_test) absent_ecc.push_back(t.absent_eccentricity);
      }
    }
    point.mean_entropy_bits = entropy / static_cast<double>(obs.size());
    point.present_eccentricity = summarize(std::move(present_ecc));
    point.absent_eccentricity = summarize(std::move(absent_ecc));
    result.points.push_back(point);
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

// Loads or generates the source dataset, then runs the sweep.
inline ExperimentResult run(const ExperimentSpec& spec, unsigned threads = 1) {
  if (const auto* synth = std::get_if<SynthSpec>(&spec.source)) {
    return run(spec, generate(*synth, threads), threads);
  }
  return run(spec, load_file_source(std::get<FileSource>(spec.source)).dataset, threads);
}

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// Tidy CSV: grid_point,m_total,wrong_entries,metric,value. Wall-clock data
// is kept out so the file is reproducible byte for byte.
inline void write_results_csv(std::ostream& out, const ExperimentResult& result) {
  out << "grid_point,m_total,wrong_entries,metric,value\n";
  for (std::size_t g = 0; g < result.points.size(); ++g) {
    const auto& p = result.points[g];
    auto row = [&](const char* metric, double value) {
      out << g << ',' << p.aux.m_total << ',' << p.aux.wrong_entry_count << ',' << metric << ','
          << format_number(value) << '\n';
    };
    row("trials", static_cast<double>(p.trials));
    row("eligible_targets", static_cast<double>(p.eligible_targets));
    row("released_records", static_cast<double>(result.released_records));
    if (result.algorithm != ScorerKind::kMinSim) row("phi", p.phi);
    row("success_rate", p.rates.success_rate);
    row("false_negative_rate", p.rates.false_negative_rate);
    if (p.rates.false_positive_rate) row("false_positive_rate", *p.rates.false_positive_rate);
    row("mean_entropy_bits", p.mean_entropy_bits);
    row("mean_matching_set_size", p.rates.mean_matching_set_size);
    if (result.algorithm != ScorerKind::kMinSim) {
      row("eccentricity_mean", p.present_eccentricity.mean);
      row("eccentricity_p10", p.present_eccentricity.p10);
      row("eccentricity_p50", p.present_eccentricity.p50);
      row("eccentricity_p90", p.present_eccentricity.p90);
      if (p.rates.false_positive_rate) {
        row("absent_eccentricity_p50", p.absent_eccentricity.p50);
        row("absent_eccentricity_p90", p.absent_eccentricity.p90);
      }
    }
  }
  if (!out) throw IoError("write error");
}

inline void write_summary(std::ostream& out, const ExperimentResult& result) {
  nlohmann::ordered_json j;
  j["algorithm"] = std::string(to_string(result.algorithm));
  j["original_records"] = result.original_records;
  j["released_records"] = result.released_records;
  j["seconds"] = result.seconds;
  auto& points = j["grid"] = nlohmann::ordered_json::array();
  for (const auto& p : result.points) {
    nlohmann::ordered_json o;
    o["m_total"] = p.aux.m_total;
    o["wrong_entries"] = p.aux.wrong_entry_count;
    o["trials"] = p.trials;
    o["phi"] = p.phi;
    o["success_rate"] = p.rates.success_rate;
    o["false_negative_rate"] = p.rates.false_negative_rate;
    if (p.rates.false_positive_rate) o["false_positive_rate"] = *p.rates.false_positive_rate;
    o["mean_entropy_bits"] = p.mean_entropy_bits;
    o["mean_matching_set_size"] = p.rates.mean_matching_set_size;
    points.push_back(o);
  }
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write error");
}

// ---------------------------------------------------------------------------
// Empirical checks of the aux-size guarantees.

struct TheoremCheck {
  enum class Status { kPass, kFail, kSkip };

  int theorem = 0;
  Status status = Status::kSkip;
  std::vector<std::pair<std::string, double>> metrics;
  std::string message;

  bool passed() const { return status == Status::kPass; }
  double metric(const std::string& name) const {
    for (const auto& [k, v] : metrics) {
      if (k == name) return v;
    }
    throw DomainError("no metric '" + name + "'");
  }
};

inline std::string_view to_string(TheoremCheck::Status s) {
  switch (s) {
    case TheoremCheck::Status::kPass: return "pass";
    case TheoremCheck::Status::kFail: return "fail";
    case TheoremCheck::Status::kSkip: return "skip";
  }
  return "?";
}

struct TheoremParams {
  int theorem = 1;
  std::size_t trials = 500;
  SynthSpec synth;
  double eps = 0.1;
  double delta = 0.2;
  std::size_t k = 8;            // lineup size for the lineup bound
  double sample_fraction = 0.125;  // 1 / lambda for the sampling checks
  double gamma = 0.5;           // confidence slack of the sample-sparsity check
  // Attribute similarity: exact rating match, dates ignored.
  SimConfig sim{0, std::nullopt};
};

// Binomial standard error at success probability p.
inline double binomial_se(double p, std::size_t n) {
  return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

namespace detail {

struct MatchTrial {
  RecordId target;
  std::vector<RecordId> matching;
};

// Zero-noise, date-free aux of size m against the min-similarity matcher
// with alpha = 1 - eps.
inline std::vector<MatchTrial> min_sim_trials(const Dataset& ds, const TheoremParams& p,
                                              std::size_t m, const std::vector<RecordId>& eligible,
                                              unsigned threads, std::uint64_t stream) {
  AuxSpec aux;
  aux.m_total = m;
  aux.rating_noise = 0;
  aux.date_noise = std::nullopt;
  AlgoParams params;
  params.alpha = 1.0 - p.eps;
  params.sim_config = p.sim;
  const AuxSampler sampler(ds);
  std::vector<MatchTrial> out(p.trials);
  parallel_for(p.trials, threads, [&](std::size_t i) {
    Rng rng(derive_seed(p.synth.master_seed, kTheoremStream, stream, i));
    MatchTrial t;
    t.target = eligible[rng.below(eligible.size())];
    AuxSpec a = aux;
    a.seed = rng();
    t.matching = match_1a(ds, sampler.sample(t.target, a).aux, params);
    out[i] = std::move(t);
  });
  return out;
}

inline std::vector<RecordId> records_with_support(const Dataset& ds, std::size_t m) {
  std::vector<RecordId> out;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    if (ds.record(RecordId{r}).support_size() >= m) out.push_back(RecordId{r});
  }
  return out;
}

}  // namespace detail

// Runs the empirical check for theorem 1..5:
//   1  every matching-set member is (1-eps-delta)-similar to the target in
//      >= 1-eps of trials, with m = required_aux_size(N, eps, delta);
//   2  on a (1-eps-delta, eps)-sparse dataset the matching set is {target}
//      in >= 1-eps of trials;
//   3  with the lineup aux size, E[1/|set|] >= 1/k and E[log2 |set|] <= log2 k;
//   4  against a 1/lambda release, present targets are matched to similar
//      records and absent targets yield "no match", each in >= 1-eps of trials;
//   5  a dataset that is not (eps, delta)-sparse yields samples that are not
//      (eps, delta*gamma/lambda)-sparse in >= 1-gamma of trials.
// Every bound is relaxed by 3 binomial standard errors at the bound.
inline TheoremCheck validate_theorem(const TheoremParams& p, unsigned threads = 1) {
  if (p.trials < 1) throw DomainError("trials must be >= 1");
  TheoremCheck check;
  check.theorem = p.theorem;
  auto finish = [&](bool ok) {
    check.status = ok ? TheoremCheck::Status::kPass : TheoremCheck::Status::kFail;
    return check;
  };
  auto skip = [&](std::string why) {
    check.status = TheoremCheck::Status::kSkip;
    check.message = std::move(why);
    return check;
  };

  const Dataset ds = generate(p.synth, threads);
  const double n_trials = static_cast<double>(p.trials);
  const double theta = 1.0 - p.eps - p.delta;

  auto sparsity_precondition = [&](double* measured) {
    const auto profile = sparsity_profile(ds, p.sim, threads);
    *measured = profile.delta(theta);
    return profile.is_sparse(theta, p.eps);
  };

  switch (p.theorem) {
    case 1:
    case 2: {
      const std::size_t m = required_aux_size(ds.size(), p.eps, p.delta);
      check.metrics.emplace_back("m", static_cast<double>(m));
      if (p.theorem == 2) {
        double measured = 0.0;
        const bool sparse = sparsity_precondition(&measured);
        check.metrics.emplace_back("sparsity_delta", measured);
        if (!sparse) return skip("dataset is not (1-eps-delta, eps)-sparse");
      }
      const auto eligible = detail::records_with_support(ds, m);
      if (eligible.empty()) return skip("no record has support >= m");
      const auto trials = detail::min_sim_trials(ds, p, m, eligible, threads, p.theorem);
      std::size_t ok = 0;
      for (const auto& t : trials) {
        if (p.theorem == 1) {
          const Record& target = ds.record(t.target);
          ok += std::all_of(t.matching.begin(), t.matching.end(), [&](RecordId r) {
            return sim_record(target, ds.record(r), p.sim) >= theta;
          });
        } else {
          ok += t.matching.size() == 1 && t.matching[0] == t.target;
        }
      }
      const double rate = static_cast<double>(ok) / n_trials;
      const double bound = 1.0 - p.eps - 3.0 * binomial_se(1.0 - p.eps, p.trials);
      check.metrics.emplace_back("success_rate", rate);
      check.metrics.emplace_back("bound", bound);
      return finish(rate >= bound);
    }
    case 3: {
      const std::size_t m = required_aux_size_lineup(ds.size(), p.k, p.delta);
      check.metrics.emplace_back("m", static_cast<double>(m));
      double measured = 0.0;
      const bool sparse = sparsity_precondition(&measured);
      check.metrics.emplace_back("sparsity_delta", measured);
      if (!sparse) return skip("dataset is not (1-eps-delta, eps)-sparse");
      const auto eligible = detail::records_with_support(ds, std::max<std::size_t>(m, 1));
      if (eligible.empty()) return skip("no record has support >= m");
      const auto trials = detail::min_sim_trials(ds, p, std::max<std::size_t>(m, 1), eligible,
                                                 threads, 3);
      std::vector<double> inv;
      std::vector<double> logs;
      for (const auto& t : trials) {
        const auto size = static_cast<double>(std::max<std::size_t>(t.matching.size(), 1));
        inv.push_back(1.0 / size);
        logs.push_back(std::log2(size));
      }
      auto mean_se = [&](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
        return std::pair{mean, sd / std::sqrt(static_cast<double>(v.size()))};
      };
      const auto [mean_inv, se_inv] = mean_se(inv);
      const auto [mean_log, se_log] = mean_se(logs);
      const double k = static_cast<double>(p.k);
      check.metrics.emplace_back("mean_inverse_set_size", mean_inv);
      check.metrics.emplace_back("mean_log2_set_size", mean_log);
      check.metrics.emplace_back("inverse_bound", 1.0 / k - 3.0 * se_inv);
      check.metrics.emplace_back("log_bound", std::log2(k) + 3.0 * se_log);
      return finish(mean_inv >= 1.0 / k - 3.0 * se_inv && mean_log <= std::log2(k) + 3.0 * se_log);
    }
    case 4: {
      const std::size_t m = required_aux_size(ds.size(), p.eps, p.delta);
      check.metrics.emplace_back("m", static_cast<double>(m));
      PerturbSpec perturb;
      perturb.sample_fraction = p.sample_fraction;
      const SampledDataset release = sample_and_perturb(ds, perturb, p.synth.master_seed);
      const auto pos = release.positions(ds.size());
      std::vector<RecordId> present;
      std::vector<RecordId> absent;
      for (RecordId r : detail::records_with_support(ds, m)) {
        (pos[r.index()] ? present : absent).push_back(r);
      }
      if (present.empty() || absent.empty()) return skip("release has no eligible present/absent targets");
      AlgoParams params;
      params.alpha = 1.0 - p.eps;
      params.sim_config = p.sim;
      AuxSpec aux;
      aux.m_total = m;
      aux.date_noise = std::nullopt;
      const AuxSampler sampler(ds);
      std::vector<char> present_ok(p.trials);
      std::vector<char> absent_ok(p.trials);
      parallel_for(p.trials, threads, [&](std::size_t i) {
        Rng rng(derive_seed(p.synth.master_seed, detail::kTheoremStream, 4, i));
        AuxSpec a = aux;
        const RecordId in = present[rng.below(present.size())];
        a.seed = rng();
        const auto set_in = match_1a(release.dataset, sampler.sample(in, a).aux, params);
        present_ok[i] = !set_in.empty() &&
                        std::all_of(set_in.begin(), set_in.end(), [&](RecordId r) {
                          return sim_record(ds.record(in), release.dataset.record(r), p.sim) >=
                                 theta;
                        });
        const RecordId out = absent[rng.below(absent.size())];
        a.seed = rng();
        absent_ok[i] = match_1a(release.dataset, sampler.sample(out, a).aux, params).empty();
      });
      const double rate_in =
          static_cast<double>(std::count(present_ok.begin(), present_ok.end(), 1)) / n_trials;
      const double rate_out =
          static_cast<double>(std::count(absent_ok.begin(), absent_ok.end(), 1)) / n_trials;
      const double bound = 1.0 - p.eps - 3.0 * binomial_se(1.0 - p.eps, p.trials);
      check.metrics.emplace_back("present_success_rate", rate_in);
      check.metrics.emplace_back("absent_bottom_rate", rate_out);
      check.metrics.emplace_back("bound", bound);
      return finish(rate_in >= bound && rate_out >= bound);
    }
    case 5: {
      // Make the dataset dense in the similarity sense: every record of the
      // first half gets an exact twin.
      std::vector<Record> records(ds.records().begin(), ds.records().end());
      for (std::size_t r = 0; r < ds.size() / 2; ++r) records.push_back(ds.record(RecordId{r}));
      const Dataset dense(std::move(records), ds.n_attributes(), ds.rating_scale());
      const double full_delta = sparsity_profile(dense, p.sim, threads).delta(p.eps);
      check.metrics.emplace_back("dataset_delta", full_delta);
      if (full_delta <= p.delta) return skip("dataset is (eps, delta)-sparse; nothing to check");
      const double lambda = 1.0 / p.sample_fraction;
      const double threshold = p.delta * p.gamma / lambda;
      std::vector<double> sample_delta(p.trials);
      parallel_for(p.trials, threads, [&](std::size_t i) {
        PerturbSpec perturb;
        perturb.sample_fraction = p.sample_fraction;
        const auto sample = sample_and_perturb(
            dense, perturb, derive_seed(p.synth.master_seed, detail::kTheoremStream, 5, i));
        sample_delta[i] =
            sample.dataset.size() < 2 ? 0.0 : sparsity_profile(sample.dataset, p.sim).delta(p.eps);
      });
      std::size_t not_sparse = 0;
      double mean = 0.0;
      for (double d : sample_delta) {
        not_sparse += d > threshold;
        mean += d;
      }
      const double rate = static_cast<double>(not_sparse) / n_trials;
      const double bound = 1.0 - p.gamma - 3.0 * binomial_se(1.0 - p.gamma, p.trials);
      check.metrics.emplace_back("mean_sample_delta", mean / n_trials);
      check.metrics.emplace_back("sparsity_threshold", threshold);
      check.metrics.emplace_back("not_sparse_rate", rate);
      check.metrics.emplace_back("bound", bound);
      return finish(rate >= bound);
    }
    default:
      throw DomainError("theorem must be 1..5");
  }
}

}  // namespace deanon

#endif  // DEANON_EXPERIMENTS_HPP
