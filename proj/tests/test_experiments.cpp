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
#include <gtest/gtest.h>

#include <sstream>

#include "deanon/deanon.hpp"

namespace deanon {
namespace {

SynthSpec small_spec(std::size_t n, std::uint64_t seed = 3) {
  SynthSpec s;
  s.n_records = n;
  s.n_attributes = 1500;
  s.support_mu = 3.5;
  s.master_seed = seed;
  return s;
}

std::string canonical(const Dataset& ds) {
  std::ostringstream out;
  write_canonical(out, ds, IdMaps::synthetic(ds.size(), ds.n_attributes()));
  return out.str();
}

TEST(SampleAndPerturb, IdentityWhenDisabled) {
  const Dataset ds = generate(small_spec(200));
  const SampledDataset s = sample_and_perturb(ds, PerturbSpec{}, 5);
  EXPECT_EQ(canonical(s.dataset), canonical(ds));
  for (std::size_t i = 0; i < s.origin.size(); ++i) EXPECT_EQ(s.origin[i], RecordId{i});
}

TEST(SampleAndPerturb, DeleteEverythingIsRejected) {
  PerturbSpec p;
  p.cell_delete_prob = 1.0;
  EXPECT_THROW(sample_and_perturb(generate(small_spec(50)), p, 1), DomainError);
  p.cell_delete_prob = 1.5;
  EXPECT_THROW(sample_and_perturb(generate(small_spec(50)), p, 1), DomainError);
}

TEST(SampleAndPerturb, SampleSize) {
  SynthSpec spec = small_spec(80000);
  spec.support_mu = 1.0;
  spec.support_sigma = 0.3;
  const Dataset ds = generate(spec);
  PerturbSpec p;
  p.sample_fraction = 0.125;
  const SampledDataset s = sample_and_perturb(ds, p, 8);
  EXPECT_GE(s.dataset.size(), 9000u);
  EXPECT_LE(s.dataset.size(), 11000u);
  const auto pos = s.positions(ds.size());
  for (std::size_t i = 0; i < s.origin.size(); ++i) {
    EXPECT_EQ(pos[s.origin[i].index()], RecordId{i});
    EXPECT_EQ(canonical(Dataset({s.dataset.record(RecordId{i})}, ds.n_attributes())),
              canonical(Dataset({ds.record(s.origin[i])}, ds.n_attributes())));
    if (i > 20) break;
  }
}

TEST(SampleAndPerturb, PerturbationBounds) {
  const Dataset ds = generate(small_spec(300));
  PerturbSpec p;
  p.rating_flip_prob = 0.5;
  p.date_jitter_days = 3;
  p.cell_delete_prob = 0.2;
  const SampledDataset s = sample_and_perturb(ds, p, 2);
  std::size_t kept = 0;
  std::size_t total = 0;
  std::size_t changed_rating = 0;
  for (std::size_t i = 0; i < s.dataset.size(); ++i) {
    const Record& orig = ds.record(s.origin[i]);
    for (const auto& e : s.dataset.record(RecordId{i}).entries()) {
      const Cell* truth = orig.find(e.attribute);
      ASSERT_NE(truth, nullptr);
      EXPECT_LE(std::abs(*e.cell.date() - *truth->date()), 3);
      changed_rating += e.cell.rating() != truth->rating();
      ++kept;
    }
  }
  for (const Record& r : ds.records()) total += r.support_size();
  EXPECT_NEAR(static_cast<double>(kept) / total, 0.8, 0.02);
  // Resampling uniformly keeps the old value 1/5 of the time.
  EXPECT_NEAR(static_cast<double>(changed_rating) / kept, 0.5 * 0.8, 0.03);
  // Deterministic in the seed.
  EXPECT_EQ(canonical(sample_and_perturb(ds, p, 2).dataset), canonical(s.dataset));
  EXPECT_NE(canonical(sample_and_perturb(ds, p, 3).dataset), canonical(s.dataset));
}

TEST(EntropyByRank, Examples) {
  std::vector<Record> recs;
  for (int i = 0; i < 1024; ++i) {
    std::vector<Record::Entry> e{{AttributeId{0}, Cell{1, 0}}};
    if (i < 512) e.push_back({AttributeId{1}, Cell{1, 0}});
    if (i == 7) e.push_back({AttributeId{2}, Cell{1, 0}});
    recs.emplace_back(e);
  }
  const auto rows = entropy_by_rank(Dataset(recs, 4));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].bits, 0.0);
  EXPECT_EQ(rows[1].bits, 1.0);
  EXPECT_EQ(rows[2].bits, 10.0);
  EXPECT_EQ(rows[2].rank, 3u);
}

TEST(ExperimentSpec, FromConfig) {
  std::istringstream in(
      "# sweep\nn_records = 500\nalgorithm = 1b\nm_total = 2,4,6,8\nwrong_fraction = 0.25\n"
      "date_noise = none\ndate_threshold = none\ntrials = 10\nseed = 4\n");
  const auto cfg = KeyValueConfig::parse(in);
  const ExperimentSpec s = ExperimentSpec::from_config(cfg);
  EXPECT_EQ(s.algorithm, ScorerKind::kWeighted);
  EXPECT_EQ(std::get<SynthSpec>(s.source).n_records, 500u);
  EXPECT_EQ(s.master_seed, 4u);
  EXPECT_FALSE(s.aux.date_noise);
  EXPECT_FALSE(s.params.sim_config.date_threshold);
  const auto grid = s.grid();
  ASSERT_EQ(grid.size(), 4u);
  EXPECT_EQ(grid[0].wrong_entry_count, 0u);
  EXPECT_EQ(grid[1].wrong_entry_count, 1u);
  EXPECT_EQ(grid[2].wrong_entry_count, 1u);
  EXPECT_EQ(grid[3].wrong_entry_count, 2u);
}

TEST(ExperimentSpec, Errors) {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return ExperimentSpec::from_config(KeyValueConfig::parse(in));
  };
  EXPECT_THROW(parse("trials = 0\n"), DomainError);
  EXPECT_THROW(parse("algorithm = 2c\n"), ParseError);
  EXPECT_THROW(parse("bogus = 1\n"), ParseError);
  EXPECT_THROW(parse("m_total = 2,4\nwrong_entries = 0,1,2\n"), DomainError);
  EXPECT_THROW(parse("sample_fraction = 0\n"), DomainError);
  EXPECT_THROW(parse("calibrate_phi = true\n"), DomainError);
  EXPECT_THROW(parse("algorithm = 1a\nremoval_test = true\ncalibrate_phi = true\n"), DomainError);
  EXPECT_THROW(parse("m_total = 4\nwrong_entries = 5\n"), DomainError);
}

TEST(Run, SingleTrialPlantedTarget) {
  // Exact aux against a sparse release finds the target.
  ExperimentSpec spec;
  spec.source = small_spec(300);
  spec.trials = 1;
  spec.aux.m_total = 8;
  spec.aux.date_noise = 0;
  for (ScorerKind k : {ScorerKind::kMinSim, ScorerKind::kWeighted, ScorerKind::kNetflix}) {
    spec.algorithm = k;
    const ExperimentResult r = run(spec);
    ASSERT_EQ(r.points.size(), 1u);
    EXPECT_EQ(r.points[0].rates.success_rate, 1.0);
    EXPECT_EQ(r.points[0].rates.false_negative_rate, 0.0);
  }
}

TEST(Run, RemovedTargetGivesNoMatch) {
  std::vector<Record> recs;
  for (int i = 0; i < 20; ++i) {
    recs.push_back(Record({{AttributeId{i % 5}, Cell{1 + i % 5, 100}}}));
  }
  recs.push_back(Record({{AttributeId{9}, Cell{3, 100}}}));
  const Dataset ds(recs, 10);
  const AuxInfo aux{Record({{AttributeId{9}, Cell{3, 100}}}), std::nullopt};
  EXPECT_EQ(match_1b(ds, aux, AlgoParams{}).best_guess, RecordId{20});
  const Dataset without = without_record(ds, RecordId{20});
  EXPECT_EQ(without.size(), 20u);
  EXPECT_EQ(match_1b(without, aux, AlgoParams{}).kind, MatchKind::kNoMatch);
  EXPECT_TRUE(match_1a(without, aux, AlgoParams{}).empty());
}

TEST(Run, DeterministicAcrossThreads) {
  ExperimentSpec spec;
  spec.source = small_spec(1500);
  spec.trials = 60;
  spec.m_total_grid = {2, 4};
  spec.wrong_grid = {0, 1};
  spec.aux.rating_noise = 1;
  spec.perturb.sample_fraction = 0.5;
  spec.perturb.date_jitter_days = 2;
  spec.removal_test = true;
  spec.calibrate_phi = true;
  spec.calibration_trials = 40;
  std::ostringstream a, b;
  write_results_csv(a, run(spec, 1));
  write_results_csv(b, run(spec, 8));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str().find("false_positive_rate"), std::string::npos);
}

TEST(Run, RatesAreProbabilities) {
  ExperimentSpec spec;
  spec.source = small_spec(800);
  spec.trials = 50;
  spec.m_total_grid = {1, 3};
  spec.aux.date_noise = std::nullopt;
  spec.removal_test = true;
  for (ScorerKind k : {ScorerKind::kMinSim, ScorerKind::kNetflix}) {
    spec.algorithm = k;
    for (const auto& p : run(spec).points) {
      EXPECT_GE(p.rates.success_rate, 0.0);
      EXPECT_LE(p.rates.success_rate, 1.0);
      EXPECT_NEAR(p.rates.success_rate + p.rates.false_negative_rate, 1.0, 1e-12);
      ASSERT_TRUE(p.rates.false_positive_rate);
      EXPECT_GE(*p.rates.false_positive_rate, 0.0);
      EXPECT_LE(*p.rates.false_positive_rate, 1.0);
      EXPECT_GE(p.mean_entropy_bits, 0.0);
    }
  }
}

TEST(Run, NoEligibleTargets) {
  ExperimentSpec spec;
  spec.source = small_spec(50);
  spec.trials = 5;
  spec.m_total_grid = {1000};
  EXPECT_THROW(run(spec), DomainError);
}

TEST(Calibration, EqualErrorRate) {
  // Present eccentricities 1..10, absent 0.5..5: any phi in (3.5, 4] gives
  // FNR = FPR = 0.3.
  std::vector<TrialObservation> obs;
  for (int i = 1; i <= 10; ++i) {
    TrialObservation t;
    t.present_sigma_positive = true;
    t.present_argmax_is_target = true;
    t.present_eccentricity = i;
    t.absent_sigma_positive = true;
    t.absent_eccentricity = 0.5 * i;
    obs.push_back(t);
  }
  std::vector<double> grid;
  for (int i = 1; i <= 100; ++i) grid.push_back(0.1 * i);
  const double phi = calibrate_phi(obs, ScorerKind::kNetflix, grid);
  const auto r = error_rates(obs, ScorerKind::kNetflix, phi, true);
  EXPECT_DOUBLE_EQ(r.false_negative_rate, *r.false_positive_rate);
  EXPECT_NEAR(phi, 3.6, 1e-9);
  EXPECT_DOUBLE_EQ(r.false_negative_rate, 0.3);
}

TEST(Summary, Quantiles) {
  const Summary5 s = summarize({4, 1, 3, 2, 5});
  EXPECT_EQ(s.mean, 3.0);
  EXPECT_EQ(s.p50, 3.0);
  EXPECT_DOUBLE_EQ(s.p10, 1.4);
  EXPECT_DOUBLE_EQ(s.p90, 4.6);
}

TEST(Reports, CsvAndSummaryShape) {
  ExperimentSpec spec;
  spec.source = small_spec(300);
  spec.trials = 5;
  const ExperimentResult r = run(spec);
  std::ostringstream csv;
  write_results_csv(csv, r);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "grid_point,m_total,wrong_entries,metric,value");
  EXPECT_NE(csv.str().find("0,8,0,success_rate,"), std::string::npos);
  std::ostringstream json;
  write_summary(json, r);
  const auto j = nlohmann::json::parse(json.str());
  EXPECT_EQ(j["grid"].size(), 1u);
  EXPECT_EQ(j["algorithm"], "netflix");
}

TheoremParams theorem(int which, std::size_t trials = 150) {
  TheoremParams p;
  p.theorem = which;
  p.trials = trials;
  p.synth.n_records = 1000;
  p.synth.n_attributes = 2000;
  if (which == 5) {
    p.eps = 0.5;
    p.delta = 0.5;
  }
  return p;
}

TEST(ValidateTheorem, AllPassOnDefaults) {
  for (int t = 1; t <= 5; ++t) {
    const TheoremCheck c = validate_theorem(theorem(t), 2);
    EXPECT_EQ(c.status, TheoremCheck::Status::kPass) << "theorem " << t << " " << c.message;
  }
}

TEST(ValidateTheorem, SkipsWhenPreconditionFails) {
  // Every record identical: nothing is sparse.
  TheoremParams p = theorem(2, 20);
  p.synth.n_attributes = 3;
  p.synth.support_mu = std::log(3.0);
  p.synth.support_sigma = 0.0;
  p.synth.rating_law = {1.0};
  EXPECT_EQ(validate_theorem(p).status, TheoremCheck::Status::kSkip);
  p.theorem = 3;
  EXPECT_EQ(validate_theorem(p).status, TheoremCheck::Status::kSkip);

  TheoremParams q = theorem(5, 20);
  q.delta = 0.9;
  EXPECT_EQ(validate_theorem(q).status, TheoremCheck::Status::kSkip);
  q.theorem = 6;
  EXPECT_THROW(validate_theorem(q), DomainError);
}

TEST(ValidateTheorem, MetricsExposed) {
  const TheoremCheck c = validate_theorem(theorem(1, 50));
  EXPECT_EQ(c.metric("m"), 42.0);
  EXPECT_THROW(c.metric("nope"), DomainError);
  EXPECT_EQ(binomial_se(0.9, 100), std::sqrt(0.09 / 100));
}

}  // namespace
}  // namespace deanon
