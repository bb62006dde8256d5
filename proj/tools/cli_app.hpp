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
// Command-line front end. run_cli() holds all logic so tests can drive it
// in-process; deanon.cpp only forwards argv.
//
// Exit codes: 0 match / success, 1 no match (or a failed validation),
// 2 usage or parse error, 3 I/O error.
#ifndef DEANON_TOOLS_CLI_APP_HPP
#define DEANON_TOOLS_CLI_APP_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "deanon/deanon.hpp"

namespace deanon::cli {

inline constexpr int kExitMatch = 0;
inline constexpr int kExitNoMatch = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;

namespace detail {

inline std::optional<int> days_or_none(const std::string& text, const char* flag) {
  if (text == "none" || text == "inf") return std::nullopt;
  int v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || v < 0) {
    throw DomainError(std::string(flag) + " expects a non-negative day count or 'none'");
  }
  return v;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

inline void close_out(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw IoError("write failed: " + path.string());
}

inline Ingested load_dataset(const std::string& path, const std::string& format, int rating_scale) {
  ParseOptions opts;
  opts.rating_scale = rating_scale;
  return load_file_source(FileSource{path, format}, opts);
}

// Parses several files as one stream; a parse error is reported against
// the file and line it came from.
inline Ingested load_many(const std::vector<std::string>& paths, const std::string& format,
                          int rating_scale) {
  if (paths.size() == 1) return load_dataset(paths[0], format, rating_scale);
  std::string all;
  std::vector<std::pair<std::size_t, std::string>> starts;  // first global line, path
  std::size_t lines = 0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    auto in = open_in(paths[i]);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    if (!text.empty() && text.back() != '\n') text.push_back('\n');
    if (format == "canonical" && i > 0) {
      // Later files repeat the header; keep only the first.
      const auto nl = text.find('\n');
      std::string first = text.substr(0, nl);
      if (!first.empty() && first.back() == '\r') first.pop_back();
      if (first == kCanonicalHeader) {
        text.erase(0, nl + 1);
        ++lines;
      }
    }
    starts.emplace_back(lines + 1, paths[i]);
    lines += static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
    all += text;
  }
  std::istringstream in(all);
  ParseOptions opts;
  opts.rating_scale = rating_scale;
  try {
    if (format == "canonical") return parse_canonical(in, opts);
    if (format == "blocks") return parse_movie_per_file(in, opts);
  } catch (const ParseError& e) {
    std::size_t k = 0;
    while (k + 1 < starts.size() && starts[k + 1].first <= e.line()) ++k;
    const std::size_t local = e.line() - starts[k].first + 1;
    std::string msg = e.what();
    const auto colon = msg.find(": ");
    throw ParseError(local, starts[k].second + ": " +
                                (colon == std::string::npos ? msg : msg.substr(colon + 2)));
  }
  throw DomainError("unknown format '" + format + "'");
}

inline KeyValueConfig read_config(const std::string& path) {
  auto in = open_in(path);
  return KeyValueConfig::parse(in);
}

}  // namespace detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Statistical de-anonymization of sparse micro-data"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::optional<std::uint64_t> seed;
  unsigned threads = default_threads();
  bool quiet = false;
  app.add_option("--seed", seed, "Master seed (overrides any seed in a spec file)");
  app.add_option("--threads", threads, "Worker threads (default: available cores)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--quiet", quiet, "Suppress progress messages");

  const std::vector<std::string> formats{"canonical", "blocks"};
  auto log = [&](const std::string& msg) {
    if (!quiet) err << msg << '\n';
  };

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Convert input files to canonical CSV");
  std::string in_format = "canonical";
  std::vector<std::string> in_paths;
  std::string out_path;
  int rating_scale = 5;
  ingest->add_option("--format", in_format, "Input format: canonical | blocks")
      ->check(CLI::IsMember(formats));
  ingest->add_option("--in", in_paths, "Input file(s)")->required();
  ingest->add_option("--out", out_path, "Output canonical CSV")->required();
  ingest->add_option("--rating-scale", rating_scale, "Largest valid rating")
      ->check(CLI::PositiveNumber);

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset");
  std::string spec_path;
  gen->add_option("--spec", spec_path,
                  "key=value file: n_records, n_attributes, zipf_exponent, support_mu, "
                  "support_sigma, rating_law, date_start, date_end, seed");
  gen->add_option("--out", out_path, "Output canonical CSV")->required();

  // stats
  auto* stats = app.add_subcommand(
      "stats",
      "Dataset statistics. Writes ratings_per_record.csv (support,records), "
      "attribute_ranks.csv (rank,attribute,support,entropy_bits) and "
      "popularity_marginals.csv (rank_cutoff,min_count,fraction)");
  std::string dataset_path;
  std::string out_dir;
  stats->add_option("--dataset", dataset_path, "Dataset file")->required();
  stats->add_option("--format", in_format, "canonical | blocks")->check(CLI::IsMember(formats));
  stats->add_option("--rating-scale", rating_scale, "Largest valid rating")
      ->check(CLI::PositiveNumber);
  stats->add_option("--out", out_dir, "Output directory")->required();

  // sparsity
  auto* sparsity = app.add_subcommand(
      "sparsity",
      "Nearest-neighbour similarity profile. Writes epsilon,fraction_above: the fraction of "
      "records whose nearest neighbour similarity exceeds epsilon");
  int rating_thresh = 0;
  std::string date_thresh = "14";
  sparsity->add_option("--dataset", dataset_path, "Dataset file")->required();
  sparsity->add_option("--format", in_format, "canonical | blocks")
      ->check(CLI::IsMember(formats));
  sparsity->add_option("--rating-scale", rating_scale, "Largest valid rating")
      ->check(CLI::PositiveNumber);
  sparsity->add_option("--rating-thresh", rating_thresh, "Rating threshold (0 = exact)")
      ->check(CLI::NonNegativeNumber);
  sparsity->add_option("--date-thresh", date_thresh, "Date threshold in days, or 'none'");
  sparsity->add_option("--out", out_path, "Output CSV")->required();

  // attack
  auto* attack = app.add_subcommand("attack", "Match auxiliary information against a dataset");
  std::string aux_path;
  std::string algo = "netflix";
  AlgoParams params;
  std::string attack_date_thresh = "14";
  std::optional<std::size_t> claimed_size;
  std::optional<double> size_err;
  std::size_t top_k = 10;
  attack->add_option("--dataset", dataset_path, "Dataset file")->required();
  attack->add_option("--format", in_format, "canonical | blocks")->check(CLI::IsMember(formats));
  attack->add_option("--rating-scale", rating_scale, "Largest valid rating")
      ->check(CLI::PositiveNumber);
  attack->add_option("--aux", aux_path, "Aux file (canonical rows for one record key)")
      ->required();
  attack->add_option("--algo", algo, "1a | 1b | netflix")
      ->check(CLI::IsMember({"1a", "1b", "netflix"}));
  attack->add_option("--alpha", params.alpha, "Matching threshold for 1a");
  attack->add_option("--phi", params.phi, "Eccentricity threshold for 1b / netflix");
  attack->add_option("--rho0", params.rho0, "Rating scale of the netflix score");
  attack->add_option("--d0", params.d0, "Date scale (days) of the netflix score");
  attack->add_option("--rating-thresh", params.sim_config.rating_threshold,
                     "Rating threshold of attribute similarity")
      ->check(CLI::NonNegativeNumber);
  attack->add_option("--date-thresh", attack_date_thresh,
                     "Date threshold of attribute similarity in days, or 'none'");
  attack->add_option("--claimed-size", claimed_size, "Approximate support size of the target");
  attack->add_option("--size-err", size_err, "Relative error of --claimed-size");
  attack->add_option("--top-k", top_k, "Lineup entries to report");
  attack->add_option("--out", out_path, "Write the report here instead of stdout");

  // experiment
  auto* exp = app.add_subcommand(
      "experiment",
      "Run a trial sweep. Writes results.csv (grid_point,m_total,wrong_entries,metric,value) "
      "and summary.json");
  exp->add_option("--spec", spec_path, "Experiment spec (key=value)")->required();
  exp->add_option("--out", out_dir, "Output directory")->required();

  // validate
  auto* val = app.add_subcommand("validate", "Empirically check an aux-size guarantee");
  int theorem = 1;
  std::size_t trials = 500;
  std::optional<double> eps;
  std::optional<double> delta;
  std::size_t k = 8;
  double sample_fraction = 0.125;
  double gamma = 0.5;
  val->add_option("--theorem", theorem, "1..5")->required()->check(CLI::Range(1, 5));
  val->add_option("--trials", trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
  val->add_option("--spec", spec_path, "Synthetic dataset spec (default N=1000, M=2000)");
  val->add_option("--eps", eps, "epsilon (default 0.1; 0.5 for theorem 5)");
  val->add_option("--delta", delta, "delta (default 0.2; 0.5 for theorem 5)");
  val->add_option("--k", k, "Lineup size for theorem 3")->check(CLI::Range(2, 1 << 30));
  val->add_option("--sample-fraction", sample_fraction, "Released fraction 1/lambda");
  val->add_option("--gamma", gamma, "Confidence slack for theorem 5");
  val->add_option("--out", out_path, "Write the JSON result here instead of stdout");

  std::vector<const char*> argv{"deanon"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitMatch : kExitUsage;
  }

  try {
    if (*ingest) {
      const Ingested data = detail::load_many(in_paths, in_format, rating_scale);
      auto f = detail::open_out(out_path);
      write_canonical(f, data.dataset, data.maps);
      detail::close_out(f, out_path);
      log("ingested " + std::to_string(data.dataset.size()) + " records, " +
          std::to_string(data.dataset.total_cells()) + " cells");
      return kExitMatch;
    }
    if (*gen) {
      KeyValueConfig cfg;
      if (!spec_path.empty()) cfg = detail::read_config(spec_path);
      if (seed) cfg.set("seed", std::to_string(*seed));
      const SynthSpec spec = SynthSpec::from_config(cfg);
      cfg.check_all_used();
      const Dataset ds = generate(spec, threads);
      auto f = detail::open_out(out_path);
      write_canonical(f, ds, IdMaps::synthetic(ds.size(), ds.n_attributes()));
      detail::close_out(f, out_path);
      log("generated " + std::to_string(ds.size()) + " records, " +
          std::to_string(ds.total_cells()) + " cells");
      return kExitMatch;
    }
    if (*stats) {
      const Ingested data = detail::load_dataset(dataset_path, in_format, rating_scale);
      const DatasetStats s = compute_stats(data.dataset);
      const std::filesystem::path dir(out_dir);
      {
        auto f = detail::open_out(dir / "ratings_per_record.csv");
        f << "support,records\n";
        for (const auto& [support, count] : s.ratings_per_record) f << support << ',' << count << '\n';
        detail::close_out(f, dir / "ratings_per_record.csv");
      }
      {
        auto f = detail::open_out(dir / "attribute_ranks.csv");
        f << "rank,attribute,support,entropy_bits\n";
        const auto bits = entropy_by_rank(data.dataset);
        std::size_t b = 0;
        for (const auto& r : s.attribute_ranks) {
          f << r.rank << ',' << data.maps.attribute_key(r.attribute) << ',' << r.support << ',';
          if (b < bits.size() && bits[b].rank == r.rank) {
            f << format_number(bits[b++].bits);
          }
          f << '\n';
        }
        detail::close_out(f, dir / "attribute_ranks.csv");
      }
      {
        auto f = detail::open_out(dir / "popularity_marginals.csv");
        f << "rank_cutoff,min_count,fraction\n";
        for (const auto& m : s.popularity_marginals) {
          f << m.rank_cutoff << ',' << m.min_count << ',' << format_number(m.fraction) << '\n';
        }
        detail::close_out(f, dir / "popularity_marginals.csv");
      }
      return kExitMatch;
    }
    if (*sparsity) {
      const Ingested data = detail::load_dataset(dataset_path, in_format, rating_scale);
      if (data.dataset.size() < 2) throw DomainError("sparsity needs at least 2 records");
      const SimConfig cfg{rating_thresh, detail::days_or_none(date_thresh, "--date-thresh")};
      const SparsityProfile profile = sparsity_profile(data.dataset, cfg, threads);
      auto f = detail::open_out(out_path);
      f << "epsilon,fraction_above\n";
      for (int i = 0; i <= 100; ++i) {
        const double e = i / 100.0;
        f << format_number(e) << ',' << format_number(profile.delta(e)) << '\n';
      }
      detail::close_out(f, out_path);
      return kExitMatch;
    }
    if (*attack) {
      const Ingested data = detail::load_dataset(dataset_path, in_format, rating_scale);
      ParseOptions opts;
      opts.rating_scale = rating_scale;
      auto aux_in = detail::open_in(aux_path);
      AuxInfo aux = aux_from_file(aux_in, data.maps, opts);
      if (claimed_size) aux.claimed_record_size = *claimed_size;
      if (size_err) params.record_size_error = *size_err;
      params.sim_config.date_threshold = detail::days_or_none(attack_date_thresh, "--date-thresh");
      params.validate();
      const ScorerKind kind = *parse_scorer(algo);
      MatchOutcome outcome;
      if (kind == ScorerKind::kMinSim) {
        outcome = attack_1a(data.dataset, aux, params);
      } else {
        if (data.dataset.size() < 2) throw DomainError("attack needs at least 2 records");
        outcome = match_1b(data.dataset, aux, params, kind);
      }
      const std::string report = outcome_report(outcome, data.maps, kind, top_k).dump(2) + "\n";
      if (out_path.empty()) {
        out << report;
      } else {
        auto f = detail::open_out(out_path);
        f << report;
        detail::close_out(f, out_path);
      }
      return outcome.kind == MatchKind::kNoMatch ? kExitNoMatch : kExitMatch;
    }
    if (*exp) {
      KeyValueConfig cfg = detail::read_config(spec_path);
      if (seed) cfg.set("seed", std::to_string(*seed));
      ExperimentSpec spec = ExperimentSpec::from_config(cfg);
      // A relative dataset path is taken relative to the spec file.
      if (auto* file = std::get_if<FileSource>(&spec.source)) {
        const std::filesystem::path p(file->path);
        if (p.is_relative()) {
          file->path = (std::filesystem::path(spec_path).parent_path() / p).string();
        }
      }
      log("running " + std::to_string(spec.m_total_grid.size()) + " grid point(s) x " +
          std::to_string(spec.trials) + " trials on " + std::to_string(threads) + " thread(s)");
      const ExperimentResult result = run(spec, threads);
      const std::filesystem::path dir(out_dir);
      {
        auto f = detail::open_out(dir / "results.csv");
        write_results_csv(f, result);
        detail::close_out(f, dir / "results.csv");
      }
      {
        auto f = detail::open_out(dir / "summary.json");
        write_summary(f, result);
        detail::close_out(f, dir / "summary.json");
      }
      return kExitMatch;
    }
    if (*val) {
      TheoremParams p;
      p.theorem = theorem;
      p.trials = trials;
      KeyValueConfig cfg;
      if (!spec_path.empty()) cfg = detail::read_config(spec_path);
      if (!cfg.has("n_records")) cfg.set("n_records", "1000");
      if (!cfg.has("n_attributes")) cfg.set("n_attributes", "2000");
      if (seed) cfg.set("seed", std::to_string(*seed));
      p.synth = SynthSpec::from_config(cfg);
      cfg.check_all_used();
      p.eps = eps.value_or(theorem == 5 ? 0.5 : 0.1);
      p.delta = delta.value_or(theorem == 5 ? 0.5 : 0.2);
      p.k = k;
      p.sample_fraction = sample_fraction;
      p.gamma = gamma;
      const TheoremCheck check = validate_theorem(p, threads);
      nlohmann::ordered_json j;
      j["theorem"] = check.theorem;
      j["status"] = std::string(to_string(check.status));
      for (const auto& [name, value] : check.metrics) j["metrics"][name] = value;
      if (!check.message.empty()) j["message"] = check.message;
      const std::string text = j.dump(2) + "\n";
      if (out_path.empty()) {
        out << text;
      } else {
        auto f = detail::open_out(out_path);
        f << text;
        detail::close_out(f, out_path);
      }
      return check.status == TheoremCheck::Status::kFail ? kExitNoMatch : kExitMatch;
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace deanon::cli

#endif  // DEANON_TOOLS_CLI_APP_HPP
