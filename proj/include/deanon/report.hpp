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
// Structured JSON reports for attack outcomes.
#ifndef DEANON_REPORT_HPP
#define DEANON_REPORT_HPP

#include <cstddef>
#include <string>

#include "json.hpp"

#include "deanon/ingest.hpp"
#include "deanon/match.hpp"

namespace deanon {

// One object: kind, best_guess (record key or null), diagnostics and the
// top_j lineup entries by probability. Keys appear in a fixed order.
inline nlohmann::ordered_json outcome_report(const MatchOutcome& out, const IdMaps& maps,
                                             ScorerKind scorer, std::size_t top_j) {
  nlohmann::ordered_json j;
  j["kind"] = std::string(to_string(out.kind));
  j["algorithm"] = std::string(to_string(scorer));
  if (out.best_guess) {
    j["best_guess"] = maps.record_key(*out.best_guess);
  } else {
    j["best_guess"] = nullptr;
  }
  auto& d = j["diagnostics"];
  d["candidates"] = out.stats.candidates;
  d["max_score"] = out.stats.max;
  d["second_score"] = out.stats.max2;
  d["sigma"] = out.stats.sigma;
  d["eccentricity"] = out.stats.eccentricity();
  if (scorer == ScorerKind::kMinSim) d["matching_set_size"] = out.matching_set.size();
  auto& lineup = j["lineup"] = nlohmann::ordered_json::array();
  for (const auto& [id, p] : out.lineup.top(top_j)) {
    nlohmann::ordered_json e;
    e["record"] = maps.record_key(id);
    e["probability"] = p;
    lineup.push_back(e);
  }
  return j;
}

}  // namespace deanon

#endif  // DEANON_REPORT_HPP
