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
// Closed-form aux sizes that make the min-similarity matcher safe.
#ifndef DEANON_BOUNDS_HPP
#define DEANON_BOUNDS_HPP

#include <cmath>
#include <cstddef>
#include <string>

#include "deanon/common.hpp"

namespace deanon {

namespace detail {

inline void check_unit_open(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) throw DomainError(std::string(name) + " must lie in (0, 1)");
}

// Ceiling that ignores floating noise just above an integer.
inline std::size_t ceil_count(double x) {
  return static_cast<std::size_t>(std::ceil(x - 1e-9));
}

}  // namespace detail

// Aux entries needed so that, with probability >= 1 - eps, no record with
// similarity <= 1 - eps - delta to the target survives the min-score filter:
// m >= (log N - log eps) / -log(1 - delta). The log base cancels.
inline double required_aux_size_exact(std::size_t n_records, double eps, double delta) {
  if (n_records < 1) throw DomainError("N must be >= 1");
  detail::check_unit_open(eps, "eps");
  detail::check_unit_open(delta, "delta");
  return (std::log(static_cast<double>(n_records)) - std::log(eps)) / -std::log1p(-delta);
}

inline std::size_t required_aux_size(std::size_t n_records, double eps, double delta) {
  return detail::ceil_count(required_aux_size_exact(n_records, eps, delta));
}

// Small-delta approximation (log N - log eps) / delta.
inline double required_aux_size_small_delta(std::size_t n_records, double eps, double delta) {
  if (n_records < 1) throw DomainError("N must be >= 1");
  detail::check_unit_open(eps, "eps");
  detail::check_unit_open(delta, "delta");
  return (std::log(static_cast<double>(n_records)) - std::log(eps)) / delta;
}

// Aux size for a lineup of k: at most k - 1 expected false matches,
// m = log(N / (k - 1)) / log(1 / (1 - delta)).
inline double required_aux_size_lineup_exact(std::size_t n_records, std::size_t k,
                                             double delta) {
  if (n_records < 1) throw DomainError("N must be >= 1");
  if (k < 2) throw DomainError("lineup size k must be >= 2");
  detail::check_unit_open(delta, "delta");
  return std::log(static_cast<double>(n_records) / static_cast<double>(k - 1)) /
         -std::log1p(-delta);
}

inline std::size_t required_aux_size_lineup(std::size_t n_records, std::size_t k,
                                            double delta) {
  const double m = required_aux_size_lineup_exact(n_records, k, delta);
  return m <= 0.0 ? 0 : detail::ceil_count(m);
}

}  // namespace deanon

#endif  // DEANON_BOUNDS_HPP
