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
// Convenience header pulling in the whole library.
#ifndef DEANON_DEANON_HPP
#define DEANON_DEANON_HPP

#include "deanon/aux.hpp"
#include "deanon/bounds.hpp"
#include "deanon/common.hpp"
#include "deanon/dates.hpp"
#include "deanon/entropy.hpp"
#include "deanon/experiments.hpp"
#include "deanon/ingest.hpp"
#include "deanon/keyvalue.hpp"
#include "deanon/match.hpp"
#include "deanon/model.hpp"
#include "deanon/parallel.hpp"
#include "deanon/report.hpp"
#include "deanon/rng.hpp"
#include "deanon/synth.hpp"

#endif  // DEANON_DEANON_HPP
