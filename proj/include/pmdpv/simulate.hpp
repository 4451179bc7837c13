// Copyright 2026 The pmdp-verify Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "pmdpv/inference.hpp"
#include "pmdpv/model.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace pmdpv {

/// Deterministic memoryless strategy: index into choices(s) per state.
struct Strategy {
    std::vector<std::size_t> choice;

    friend bool operator==(const Strategy&, const Strategy&) = default;
};

/// {state: action} for every state with more than one enabled action.
std::string strategy_to_json(const Strategy& s, const Pmdp& m);
Strategy strategy_from_json(std::string_view text, const Pmdp& m);

enum class ActionMode {
    Fixed,        // follow the given strategy
    RandomStatic, // one uniformly drawn memoryless strategy per trace
    NoStrategy,   // uniform enabled action at every visit
};

struct SimConfig {
    std::vector<double> theta;
    std::size_t length = 1;
    std::size_t traces = 1;
    std::uint64_t seed = 0;
    ActionMode mode = ActionMode::Fixed;
    Strategy strategy;
};

/// Traces of exactly `length` steps from the initial distribution of M(theta).
/// Trace i uses stream i of the seed.
TraceData simulate_traces(const Pmdp& m, const SimConfig& cfg);

/// Uniform draw from the product of enabled choices.
Strategy random_strategy(const Pmdp& m, Rng& rng);

} // namespace pmdpv
