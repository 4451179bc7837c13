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

#include "pmdpv/model.hpp"
#include "pmdpv/property.hpp"

#include <cstddef>
#include <vector>

namespace pmdpv {

struct CheckOptions {
    double tolerance = 1e-9;
    std::size_t max_iterations = 1000000;
};

/// How strategies are quantified when checking P op p.
///   Universal: the property must hold under every strategy, so lower bounds are
///              checked on the minimal and upper bounds on the maximal probability.
///   Minimum:   the minimal probability is compared for every operator.
enum class Quantifier { Universal, Minimum };

struct ReachResult {
    std::vector<double> values;
    std::vector<std::size_t> strategy; // choice index per state
    std::size_t iterations = 0;
    double residual = 0.0;
};

/// Minimal probability of phi1 U phi2 per state, with an optimal memoryless strategy.
ReachResult min_until_probability(const Mdp& m, const StateFormula& phi1, const StateFormula& phi2,
                                  const CheckOptions& opt = {});
ReachResult max_until_probability(const Mdp& m, const StateFormula& phi1, const StateFormula& phi2,
                                  const CheckOptions& opt = {});
ReachResult min_next_probability(const Mdp& m, const StateFormula& phi);
ReachResult max_next_probability(const Mdp& m, const StateFormula& phi);

/// Whether a property's probability is taken as a minimum or maximum over strategies.
bool uses_maximum(const Property& p, Quantifier q) noexcept;

/// Per-state probability of the property's path formula under the quantifier.
ReachResult path_probability(const Mdp& m, const Property& p, Quantifier q = Quantifier::Universal,
                             const CheckOptions& opt = {});

/// The initial-state value the threshold is compared against: the worst initial
/// state for the operator's direction.
double decisive_probability(const Mdp& m, const Property& p, Quantifier q = Quantifier::Universal,
                            const CheckOptions& opt = {});

bool satisfies(const Mdp& m, const Property& p, Quantifier q = Quantifier::Universal,
               const CheckOptions& opt = {});

/// Probability of phi1 U phi2 per state in the chain induced by a fixed strategy,
/// solved by Gaussian elimination.
std::vector<double> strategy_until_probability(const Mdp& m, const std::vector<std::size_t>& strategy,
                                               const StateFormula& phi1, const StateFormula& phi2);

} // namespace pmdpv
