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
#include "pmdpv/region.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace pmdpv {

struct ConfidenceEstimate {
    double c = 0.0;
    std::size_t samples = 0;
    double stderr_ = 0.0;
    double undecided_mass = 0.0;
    std::size_t rejected = 0;
};

/// Draws one full parameter vector.
using ThetaSampler = std::function<void(Rng&, std::vector<double>&)>;

struct ConfidenceOptions {
    std::size_t samples = 100000;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::size_t max_attempts = 10000; // per sample, before giving up on rejection
};

/// Where posterior samples live relative to the map: `reduction` projects full
/// vectors onto the map's coordinates, `space` (over those coordinates, may be
/// null) rejects invalid parameter values.
struct RegionContext {
    const RegionMap* map = nullptr;
    Reduction reduction;
    const ParamSpace* space = nullptr;
};

/// Monte-Carlo estimate of the posterior mass of the satisfied cells. Samples
/// that are invalid, fall outside the map, or land in invalid cells are
/// redrawn and counted in `rejected`. Sample i uses stream i of the seed.
ConfidenceEstimate confidence(const RegionContext& ctx, const ThetaSampler& sampler, const ConfidenceOptions& opt);

/// Convenience wrapper drawing from a product of Betas.
ConfidenceEstimate confidence(const RegionContext& ctx, const Posterior& posterior, const ConfidenceOptions& opt);

/// Deterministic integral of a product of Betas over the map: satisfied mass
/// divided by the mass of cells not tagged invalid. Posterior is indexed by
/// full parameters and projected through the reduction.
ConfidenceEstimate confidence_exact(const RegionContext& ctx, const Posterior& posterior);

/// P(lo <= X <= hi) for X ~ Beta(a, b).
double confidence_beta_oracle(double a, double b, double lo, double hi);

/// {"c":..,"stderr":..,"undecided_mass":..,"samples":..,"rejected":..}
std::string confidence_to_json(const ConfidenceEstimate& e);

} // namespace pmdpv
