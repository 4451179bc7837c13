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

#include "pmdpv/confidence.hpp"

#include "parallel.hpp"
#include "pmdpv/error.hpp"
#include "pmdpv/special.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace pmdpv {

namespace {

enum : char { kSat = 0, kUnsat = 1, kUnknown = 2 };

} // namespace

ConfidenceEstimate confidence(const RegionContext& ctx, const ThetaSampler& sampler, const ConfidenceOptions& opt) {
    if (!ctx.map)
        throw ValidationError("confidence needs a region map");
    if (opt.samples == 0)
        throw ValidationError("confidence needs at least one sample");
    if (ctx.reduction.free_dims() != ctx.map->dims())
        throw ValidationError("region map has " + std::to_string(ctx.map->dims()) +
                              " dimensions but the posterior projects to " +
                              std::to_string(ctx.reduction.free_dims()));
    std::vector<char> outcome(opt.samples);
    std::vector<std::uint32_t> rejected(opt.samples, 0);
    detail::parallel_for(opt.samples, opt.threads, [&](std::size_t i) {
        Rng rng(opt.seed, i);
        std::vector<double> theta(ctx.reduction.full_dims());
        for (std::size_t attempt = 0;; ++attempt) {
            if (attempt >= opt.max_attempts)
                throw NumericError("posterior sample rejected " + std::to_string(opt.max_attempts) +
                                   " times; the posterior has almost no mass on valid parameters");
            sampler(rng, theta);
            auto p = ctx.reduction.project(theta);
            if (ctx.space && !ctx.space->contains(p)) {
                ++rejected[i];
                continue;
            }
            auto cell = ctx.map->locate(p);
            if (!cell || ctx.map->cells()[*cell].verdict == Verdict::Invalid) {
                ++rejected[i];
                continue;
            }
            switch (ctx.map->cells()[*cell].verdict) {
            case Verdict::Sat:
                outcome[i] = kSat;
                break;
            case Verdict::Unsat:
                outcome[i] = kUnsat;
                break;
            default:
                outcome[i] = kUnknown;
                break;
            }
            break;
        }
    });
    std::size_t sat = 0;
    std::size_t unknown = 0;
    ConfidenceEstimate e;
    for (std::size_t i = 0; i < opt.samples; ++i) {
        sat += outcome[i] == kSat;
        unknown += outcome[i] == kUnknown;
        e.rejected += rejected[i];
    }
    const double n = static_cast<double>(opt.samples);
    e.samples = opt.samples;
    e.c = static_cast<double>(sat) / n;
    e.stderr_ = std::sqrt(e.c * (1.0 - e.c) / n);
    e.undecided_mass = static_cast<double>(unknown) / n;
    return e;
}

ConfidenceEstimate confidence(const RegionContext& ctx, const Posterior& posterior, const ConfidenceOptions& opt) {
    if (posterior.params.size() != ctx.reduction.full_dims())
        throw ValidationError("posterior has " + std::to_string(posterior.params.size()) +
                              " parameters, expected " + std::to_string(ctx.reduction.full_dims()));
    const auto& ps = posterior.params;
    return confidence(
        ctx,
        [&ps](Rng& rng, std::vector<double>& theta) {
            for (std::size_t j = 0; j < ps.size(); ++j)
                theta[j] = rng.beta(ps[j].a, ps[j].b);
        },
        opt);
}

ConfidenceEstimate confidence_exact(const RegionContext& ctx, const Posterior& posterior) {
    if (!ctx.map)
        throw ValidationError("confidence needs a region map");
    if (posterior.params.size() != ctx.reduction.full_dims())
        throw ValidationError("posterior does not match the parameter count");
    const auto& free = ctx.reduction.free_params();
    // Cell faces repeat across the tiling, so each CDF value is computed once.
    struct Tails {
        double lower;
        double upper;
    };
    std::vector<std::map<double, Tails>> cache(free.size());
    auto tails = [&](std::size_t d, double x) -> const Tails& {
        auto it = cache[d].find(x);
        if (it != cache[d].end())
            return it->second;
        const auto& b = posterior.params[free[d]];
        Tails t{incomplete_beta(x, b.a, b.b), incomplete_beta(1.0 - x, b.b, b.a)};
        return cache[d].emplace(x, t).first->second;
    };
    double sat = 0.0;
    double unknown = 0.0;
    double valid = 0.0;
    for (const auto& cell : ctx.map->cells()) {
        if (cell.verdict == Verdict::Invalid)
            continue;
        double mass = 1.0;
        for (std::size_t d = 0; d < free.size() && mass > 0.0; ++d) {
            const auto& b = posterior.params[free[d]];
            const double lo = cell.box.lo[d];
            const double hi = cell.box.hi[d];
            if (!(lo >= 0.0 && lo <= hi && hi <= 1.0))
                throw NumericError("region cell lies outside the unit interval");
            const Tails& tl = tails(d, lo);
            const Tails& th = tails(d, hi);
            // Subtract in the tail that keeps precision.
            const double m = lo > b.mean() ? tl.upper - th.upper : th.lower - tl.lower;
            mass *= std::max(0.0, m);
        }
        valid += mass;
        if (cell.verdict == Verdict::Sat)
            sat += mass;
        else if (cell.verdict == Verdict::Unknown)
            unknown += mass;
    }
    if (!(valid > 0.0))
        throw NumericError("posterior has no mass on valid cells of the region map");
    ConfidenceEstimate e;
    e.c = std::clamp(sat / valid, 0.0, 1.0);
    e.undecided_mass = unknown / valid;
    return e;
}

double confidence_beta_oracle(double a, double b, double lo, double hi) {
    if (!(a > 0.0 && b > 0.0))
        throw ValidationError("Beta hyperparameters must be positive");
    if (!(lo >= 0.0 && lo <= hi && hi <= 1.0))
        throw ValidationError("interval must satisfy 0 <= lo <= hi <= 1");
    return beta_interval_mass(a, b, lo, hi);
}

std::string confidence_to_json(const ConfidenceEstimate& e) {
    nlohmann::ordered_json doc;
    doc["c"] = e.c;
    doc["stderr"] = e.stderr_;
    doc["undecided_mass"] = e.undecided_mass;
    doc["samples"] = e.samples;
    doc["rejected"] = e.rejected;
    return doc.dump() + "\n";
}

} // namespace pmdpv
