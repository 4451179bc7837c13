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
#include "pmdpv/random.hpp"
#include "pmdpv/transform.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pmdpv {

struct Step {
    std::size_t state;
    std::size_t action;
    std::size_t next;

    friend bool operator==(const Step&, const Step&) = default;
};

struct Trace {
    std::vector<Step> steps;

    friend bool operator==(const Trace&, const Trace&) = default;
};

using TraceData = std::vector<Trace>;

/// One JSON object per line: {"steps":[["s0","a","s1"],...]}. Blank lines are skipped.
TraceData parse_traces(std::string_view text, const Pmdp& m);
TraceData load_traces(const std::string& path, const Pmdp& m);
std::string traces_to_jsonl(const TraceData& traces, const Pmdp& m);

/// Checks that actions are enabled, transitions exist with a nonzero
/// expression, and consecutive steps chain.
void validate_traces(const TraceData& traces, const Pmdp& m);

/// Count per edge id of m.
std::vector<std::int64_t> extract_counts(const Pmdp& m, const TraceData& traces);

/// Per-parameter pair (D_theta, D_not_theta).
template <class T>
struct ParamCounts {
    std::vector<T> pos;
    std::vector<T> neg;
};

/// Groups edge counts of a model whose parametric entries are literal theta_j:
/// counts on theta_j edges go to pos[j]; counts on the other edges of every
/// row holding a theta_j edge go to neg[j].
template <class T>
ParamCounts<T> parameter_counts(const Pmdp& m, std::span<const T> edge_counts);

extern template ParamCounts<std::int64_t> parameter_counts(const Pmdp&, std::span<const std::int64_t>);
extern template ParamCounts<double> parameter_counts(const Pmdp&, std::span<const double>);

/// Independent Beta posterior per parameter.
struct Posterior {
    std::vector<std::string> names;
    std::vector<BetaPair> params;

    static Posterior prior_of(const Pmdp& m);
    std::vector<double> means() const;
    friend bool operator==(const Posterior&, const Posterior&) = default;
};

/// mu' = mu + (D_theta, D_not_theta).
Posterior update_posterior(const Posterior& prior, const ParamCounts<double>& counts);
Posterior update_posterior(const Posterior& prior, const ParamCounts<std::int64_t>& counts);

/// JSON object {name: [mu1, mu2]} in parameter order.
std::string posterior_to_json(const Posterior& p);
Posterior posterior_from_json(std::string_view text);

/// Spreads counts of original edges over their lineage paths in proportion
/// to path probabilities at theta. Returns expanded edge counts.
std::vector<double> apportion_counts(const ExpandedModel& e, std::span<const double> original_counts,
                                     std::span<const double> theta);

struct CompletionSample {
    std::vector<std::int64_t> expanded_counts;
    std::vector<double> theta;
};

struct CompletionOptions {
    std::size_t gibbs_sweeps = 0;
    std::size_t pilot_iterations = 20;
    std::size_t max_retries = 100;
};

/// Samples latent expanded-model counts D* given observed original-edge
/// counts, then theta from the Beta posteriors they induce. theta-hat for the
/// split probabilities is drawn from a pilot posterior fixed by iterating
/// mu + E[D* | mean] from the prior mean.
class CompletionSampler {
public:
    CompletionSampler(const ExpandedModel& expanded, std::vector<std::int64_t> counts, Posterior prior,
                      CompletionOptions opt = {});

    const Posterior& pilot() const noexcept { return pilot_; }
    CompletionSample sample(Rng& rng) const;
    /// Sample i uses its own stream of `seed`.
    std::vector<CompletionSample> samples(std::size_t n, std::uint64_t seed) const;

private:
    std::vector<std::int64_t> split_counts(std::span<const double> theta_hat, Rng& rng) const;

    const ExpandedModel& expanded_;
    std::vector<std::int64_t> counts_;
    Posterior prior_;
    CompletionOptions opt_;
    Posterior pilot_;
};

/// Independent joint samples from a product of Betas; sample i uses stream i.
std::vector<std::vector<double>> posterior_samples(const Posterior& p, std::size_t n, std::uint64_t seed);

} // namespace pmdpv
