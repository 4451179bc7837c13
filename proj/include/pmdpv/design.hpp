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

#include "pmdpv/confidence.hpp"
#include "pmdpv/inference.hpp"
#include "pmdpv/simulate.hpp"
#include "pmdpv/transform.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace pmdpv {

struct PredictedCounts {
    std::vector<double> theta;       // instantiation the counts were propagated at
    std::vector<double> edges;       // per original edge, summed over all steps
    std::vector<double> step_totals; // expected transitions taken at each step
    ParamCounts<double> params;      // per parameter, through the expansion
};

enum class Integration {
    MonteCarlo,
    Exact, // sum of Beta masses over the map cells
};

struct DesignOptions {
    std::size_t trace_length = 10;
    std::size_t mc_samples = 10000;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    Integration synth_integration = Integration::MonteCarlo;
    Integration dp_integration = Integration::Exact;
    std::size_t max_strategies = 1000000;
    double discount = 0.95;
    double tie_tol = 1e-12; // relative, for value and gain ties
    std::size_t max_iterations = 1000000;
    std::size_t report_limit = 65536; // per-strategy rows kept in a GainReport
};

/// Everything experiment design needs about one verification problem.
struct DesignContext {
    const Pmdp* model = nullptr;
    const ExpandedModel* expanded = nullptr;
    RegionContext region;
};

std::vector<double> expected_param_values(const Posterior& p);

/// Posterior mean, or the mean truncated to the valid parameters when the
/// plain mean would make some transition probability negative.
std::vector<double> design_point(const Pmdp& m, const Posterior& p, std::uint64_t seed);

PredictedCounts expected_trace_counts(const DesignContext& ctx, const Strategy& pi, const Posterior& p,
                                      std::size_t n, std::uint64_t seed = 0);

/// Expected counts of a single transition from s under choice index c.
PredictedCounts expected_step_counts(const DesignContext& ctx, std::size_t s, std::size_t c, const Posterior& p,
                                     std::uint64_t seed = 0);

Posterior predicted_posterior(const Posterior& p, const PredictedCounts& predicted);

double posterior_confidence(const DesignContext& ctx, const Posterior& p, Integration how,
                            const DesignOptions& opt);

double predicted_confidence(const DesignContext& ctx, const Posterior& p, const PredictedCounts& predicted,
                            Integration how, const DesignOptions& opt);

inline double confidence_gain(double c_hat, double c) {
    return std::abs(0.5 - c_hat) - std::abs(0.5 - c);
}

struct StrategyGain {
    Strategy strategy;
    double c_hat = 0.0;
    double gain = 0.0;
};

struct GainReport {
    Strategy chosen;
    double c_hat = 0.0;
    double c_current = 0.0;
    double gain = 0.0;
    std::size_t strategies = 0;        // enumerated
    std::size_t distinct = 0;          // distinct predicted posteriors evaluated
    std::vector<Strategy> tied;        // all strategies within tie_tol of the best, chosen first
    std::vector<StrategyGain> evaluated; // enumeration order, up to report_limit rows
};

std::size_t strategy_count(const Pmdp& m);

GainReport synthesise_strategy(const DesignContext& ctx, const Posterior& p, const DesignOptions& opt);

struct DpReport {
    Strategy chosen;
    double c_current = 0.0;
    std::vector<std::vector<double>> rewards; // G per (state, choice)
    std::vector<std::vector<double>> q;       // discounted value per (state, choice)
    std::vector<double> values;
    std::vector<std::vector<std::size_t>> ties; // per state, optimal choices when more than one
    std::size_t iterations = 0;
};

DpReport offline_dp_strategy(const DesignContext& ctx, const Posterior& p, const DesignOptions& opt);

/// Brute-force evaluation of the finite-horizon optimal gain x_s^t over all
/// action sequences with posteriors updated after every step. Tiny models only.
struct ReferenceGain {
    double value = 0.0;
    std::size_t first_choice = 0;
};

ReferenceGain reference_gain(const DesignContext& ctx, const Posterior& p, std::size_t horizon,
                             const DesignOptions& opt);

std::string gain_report_to_json(const GainReport& r, const Pmdp& m);
std::string dp_report_to_json(const DpReport& r, const Pmdp& m);

} // namespace pmdpv
