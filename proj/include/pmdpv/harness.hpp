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

#include "pmdpv/design.hpp"
#include "pmdpv/property.hpp"
#include "pmdpv/region.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pmdpv {

enum class StrategyMode { Synth, Dp, RandomStatic, None };

std::string to_string(StrategyMode m);
StrategyMode parse_strategy_mode(std::string_view text);

/// Posterior for design and the sampler for confidence, from aggregated counts.
struct Inference {
    Posterior posterior;
    ThetaSampler sampler;
};

Inference infer(const ExpandedModel& expanded, const std::vector<std::int64_t>& counts, const Posterior& prior,
                const CompletionOptions& opt = {});

struct RunOptions {
    StrategyMode mode = StrategyMode::Synth;
    std::vector<double> theta; // true system parameters, full dimension
    std::size_t traces = 10; // data budget in traces
    std::size_t length = 10;
    std::size_t batch = 0;   // traces collected per design round, 0 for the whole budget
    std::uint64_t seed = 0;
    std::size_t mc_samples = 10000;
    std::size_t design_mc_samples = 10000;
    bool record_series = true;
    DesignOptions design; // trace_length, mc_samples and seed are set per batch
};

struct RunResult {
    ConfidenceEstimate final;
    std::vector<double> series; // confidence before any data, then after each trace
    std::vector<Strategy> strategies; // per trace, empty for the baselines
    std::vector<std::int64_t> counts; // aggregated per original edge
    Posterior posterior;
    std::vector<std::string> log;
    std::size_t steps = 0;
};

RunResult run_verification(const DesignContext& ctx, const RunOptions& opt);

struct GroundTruth {
    int value = 0;
    bool boundary = false; // on a face shared with a cell of the other verdict
};

GroundTruth ground_truth(const RegionContext& region, std::span<const double> theta);

struct TraceConfig {
    std::size_t traces = 10;
    std::size_t length = 10;
    friend bool operator==(const TraceConfig&, const TraceConfig&) = default;
};

struct ExperimentSpec {
    std::string model_path;
    std::string property;
    std::string region_path; // optional, synthesised when empty
    std::string grid_param;
    std::vector<double> grid;
    std::vector<std::string> sim_ties; // simulator only, "theta2=theta1"
    std::vector<std::pair<std::string, double>> fixed;
    std::vector<std::string> synth_ties;
    std::vector<TraceConfig> configs;
    std::vector<StrategyMode> modes;
    std::size_t trials = 100;
    std::size_t batch = 0;
    std::uint64_t seed = 0;
    std::size_t mc_samples = 10000;
    std::size_t design_mc_samples = 10000;
    double tol = 1e-3;
    double budget = 0.02;
    bool series = false;
};

/// Relative paths are resolved against base_dir.
ExperimentSpec parse_experiment_spec(std::string_view text, const std::string& base_dir = ".");
ExperimentSpec load_experiment_spec(const std::string& path);

struct CellResult {
    std::size_t theta_index = 0;
    double theta = 0.0;
    StrategyMode mode = StrategyMode::Synth;
    TraceConfig config;
    GroundTruth truth;
    std::vector<double> outcomes; // final confidence per trial
    std::vector<std::vector<double>> series; // per trial, when recorded
    double mse = 0.0;
    std::string error;
};

struct EvalResult {
    std::vector<double> grid;
    std::string grid_param;
    std::vector<StrategyMode> modes;
    std::vector<TraceConfig> configs;
    std::vector<CellResult> cells; // ordered by (theta, mode, config)
};

struct EvalProblem {
    Pmdp model;
    ExpandedModel expanded;
    RegionMap map;
    Reduction reduction;
    ParamSpace reduced_space;
};

EvalProblem prepare_problem(const ExperimentSpec& spec, unsigned threads = 1);

/// Full parameter point for a grid value, applying fixed values and simulator ties.
std::vector<double> grid_point(const ExperimentSpec& spec, const Pmdp& m, double value);

EvalResult evaluate_grid(const ExperimentSpec& spec, const EvalProblem& problem, unsigned threads = 1);

double mean_squared_error(int truth, const std::vector<double>& outcomes);

/// Trial-level CSV with header theta,mode,traces,len,trial,confidence,mse_cell.
std::string results_csv(const EvalResult& r);

/// Per-quantile summary of convergence series: batch,min,q1,median,q3,max.
std::string quartiles_csv(const std::vector<std::vector<double>>& series);

double quantile(std::vector<double> xs, double q);

/// Writes results.csv, per-config MSE tables, convergence quartiles and gnuplot scripts.
std::vector<std::string> emit_plots(const EvalResult& r, const std::string& out_dir);

std::string run_result_to_json(const RunResult& r, const Pmdp& m);

} // namespace pmdpv
