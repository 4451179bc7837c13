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

#include "pmdpv/harness.hpp"

#include "parallel.hpp"
#include "pmdpv/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

namespace pmdpv {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

enum : std::uint64_t { kDesignStream = 1, kConfidenceStream = 2, kSimStream = 3 };

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

std::string num(double x) { return fmt("%.17g", x); }
std::string short_num(double x) { return fmt("%.10g", x); }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    out << text;
    if (!out)
        throw Error("failed writing " + path.string());
}

std::string config_tag(const TraceConfig& c) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "t%02zu_l%02zu", c.traces, c.length);
    return buf;
}

ojson strategy_json(const Strategy& s, const Pmdp& m) { return ojson::parse(strategy_to_json(s, m)); }

} // namespace

std::string to_string(StrategyMode m) {
    switch (m) {
    case StrategyMode::Synth:
        return "synth";
    case StrategyMode::Dp:
        return "dp";
    case StrategyMode::RandomStatic:
        return "random-static";
    case StrategyMode::None:
        return "none";
    }
    return "?";
}

StrategyMode parse_strategy_mode(std::string_view text) {
    if (text == "synth")
        return StrategyMode::Synth;
    if (text == "dp")
        return StrategyMode::Dp;
    if (text == "random-static")
        return StrategyMode::RandomStatic;
    if (text == "none")
        return StrategyMode::None;
    throw ParseError("unknown strategy mode '" + std::string(text) + "'; expected synth, dp, random-static or none");
}

Inference infer(const ExpandedModel& expanded, const std::vector<std::int64_t>& counts, const Posterior& prior,
                const CompletionOptions& opt) {
    Inference out;
    if (expanded.is_identity()) {
        out.posterior = update_posterior(prior, parameter_counts<std::int64_t>(expanded.model, counts));
        auto ps = out.posterior.params;
        out.sampler = [ps](Rng& rng, std::vector<double>& theta) {
            for (std::size_t j = 0; j < ps.size(); ++j)
                theta[j] = rng.beta(ps[j].a, ps[j].b);
        };
        return out;
    }
    auto cs = std::make_shared<CompletionSampler>(expanded, counts, prior, opt);
    out.posterior = cs->pilot();
    out.sampler = [cs](Rng& rng, std::vector<double>& theta) { theta = cs->sample(rng).theta; };
    return out;
}

RunResult run_verification(const DesignContext& ctx, const RunOptions& opt) {
    if (!ctx.model || !ctx.expanded || !ctx.region.map)
        throw ValidationError("verification needs a model, its expansion and a region map");
    const Pmdp& m = *ctx.model;
    if (opt.theta.size() != m.num_params())
        throw ValidationError("true parameters have " + std::to_string(opt.theta.size()) + " values, model has " +
                              std::to_string(m.num_params()));
    if (auto why = m.param_space().violation(opt.theta))
        throw ValidationError("true parameters are invalid: " + *why);
    if (opt.length == 0)
        throw ValidationError("trace length must be at least 1");
    if (m.initial().size() != 1)
        throw ValidationError("verification runs need a single initial state");

    const Posterior prior = Posterior::prior_of(m);
    RunResult r;
    r.counts.assign(m.num_edges(), 0);
    Inference cur = infer(*ctx.expanded, r.counts, prior);
    auto estimate = [&](std::size_t batch) {
        ConfidenceOptions co;
        co.samples = opt.mc_samples;
        co.seed = derive_seed(opt.seed, {batch, kConfidenceStream});
        return confidence(ctx.region, cur.sampler, co);
    };
    if (opt.record_series || opt.traces == 0) {
        r.final = estimate(0);
        if (opt.record_series)
            r.series.push_back(r.final.c);
    }
    const std::size_t batch = opt.batch == 0 ? std::max<std::size_t>(1, opt.traces) : opt.batch;
    for (std::size_t round = 0, done = 0; done < opt.traces; ++round) {
        DesignOptions d = opt.design;
        d.trace_length = opt.length;
        d.mc_samples = opt.design_mc_samples;
        d.seed = derive_seed(opt.seed, {round, kDesignStream});
        d.threads = 1;
        SimConfig sc;
        sc.theta = opt.theta;
        sc.length = opt.length;
        sc.traces = 1;
        std::string note;
        switch (opt.mode) {
        case StrategyMode::Synth: {
            auto g = synthesise_strategy(ctx, cur.posterior, d);
            sc.strategy = g.chosen;
            note = ", gain " + num(g.gain);
            break;
        }
        case StrategyMode::Dp:
            sc.strategy = offline_dp_strategy(ctx, cur.posterior, d).chosen;
            break;
        case StrategyMode::RandomStatic:
            sc.mode = ActionMode::RandomStatic;
            break;
        case StrategyMode::None:
            sc.mode = ActionMode::NoStrategy;
            break;
        }
        std::string design = "round " + std::to_string(round + 1) + ": mode " + to_string(opt.mode);
        if (sc.mode == ActionMode::Fixed)
            design += ", strategy " + strategy_to_json(sc.strategy, m);
        r.log.push_back(design + note);
        const std::size_t end = std::min(opt.traces, done + batch);
        for (; done < end; ++done) {
            sc.seed = derive_seed(opt.seed, {done, kSimStream});
            auto traces = simulate_traces(m, sc);
            auto add = extract_counts(m, traces);
            for (std::size_t i = 0; i < add.size(); ++i)
                r.counts[i] += add[i];
            r.steps += traces.front().steps.size();
            if (sc.mode == ActionMode::Fixed)
                r.strategies.push_back(sc.strategy);
            cur = infer(*ctx.expanded, r.counts, prior);
            if (opt.record_series || done + 1 == opt.traces) {
                r.final = estimate(done + 1);
                if (opt.record_series)
                    r.series.push_back(r.final.c);
                r.log.push_back("trace " + std::to_string(done + 1) + ": confidence " + num(r.final.c));
            }
        }
    }
    r.posterior = cur.posterior;
    return r;
}

GroundTruth ground_truth(const RegionContext& region, std::span<const double> theta) {
    if (!region.map)
        throw ValidationError("ground truth needs a region map");
    if (theta.size() != region.reduction.full_dims())
        throw ValidationError("parameter point has the wrong dimension");
    const auto p = region.reduction.project(theta);
    auto idx = region.map->locate(p);
    if (!idx)
        throw ValidationError("parameter point lies outside the region map");
    const Verdict v = region.map->cells()[*idx].verdict;
    if (v == Verdict::Unknown)
        throw ValidationError("parameter point lies in an undecided cell; rerun synthesis with a smaller tolerance");
    if (v == Verdict::Invalid)
        throw ValidationError("parameter point lies in an invalid cell");
    GroundTruth g;
    g.value = v == Verdict::Sat ? 1 : 0;
    for (const auto& c : region.map->cells())
        if (c.verdict != v && c.verdict != Verdict::Invalid && c.box.contains(p)) {
            g.boundary = true;
            break;
        }
    return g;
}

ExperimentSpec parse_experiment_spec(std::string_view text, const std::string& base_dir) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("experiment spec is not valid JSON: ") + e.what());
    }
    if (!doc.is_object())
        throw ParseError("experiment spec must be a JSON object");
    static const std::vector<std::string> known = {
        "model", "property", "region", "grid", "tie", "fixed", "synth_ties", "configs", "modes", "trials", "batch",
        "seed", "mc_samples", "design_mc_samples", "tol", "budget", "series"};
    for (const auto& [k, _] : doc.items())
        if (std::find(known.begin(), known.end(), k) == known.end())
            throw ParseError("unknown experiment spec field '" + k + "'");
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_absolute() ? p : (std::filesystem::path(base_dir) / path).lexically_normal().string();
    };
    ExperimentSpec s;
    try {
        s.model_path = resolve(doc.at("model").get<std::string>());
        s.property = doc.at("property").get<std::string>();
        if (doc.contains("region"))
            s.region_path = resolve(doc["region"].get<std::string>());
        const auto& grid = doc.at("grid");
        s.grid_param = grid.at("param").get<std::string>();
        if (grid.contains("values")) {
            s.grid = grid["values"].get<std::vector<double>>();
        } else {
            const double from = grid.at("from").get<double>();
            const double to = grid.at("to").get<double>();
            const double step = grid.at("step").get<double>();
            if (!(step > 0.0) || to < from)
                throw ParseError("grid range needs from <= to and a positive step");
            const auto n = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9)) + 1;
            for (std::size_t i = 0; i < n; ++i)
                s.grid.push_back(std::round((from + static_cast<double>(i) * step) * 1e10) / 1e10);
        }
        if (doc.contains("tie"))
            s.sim_ties = doc["tie"].get<std::vector<std::string>>();
        if (doc.contains("fixed"))
            for (const auto& [k, v] : doc["fixed"].items())
                s.fixed.emplace_back(k, v.get<double>());
        if (doc.contains("synth_ties"))
            s.synth_ties = doc["synth_ties"].get<std::vector<std::string>>();
        for (const auto& c : doc.at("configs")) {
            TraceConfig tc;
            if (c.is_array() && c.size() == 2) {
                tc.traces = c[0].get<std::size_t>();
                tc.length = c[1].get<std::size_t>();
            } else {
                tc.traces = c.at("traces").get<std::size_t>();
                tc.length = c.at("len").get<std::size_t>();
            }
            if (tc.length == 0)
                throw ParseError("trace length must be at least 1");
            s.configs.push_back(tc);
        }
        for (const auto& mname : doc.at("modes"))
            s.modes.push_back(parse_strategy_mode(mname.get<std::string>()));
        s.trials = doc.value("trials", s.trials);
        s.batch = doc.value("batch", s.batch);
        s.seed = doc.value("seed", s.seed);
        s.mc_samples = doc.value("mc_samples", s.mc_samples);
        s.design_mc_samples = doc.value("design_mc_samples", s.design_mc_samples);
        s.tol = doc.value("tol", s.tol);
        s.budget = doc.value("budget", s.budget);
        s.series = doc.value("series", s.series);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed experiment spec: ") + e.what());
    }
    if (s.grid.empty() || s.configs.empty() || s.modes.empty())
        throw ValidationError("experiment spec needs a nonempty grid, configs and modes");
    if (s.trials == 0 || s.mc_samples == 0 || s.design_mc_samples == 0)
        throw ValidationError("trials and sample counts must be positive");
    if (!std::filesystem::exists(s.model_path))
        throw ValidationError("model file " + s.model_path + " does not exist");
    if (!s.region_path.empty() && !std::filesystem::exists(s.region_path))
        throw ValidationError("region file " + s.region_path + " does not exist");
    return s;
}

ExperimentSpec load_experiment_spec(const std::string& path) {
    auto dir = std::filesystem::path(path).parent_path().string();
    return parse_experiment_spec(read_file(path), dir.empty() ? "." : dir);
}

std::vector<double> grid_point(const ExperimentSpec& spec, const Pmdp& m, double value) {
    const auto names = m.parameter_names();
    std::vector<double> theta(m.num_params(), std::nan(""));
    auto index_of = [&](const std::string& name) {
        auto j = m.find_parameter(name);
        if (!j)
            throw ValidationError("unknown parameter '" + name + "' in experiment spec");
        return *j;
    };
    theta[index_of(spec.grid_param)] = value;
    for (const auto& [name, v] : spec.fixed)
        theta[index_of(name)] = v;
    std::vector<Tie> ties;
    for (const auto& t : spec.sim_ties)
        ties.push_back(parse_tie(t, names));
    for (std::size_t round = 0; round <= ties.size(); ++round)
        for (const auto& t : ties)
            if (std::isnan(theta[t.param]))
                theta[t.param] = theta[t.source];
    for (std::size_t j = 0; j < theta.size(); ++j)
        if (std::isnan(theta[j]))
            throw ValidationError("parameter '" + names[j] + "' has no value; tie it or fix it in the experiment file");
    if (auto why = m.param_space().violation(theta))
        throw ValidationError("grid point " + short_num(value) + " is invalid: " + *why);
    return theta;
}

EvalProblem prepare_problem(const ExperimentSpec& spec, unsigned threads) {
    Pmdp model = load_model(spec.model_path);
    const Property prop = parse_property(spec.property);
    const auto names = model.parameter_names();
    std::vector<Tie> ties;
    for (const auto& t : spec.synth_ties)
        ties.push_back(parse_tie(t, names));
    RegionMap map;
    if (!spec.region_path.empty()) {
        map = region_from_json(read_file(spec.region_path));
    } else {
        SynthOptions so;
        so.tol = spec.tol;
        so.budget = spec.budget;
        so.ties = ties;
        so.threads = threads;
        map = synthesise_region(model, prop, so);
    }
    Reduction red(model.num_params(), ties);
    if (map.dims() != red.free_dims())
        throw ValidationError("region map dimension does not match the model parameters");
    ParamSpace space = red.reduce(model.param_space());
    ExpandedModel ex = expand(model);
    return EvalProblem{std::move(model), std::move(ex), std::move(map), std::move(red), std::move(space)};
}

double mean_squared_error(int truth, const std::vector<double>& outcomes) {
    if (outcomes.empty())
        throw ValidationError("mean squared error needs at least one outcome");
    double acc = 0.0;
    for (double g : outcomes) {
        const double d = static_cast<double>(truth) - g;
        acc += d * d;
    }
    return acc / static_cast<double>(outcomes.size());
}

EvalResult evaluate_grid(const ExperimentSpec& spec, const EvalProblem& problem, unsigned threads) {
    DesignContext ctx{&problem.model, &problem.expanded,
                      RegionContext{&problem.map, problem.reduction, &problem.reduced_space}};
    EvalResult r;
    r.grid = spec.grid;
    r.grid_param = spec.grid_param;
    r.modes = spec.modes;
    r.configs = spec.configs;

    std::vector<std::vector<double>> points(spec.grid.size());
    std::vector<std::string> point_error(spec.grid.size());
    std::vector<GroundTruth> truth(spec.grid.size());
    for (std::size_t i = 0; i < spec.grid.size(); ++i) {
        try {
            points[i] = grid_point(spec, problem.model, spec.grid[i]);
            truth[i] = ground_truth(ctx.region, points[i]);
        } catch (const Error& e) {
            point_error[i] = e.what();
        }
    }
    for (std::size_t i = 0; i < spec.grid.size(); ++i)
        for (auto mode : spec.modes)
            for (const auto& cfg : spec.configs) {
                CellResult c;
                c.theta_index = i;
                c.theta = spec.grid[i];
                c.mode = mode;
                c.config = cfg;
                c.truth = truth[i];
                c.error = point_error[i];
                c.outcomes.assign(spec.trials, std::nan(""));
                if (spec.series)
                    c.series.resize(spec.trials);
                r.cells.push_back(std::move(c));
            }

    const std::size_t n_cfg = spec.configs.size();
    const std::size_t jobs = r.cells.size() * spec.trials;
    std::vector<std::string> errors(jobs);
    detail::parallel_for(jobs, threads, [&](std::size_t job) {
        CellResult& c = r.cells[job / spec.trials];
        const std::size_t trial = job % spec.trials;
        if (!c.error.empty())
            return;
        const std::size_t cfg_index =
            static_cast<std::size_t>(std::find(spec.configs.begin(), spec.configs.end(), c.config) -
                                     spec.configs.begin());
        RunOptions ro;
        ro.mode = c.mode;
        ro.theta = points[c.theta_index];
        ro.traces = c.config.traces;
        ro.length = c.config.length;
        ro.batch = spec.batch;
        // Modes share trial seeds so that they are compared on paired randomness.
        ro.seed = derive_seed(spec.seed, {c.theta_index, cfg_index % n_cfg, trial});
        ro.mc_samples = spec.mc_samples;
        ro.design_mc_samples = spec.design_mc_samples;
        ro.record_series = spec.series;
        try {
            auto res = run_verification(ctx, ro);
            c.outcomes[trial] = res.final.c;
            if (spec.series)
                c.series[trial] = std::move(res.series);
        } catch (const Error& e) {
            errors[job] = e.what();
        }
    });
    for (std::size_t k = 0; k < r.cells.size(); ++k) {
        auto& c = r.cells[k];
        for (std::size_t t = 0; t < spec.trials && c.error.empty(); ++t)
            if (!errors[k * spec.trials + t].empty())
                c.error = "trial " + std::to_string(t) + ": " + errors[k * spec.trials + t];
        c.mse = c.error.empty() ? mean_squared_error(c.truth.value, c.outcomes) : std::nan("");
    }
    return r;
}

std::string results_csv(const EvalResult& r) {
    std::string out = "theta,mode,traces,len,trial,confidence,mse_cell\n";
    for (const auto& c : r.cells)
        for (std::size_t t = 0; t < c.outcomes.size(); ++t)
            out += short_num(c.theta) + "," + to_string(c.mode) + "," + std::to_string(c.config.traces) + "," +
                   std::to_string(c.config.length) + "," + std::to_string(t) + "," + num(c.outcomes[t]) + "," +
                   num(c.mse) + "\n";
    return out;
}

double quantile(std::vector<double> xs, double q) {
    if (xs.empty())
        throw ValidationError("quantile of an empty sample");
    std::sort(xs.begin(), xs.end());
    const double h = q * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

std::string quartiles_csv(const std::vector<std::vector<double>>& series) {
    if (series.empty())
        throw ValidationError("no convergence series to summarise");
    std::string out = "batch,min,q1,median,q3,max\n";
    for (std::size_t b = 0; b < series.front().size(); ++b) {
        std::vector<double> xs;
        for (const auto& s : series)
            if (b < s.size())
                xs.push_back(s[b]);
        out += std::to_string(b);
        for (double q : {0.0, 0.25, 0.5, 0.75, 1.0})
            out += "," + num(quantile(xs, q));
        out += "\n";
    }
    return out;
}

std::vector<std::string> emit_plots(const EvalResult& r, const std::string& out_dir) {
    if (r.cells.empty())
        throw ValidationError("nothing to plot: the result grid is empty");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    std::vector<std::string> written;
    auto emit = [&](const std::string& name, const std::string& text) {
        write_file(dir / name, text);
        written.push_back(name);
    };
    emit("results.csv", results_csv(r));

    const std::size_t n_modes = r.modes.size();
    const std::size_t n_cfg = r.configs.size();
    auto cell = [&](std::size_t i, std::size_t m, std::size_t k) -> const CellResult& {
        return r.cells[(i * n_modes + m) * n_cfg + k];
    };
    for (std::size_t k = 0; k < n_cfg; ++k) {
        const std::string tag = config_tag(r.configs[k]);
        std::string csv = r.grid_param;
        for (auto m : r.modes)
            csv += "," + to_string(m);
        csv += "\n";
        for (std::size_t i = 0; i < r.grid.size(); ++i) {
            csv += short_num(r.grid[i]);
            for (std::size_t m = 0; m < n_modes; ++m)
                csv += "," + num(cell(i, m, k).mse);
            csv += "\n";
        }
        emit("mse_" + tag + ".csv", csv);
        std::string gp = "set datafile separator ','\nset key autotitle columnhead\nset xlabel '" + r.grid_param +
                         "'\nset ylabel 'MSE'\nset terminal pngcairo size 800,500\nset output 'mse_" + tag +
                         ".png'\nplot";
        for (std::size_t m = 0; m < n_modes; ++m)
            gp += std::string(m ? "," : "") + " 'mse_" + tag + ".csv' using 1:" + std::to_string(m + 2) +
                  " with linespoints";
        emit("mse_" + tag + ".gp", gp + "\n");

        for (std::size_t i = 0; i < r.grid.size(); ++i) {
            if (cell(i, 0, k).series.empty())
                continue;
            const std::string base = "conv_" + tag + "_theta" + short_num(r.grid[i]);
            std::string plot = "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'batch'\n"
                               "set ylabel 'confidence'\nset yrange [0:1]\nset boxwidth 0.3\n"
                               "set terminal pngcairo size 800,500\nset output '" +
                               base + ".png'\nplot";
            for (std::size_t m = 0; m < n_modes; ++m) {
                const auto& c = cell(i, m, k);
                if (!c.error.empty())
                    continue;
                const std::string name = base + "_" + to_string(r.modes[m]) + ".csv";
                emit(name, quartiles_csv(c.series));
                plot += std::string(plot.back() == 't' ? "" : ",") + " '" + name +
                        "' using 1:3:2:6:5 with candlesticks whiskerbars title '" + to_string(r.modes[m]) + "'";
            }
            emit(base + ".gp", plot + "\n");
        }
    }
    return written;
}

std::string run_result_to_json(const RunResult& r, const Pmdp& m) {
    ojson doc;
    doc["c"] = r.final.c;
    doc["stderr"] = r.final.stderr_;
    doc["undecided_mass"] = r.final.undecided_mass;
    doc["samples"] = r.final.samples;
    doc["rejected"] = r.final.rejected;
    doc["steps"] = r.steps;
    doc["series"] = r.series;
    auto strategies = ojson::array();
    for (const auto& s : r.strategies)
        strategies.push_back(strategy_json(s, m));
    doc["strategies"] = std::move(strategies);
    doc["posterior"] = ojson::parse(posterior_to_json(r.posterior));
    doc["log"] = r.log;
    return doc.dump(2) + "\n";
}

} // namespace pmdpv
