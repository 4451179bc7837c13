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

#include "pmdpv/pmdpv.h"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

struct Failure {
    pmdpv_status status;
};

void check(pmdpv_status s) {
    if (s != PMDPV_OK)
        throw Failure{s};
}

struct ModelDeleter {
    void operator()(pmdpv_model* m) const { pmdpv_model_free(m); }
};
struct RegionDeleter {
    void operator()(pmdpv_region* r) const { pmdpv_region_free(r); }
};
using Model = std::unique_ptr<pmdpv_model, ModelDeleter>;
using Region = std::unique_ptr<pmdpv_region, RegionDeleter>;

Model load_model(const std::string& path) {
    pmdpv_model* m = nullptr;
    check(pmdpv_model_load(path.c_str(), &m));
    return Model(m);
}

Region load_region(const std::string& path) {
    pmdpv_region* r = nullptr;
    check(pmdpv_region_load(path.c_str(), &r));
    return Region(r);
}

std::string take(char* s) {
    std::string out(s);
    pmdpv_string_free(s);
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void emit(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-") {
        std::fwrite(text.data(), 1, text.size(), stdout);
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot write " + out);
    f << text;
    if (!f)
        throw std::runtime_error("failed writing " + out);
}

std::vector<double> parse_theta(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size())
            throw std::runtime_error("bad parameter value '" + item + "' in --theta");
        out.push_back(v);
    }
    if (out.empty())
        throw std::runtime_error("--theta needs at least one value");
    return out;
}

std::string join(const std::vector<std::string>& xs) {
    std::string out;
    for (const auto& x : xs)
        out += (out.empty() ? "" : ",") + x;
    return out;
}

pmdpv_mode parse_mode(const std::string& m) {
    if (m == "synth")
        return PMDPV_MODE_SYNTH;
    if (m == "dp")
        return PMDPV_MODE_DP;
    if (m == "random-static")
        return PMDPV_MODE_RANDOM_STATIC;
    if (m == "none")
        return PMDPV_MODE_NONE;
    if (m == "fixed")
        return PMDPV_MODE_FIXED;
    throw std::runtime_error("unknown mode '" + m + "'");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Statistical verification of parametric Markov decision processes"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(pmdpv_version()));

    std::uint64_t seed = 0;
    std::size_t mc_samples = 0;
    unsigned threads = 1;
    std::string out;
    auto* seed_opt = app.add_option("--seed", seed, "Random seed")->capture_default_str();
    auto* mc_opt = app.add_option("--mc-samples", mc_samples, "Monte-Carlo samples per confidence estimate");
    app.add_option("--threads", threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--out", out, "Output file (directory for eval); stdout when omitted");

    std::string model_path, prop, region_path, posterior_path, traces_path, spec_path, strategy_path, theta_text;
    std::string semantics = "universal";
    std::string mode = "synth";
    std::string sim_mode = "none";
    std::vector<std::string> ties;
    double tol = 1e-3;
    double budget = 0.02;
    double discount = 0.95;
    std::size_t traces = 10, length = 10, batch = 0, trace_len = 10, samples = 0, design_samples = 0;
    std::size_t max_strategies = 1000000, trials = 0;
    bool exact = false;

    auto* synth = app.add_subcommand("synth", "Synthesise the feasible region map of a property");
    synth->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
    synth->add_option("--prop", prop, "PCTL property, e.g. 'P>=0.5 [ true U \"goal\" ]'")->required();
    synth->add_option("--tol", tol, "Cell width below which refinement stops")->capture_default_str();
    synth->add_option("--budget", budget, "Largest undecided volume fraction")->capture_default_str();
    synth->add_option("--tie", ties, "Tie one parameter to another, e.g. theta2=theta1");
    synth->add_option("--semantics", semantics, "Strategy quantifier")
        ->check(CLI::IsMember({"universal", "min"}))
        ->capture_default_str();

    auto* expand = app.add_subcommand("expand", "Expand a linearly parameterised model");
    expand->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);

    auto* simulate = app.add_subcommand("simulate", "Simulate traces of the model at given parameters");
    simulate->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
    simulate->add_option("--theta", theta_text, "Comma-separated parameter values")->required();
    simulate->add_option("--traces", traces, "Number of traces")->capture_default_str();
    simulate->add_option("--len", length, "Steps per trace")->capture_default_str();
    simulate->add_option("--mode", sim_mode, "Action source")
        ->check(CLI::IsMember({"fixed", "random-static", "none"}))
        ->capture_default_str();
    simulate->add_option("--strategy", strategy_path, "Strategy file for --mode fixed")->check(CLI::ExistingFile);

    auto* infer = app.add_subcommand("infer", "Posterior hyperparameters from traces");
    infer->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
    infer->add_option("--traces", traces_path, "Trace file (JSON lines)")->required()->check(CLI::ExistingFile);

    auto* conf = app.add_subcommand("confidence", "Posterior probability of the feasible region");
    conf->add_option("--region", region_path, "Region map file")->required()->check(CLI::ExistingFile);
    conf->add_option("--posterior", posterior_path, "Posterior file")->required()->check(CLI::ExistingFile);
    conf->add_option("--samples", samples, "Monte-Carlo samples (default 100000)");
    conf->add_flag("--exact", exact, "Integrate over the map cells instead of sampling");
    conf->add_option("--tie", ties, "Ties the region map was synthesised with");

    auto* design = app.add_subcommand("design", "Choose a strategy for the next experiment");
    design->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
    design->add_option("--region", region_path, "Region map file")->required()->check(CLI::ExistingFile);
    design->add_option("--posterior", posterior_path, "Posterior file (priors when omitted)")
        ->check(CLI::ExistingFile);
    design->add_option("--trace-len", trace_len, "Trace length")->capture_default_str();
    design->add_option("--mode", mode, "Design mode")
        ->check(CLI::IsMember({"synth", "dp", "random-static", "none"}))
        ->capture_default_str();
    design->add_option("--discount", discount, "Discount of the offline DP mode")->capture_default_str();
    design->add_option("--max-strategies", max_strategies, "Enumeration cap")->capture_default_str();
    design->add_flag("--exact", exact, "Exact integration for predicted confidence");
    design->add_option("--tie", ties, "Ties the region map was synthesised with");

    auto* run = app.add_subcommand("run", "Full verification loop against a simulated system");
    run->add_option("--model", model_path, "Model file")->required()->check(CLI::ExistingFile);
    auto* run_prop = run->add_option("--prop", prop, "Property, synthesised when no region is given");
    auto* run_region = run->add_option("--region", region_path, "Region map file")->check(CLI::ExistingFile);
    run_prop->excludes(run_region);
    run->add_option("--theta", theta_text, "True system parameters")->required();
    run->add_option("--mode", mode, "Design mode")
        ->check(CLI::IsMember({"synth", "dp", "random-static", "none"}))
        ->capture_default_str();
    run->add_option("--traces", traces, "Data budget in traces")->capture_default_str();
    run->add_option("--len", length, "Steps per trace")->capture_default_str();
    run->add_option("--batch", batch, "Traces per design round, 0 for the whole budget")->capture_default_str();
    run->add_option("--tol", tol, "Synthesis tolerance")->capture_default_str();
    run->add_option("--design-mc-samples", design_samples, "Samples per predicted confidence (default 10000)");
    run->add_option("--tie", ties, "Ties for synthesis");

    auto* eval = app.add_subcommand("eval", "Evaluation grid from an experiment spec");
    eval->add_option("--spec", spec_path, "Experiment spec file")->required()->check(CLI::ExistingFile);
    eval->add_option("--trials", trials, "Override the experiment file's trial count");

    CLI11_PARSE(app, argc, argv);

    const std::string tie_text = join(ties);
    const char* tie_arg = ties.empty() ? nullptr : tie_text.c_str();
    auto mc_or = [&](std::size_t fallback) { return mc_opt->count() ? mc_samples : fallback; };

    try {
        if (synth->parsed()) {
            auto m = load_model(model_path);
            pmdpv_synth_options so;
            pmdpv_synth_options_init(&so);
            so.tol = tol;
            so.budget = budget;
            so.threads = threads;
            so.minimum_semantics = semantics == "min";
            so.ties = tie_arg;
            pmdpv_region* r = nullptr;
            pmdpv_synth_stats st{};
            check(pmdpv_synthesise(m.get(), prop.c_str(), &so, &r, &st));
            Region region(r);
            char* json = nullptr;
            check(pmdpv_region_to_json(region.get(), &json));
            emit(out, take(json));
            std::fprintf(stderr, "cells %zu, evaluations %zu, undecided fraction %.6g, final tolerance %.6g\n",
                         st.cells, st.evaluations, st.undecided_fraction, st.final_tol);
        } else if (expand->parsed()) {
            auto m = load_model(model_path);
            char* json = nullptr;
            check(pmdpv_model_expand(m.get(), &json));
            emit(out, take(json));
        } else if (simulate->parsed()) {
            auto m = load_model(model_path);
            auto theta = parse_theta(theta_text);
            std::string strategy;
            pmdpv_sim_options so;
            pmdpv_sim_options_init(&so);
            so.theta = theta.data();
            so.n_theta = theta.size();
            so.traces = traces;
            so.length = length;
            so.seed = seed;
            so.mode = parse_mode(sim_mode);
            if (so.mode == PMDPV_MODE_FIXED) {
                if (strategy_path.empty())
                    throw std::runtime_error("--mode fixed needs --strategy");
                strategy = read_file(strategy_path);
                so.strategy_json = strategy.c_str();
            }
            char* text = nullptr;
            check(pmdpv_simulate(m.get(), &so, &text));
            emit(out, take(text));
        } else if (infer->parsed()) {
            auto m = load_model(model_path);
            auto text = read_file(traces_path);
            char* json = nullptr;
            check(pmdpv_infer(m.get(), text.c_str(), &json));
            emit(out, take(json));
        } else if (conf->parsed()) {
            auto r = load_region(region_path);
            auto post = read_file(posterior_path);
            pmdpv_confidence_options co;
            pmdpv_confidence_options_init(&co);
            co.samples = samples ? samples : mc_or(100000);
            co.seed = seed;
            co.threads = threads;
            co.exact = exact;
            co.ties = tie_arg;
            char* json = nullptr;
            check(pmdpv_confidence(r.get(), post.c_str(), &co, &json));
            emit(out, take(json));
        } else if (design->parsed()) {
            auto m = load_model(model_path);
            auto r = load_region(region_path);
            std::string post = posterior_path.empty() ? std::string() : read_file(posterior_path);
            pmdpv_design_options d;
            pmdpv_design_options_init(&d);
            d.mode = parse_mode(mode);
            d.trace_length = trace_len;
            d.mc_samples = mc_or(10000);
            d.seed = seed;
            d.threads = threads;
            d.discount = discount;
            d.max_strategies = max_strategies;
            d.exact = exact;
            d.ties = tie_arg;
            char* json = nullptr;
            check(pmdpv_design(m.get(), r.get(), post.empty() ? nullptr : post.c_str(), &d, &json));
            emit(out, take(json));
        } else if (run->parsed()) {
            auto m = load_model(model_path);
            Region region;
            if (!region_path.empty()) {
                region = load_region(region_path);
            } else {
                if (prop.empty())
                    throw std::runtime_error("run needs --prop or --region");
                pmdpv_synth_options so;
                pmdpv_synth_options_init(&so);
                so.tol = tol;
                so.threads = threads;
                so.ties = tie_arg;
                pmdpv_region* r = nullptr;
                check(pmdpv_synthesise(m.get(), prop.c_str(), &so, &r, nullptr));
                region.reset(r);
            }
            auto theta = parse_theta(theta_text);
            pmdpv_run_options ro;
            pmdpv_run_options_init(&ro);
            ro.mode = parse_mode(mode);
            ro.theta = theta.data();
            ro.n_theta = theta.size();
            ro.traces = traces;
            ro.length = length;
            ro.batch = batch;
            ro.seed = seed;
            ro.mc_samples = mc_or(10000);
            ro.design_mc_samples = design_samples ? design_samples : mc_or(10000);
            ro.ties = tie_arg;
            char* json = nullptr;
            check(pmdpv_run(m.get(), region.get(), &ro, &json));
            emit(out, take(json));
        } else if (eval->parsed()) {
            if (out.empty())
                throw std::runtime_error("eval needs --out <directory>");
            pmdpv_eval_options eo;
            pmdpv_eval_options_init(&eo);
            eo.threads = threads;
            eo.override_seed = seed_opt->count() > 0;
            eo.seed = seed;
            eo.mc_samples = mc_opt->count() ? mc_samples : 0;
            eo.trials = trials;
            char* json = nullptr;
            check(pmdpv_eval(spec_path.c_str(), out.c_str(), &eo, &json));
            std::string summary = take(json);
            std::fwrite(summary.data(), 1, summary.size(), stdout);
        }
    } catch (const Failure& f) {
        std::fprintf(stderr, "pmdp-verify: %s: %s\n", pmdpv_status_name(f.status), pmdpv_last_error());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "pmdp-verify: %s\n", e.what());
        return 2;
    }
    return 0;
}
