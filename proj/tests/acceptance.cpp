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

// Acceptance runner: pmdpv_acceptance --criterion N [--cli PATH] [--work DIR]

#include "pmdpv/confidence.hpp"
#include "pmdpv/design.hpp"
#include "pmdpv/harness.hpp"
#include "pmdpv/inference.hpp"
#include "pmdpv/simulate.hpp"
#include "pmdpv/special.hpp"
#include "pmdpv/transform.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

using namespace pmdpv;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Env {
    std::string cli;
    fs::path work;
};

const char* kCompleteProp = R"(P>=0.5 [ true U "complete" ])";

std::string model_path(const std::string& name) {
    return std::string(PMDPV_MODELS_DIR) + "/" + name;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::string quote(const std::string& s) {
    std::string out = "'";
    for (char c : s)
        out += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return out + "'";
}

int shell(const std::string& cmd) {
    return std::system((cmd + " >/dev/null 2>&1").c_str());
}

std::vector<double> random_valid_theta(const Pmdp& m, Rng& rng) {
    const auto space = m.param_space();
    std::vector<double> theta(m.num_params());
    for (;;) {
        for (std::size_t j = 0; j < theta.size(); ++j) {
            const auto& p = m.parameters()[j];
            theta[j] = p.lo + (p.hi - p.lo) * rng.uniform();
        }
        if (space.contains(theta))
            return theta;
    }
}

double ks_two_sample(std::vector<double> x, std::vector<double> y) {
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= v)
            ++i;
        while (j < y.size() && y[j] <= v)
            ++j;
        d = std::max(d, std::abs(double(i) / x.size() - double(j) / y.size()));
    }
    return d;
}

Outcome feasible_set(const Env& env) {
    if (env.cli.empty())
        return {false, "needs --cli"};
    fs::create_directories(env.work);
    const auto region = env.work / "region.json";
    auto t0 = std::chrono::steady_clock::now();
    int rc = shell(quote(env.cli) + " --threads 1 --out " + quote(region.string()) + " synth --model " +
                   quote(model_path("fig4.json")) + " --prop " + quote(kCompleteProp) +
                   " --tol 1e-3 --tie theta2=theta1");
    double dt = seconds_since(t0);
    if (rc != 0)
        return {false, fmt("synth exited with %d", rc)};
    auto map = region_from_json(read_file(region));
    double lo = 1.0, hi = 0.0;
    for (const auto& c : map.cells())
        if (c.verdict == Verdict::Sat) {
            lo = std::min(lo, c.box.lo[0]);
            hi = std::max(hi, c.box.hi[0]);
        }
    bool ok = std::abs(lo - 0.369) <= 0.005 && std::abs(hi - 0.75) <= 0.005 && dt < 30.0;
    return {ok, fmt("satisfied theta1 in [%.5f, %.5f], want 0.369 and 0.75 within 0.005, %.2f s", lo, hi, dt)};
}

Outcome confidence_oracle(const Env&) {
    auto t0 = std::chrono::steady_clock::now();
    Rng rng(20260);
    const std::size_t n = 100000;
    int within = 0;
    for (int run = 0; run < 50; ++run) {
        double a = 0.5 + 20 * rng.uniform(), b = 0.5 + 20 * rng.uniform();
        double x = rng.uniform(), y = rng.uniform();
        double lo = std::min(x, y), hi = std::max(x, y);
        std::vector<Cell> cells;
        if (lo > 0.0)
            cells.push_back(Cell{Box{{0.0}, {lo}}, Verdict::Unsat});
        cells.push_back(Cell{Box{{lo}, {hi}}, Verdict::Sat});
        if (hi < 1.0)
            cells.push_back(Cell{Box{{hi}, {1.0}}, Verdict::Unsat});
        RegionMap map(std::move(cells));
        ConfidenceOptions o;
        o.samples = n;
        o.seed = static_cast<std::uint64_t>(run);
        auto e = confidence(RegionContext{&map, Reduction(1, {}), nullptr},
                            Posterior{{"theta1"}, {BetaPair{a, b}}}, o);
        double truth = confidence_beta_oracle(a, b, lo, hi);
        double se = std::sqrt(truth * (1.0 - truth) / double(n));
        within += std::abs(e.c - truth) <= 4.0 * se;
    }
    double dt = seconds_since(t0);
    return {within >= 48 && dt < 10.0, fmt("%d/50 within 4 standard errors, %.2f s", within, dt)};
}

Outcome expansion_soundness(const Env&) {
    const std::vector<std::pair<std::string, std::vector<std::string>>> table{
        {"fig2.json", {R"(P>=0.5 [ true U "s3" ])", R"(P>=0.5 [ true U "s1" ])", R"(P>=0.5 [ !"s1" U "s2" ])"}},
        {"fig3.json", {R"(P>=0.5 [ true U "s1" ])", R"(P>=0.5 [ true U "s2" ])"}},
        {"fig3_split.json", {R"(P>=0.5 [ true U "s3" ])", R"(P>=0.5 [ true U "s1" ])"}},
        {"fig4.json", {kCompleteProp}},
    };
    Rng rng(31);
    double worst = 0.0;
    int failures = 0, checks = 0;
    for (const auto& [name, props] : table) {
        auto m = load_model(model_path(name));
        auto e = expand(m);
        for (int i = 0; i < 100; ++i) {
            auto theta = random_valid_theta(m, rng);
            for (const auto& text : props) {
                double diff = 1.0;
                failures += !verify_equivalence(m, e, theta, parse_property(text), Quantifier::Minimum, 1e-6, &diff);
                worst = std::max(worst, diff);
                ++checks;
            }
        }
    }
    return {failures == 0 && worst <= 1e-6, fmt("%d checks, max difference %.3g", checks, worst)};
}

Outcome inference_correctness(const Env&) {
    auto m = load_model(model_path("fig4.json"));
    SimConfig cfg;
    cfg.theta = {0.55, 0.35};
    cfg.traces = 30;
    cfg.length = 10;
    cfg.seed = 4;
    cfg.mode = ActionMode::NoStrategy;
    auto counts = extract_counts(m, simulate_traces(m, cfg));
    auto prior = Posterior::prior_of(m);
    auto pc = parameter_counts<std::int64_t>(m, std::span<const std::int64_t>(counts));
    const auto identity = ExpandedModel::identity(m);
    CompletionSampler sampler(identity, counts, prior);
    auto completed = sampler.samples(10000, 17);
    auto direct = posterior_samples(update_posterior(prior, pc), 10000, 18);
    double ks = 0.0;
    for (std::size_t j = 0; j < m.num_params(); ++j) {
        std::vector<double> xs, ys;
        for (const auto& s : completed)
            xs.push_back(s.theta[j]);
        for (const auto& d : direct)
            ys.push_back(d[j]);
        ks = std::max(ks, ks_two_sample(xs, ys));
    }

    int covered = 0, total = 0;
    std::int64_t fewest = -1;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        cfg.traces = 3000;
        cfg.length = 25;
        cfg.seed = seed;
        auto edges = extract_counts(m, simulate_traces(m, cfg));
        auto c = parameter_counts<std::int64_t>(m, std::span<const std::int64_t>(edges));
        auto post = update_posterior(prior, c);
        for (std::size_t j = 0; j < m.num_params(); ++j) {
            std::int64_t seen = c.pos[j] + c.neg[j];
            fewest = fewest < 0 ? seen : std::min(fewest, seen);
            const auto [a, b] = post.params[j];
            double mean = a / (a + b);
            double sd = std::sqrt(a * b / ((a + b) * (a + b) * (a + b + 1)));
            covered += std::abs(mean - cfg.theta[j]) <= 3 * sd;
            ++total;
        }
    }
    bool ok = ks < 0.02 && fewest >= 2000 && covered * 100 >= total * 99;
    return {ok, fmt("KS %.4f, calibration %d/%d covered, fewest counts %lld", ks, covered, total,
                    static_cast<long long>(fewest))};
}

Outcome fig3_discrimination(const Env&) {
    auto m = load_model(model_path("fig3.json"));
    auto e = expand(m);
    auto map = synthesise_region(m, parse_property(R"(P<=0.5 [ true U "s1" ])"));
    auto space = m.param_space();
    DesignContext ctx{&m, &e, RegionContext{&map, Reduction(m.num_params(), {}), &space}};
    auto prior = Posterior::prior_of(m);
    auto s0 = *m.find_state("s0");
    auto a2 = *m.find_choice(s0, *m.find_action("alpha2"));
    auto a3 = *m.find_choice(s0, *m.find_action("alpha3"));
    int picks = 0, ties = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        DesignOptions o;
        o.seed = seed;
        picks += synthesise_strategy(ctx, prior, o).chosen.choice[s0] == a2;
        auto d = offline_dp_strategy(ctx, prior, o);
        auto& t = d.ties[s0];
        ties += std::find(t.begin(), t.end(), a2) != t.end() &&
                std::find(t.begin(), t.end(), a3) != t.end();
    }
    return {picks == 20 && ties == 20, fmt("alpha2 chosen %d/20, DP tie alpha2/alpha3 %d/20", picks, ties)};
}

ExperimentSpec fig5_setup() {
    auto spec = load_experiment_spec(model_path("fig5_spec.json"));
    spec.modes = {StrategyMode::Synth, StrategyMode::None};
    spec.batch = 0;
    return spec;
}

Outcome mse_ordering(const Env&) {
    auto t0 = std::chrono::steady_clock::now();
    auto spec = fig5_setup();
    spec.grid = {0.15, 0.2, 0.6, 0.65, 0.7};
    spec.configs = {TraceConfig{10, 10}};
    spec.trials = 100;
    auto r = evaluate_grid(spec, prepare_problem(spec));
    std::string detail;
    int ordered = 0;
    for (std::size_t i = 0; i < spec.grid.size(); ++i) {
        double synth = -1.0, none = -1.0;
        for (const auto& c : r.cells) {
            if (c.theta_index != i || !c.error.empty())
                continue;
            (c.mode == StrategyMode::Synth ? synth : none) = c.mse;
        }
        ordered += synth >= 0.0 && none >= 0.0 && synth <= none;
        detail += fmt("%g: %.4f vs %.4f; ", spec.grid[i], synth, none);
    }
    double dt = seconds_since(t0);
    return {ordered >= 4 && dt < 600.0, fmt("%d/5 ordered (", ordered) + detail + fmt("%.1f s)", dt)};
}

Outcome convergence(const Env&) {
    auto spec = fig5_setup();
    spec.grid = {0.7};
    spec.configs = {TraceConfig{20, 10}};
    spec.trials = 50;
    auto r = evaluate_grid(spec, prepare_problem(spec));
    double median = -1.0, iqr_synth = -1.0, iqr_none = -1.0;
    for (const auto& c : r.cells) {
        if (!c.error.empty() || c.outcomes.empty())
            continue;
        double iqr = quantile(c.outcomes, 0.75) - quantile(c.outcomes, 0.25);
        if (c.mode == StrategyMode::Synth) {
            median = quantile(c.outcomes, 0.5);
            iqr_synth = iqr;
        } else {
            iqr_none = iqr;
        }
    }
    bool ok = median >= 0.9 && iqr_synth >= 0.0 && iqr_none >= 0.0 && iqr_synth <= iqr_none;
    return {ok, fmt("synth median %.4f IQR %.4f, no-strategy IQR %.4f", median, iqr_synth, iqr_none)};
}

Outcome determinism(const Env& env) {
    if (env.cli.empty())
        return {false, "needs --cli"};
    fs::remove_all(env.work);
    fs::create_directories(env.work);
    const auto strategy = env.work / "strategy.json";
    std::ofstream(strategy) << R"({"S0": "b", "S1": "e"})" << '\n';
    const auto spec = env.work / "spec.json";
    std::ofstream(spec) << R"({"model": ")" << model_path("fig4.json")
                        << R"(", "property": "P>=0.5 [ true U \"complete\" ]",)"
                        << R"( "grid": {"param": "theta1", "values": [0.3, 0.6]}, "tie": ["theta2=theta1"],)"
                        << R"( "configs": [[2, 3]], "modes": ["synth", "random-static", "none"], "trials": 2,)"
                        << R"( "mc_samples": 300, "design_mc_samples": 300, "tol": 0.01})" << '\n';
    const std::string fig4 = quote(model_path("fig4.json"));
    for (const char* run : {"a", "b"}) {
        const fs::path dir = env.work / run;
        fs::create_directories(dir);
        auto out = [&](const char* name) { return quote((dir / name).string()); };
        const std::string base = quote(env.cli) + " --seed 5 --threads 2 --mc-samples 2000 --out ";
        const std::vector<std::string> cmds{
            base + out("region.json") + " synth --model " + fig4 + " --prop " + quote(kCompleteProp) +
                " --tol 0.01 --tie theta2=theta1",
            base + out("region2.json") + " synth --model " + fig4 + " --prop " + quote(kCompleteProp) + " --tol 0.02",
            base + out("fig2_expanded.json") + " expand --model " + quote(model_path("fig2.json")),
            base + out("fig3_expanded.json") + " expand --model " + quote(model_path("fig3.json")),
            base + out("traces.jsonl") + " simulate --model " + fig4 + " --theta 0.6,0.3 --traces 20 --len 8",
            base + out("fixed.jsonl") + " simulate --model " + fig4 +
                " --theta 0.6,0.3 --traces 5 --len 8 --mode fixed --strategy " + quote(strategy.string()),
            base + out("posterior.json") + " infer --model " + fig4 + " --traces " + out("traces.jsonl"),
            base + out("confidence.json") + " confidence --region " + out("region2.json") + " --posterior " +
                out("posterior.json"),
            base + out("design.json") + " design --model " + fig4 + " --region " + out("region2.json") +
                " --posterior " + out("posterior.json") + " --trace-len 5",
            base + out("design_dp.json") + " design --model " + fig4 + " --region " + out("region2.json") +
                " --trace-len 3 --mode dp",
            base + out("run.json") + " run --model " + fig4 + " --region " + out("region.json") +
                " --tie theta2=theta1 --theta 0.7,0.7 --traces 4 --len 5 --batch 2 --design-mc-samples 500",
            base + out("eval") + " eval --spec " + quote(spec.string()),
        };
        for (const auto& cmd : cmds)
            if (int rc = shell(cmd); rc != 0)
                return {false, fmt("exit %d from: ", rc) + cmd};
    }
    int files = 0;
    for (const auto& entry : fs::recursive_directory_iterator(env.work / "a")) {
        if (!entry.is_regular_file())
            continue;
        auto rel = fs::relative(entry.path(), env.work / "a");
        auto first = read_file(entry.path());
        if (first.empty() || first != read_file(env.work / "b" / rel))
            return {false, rel.string() + " differs or is empty"};
        ++files;
    }
    return {files >= 14, fmt("%d output files identical across runs", files)};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pmdp-verify acceptance criteria"};
    int criterion = 0;
    Env env;
    std::string work = "acceptance_work";
    app.add_option("--criterion", criterion, "Criterion number")->required()->check(CLI::Range(1, 8));
    app.add_option("--cli", env.cli, "pmdp-verify executable");
    app.add_option("--work", work, "Scratch directory");
    CLI11_PARSE(app, argc, argv);
    env.work = work;

    const std::vector<std::function<Outcome(const Env&)>> criteria{
        feasible_set,        confidence_oracle, expansion_soundness, inference_correctness,
        fig3_discrimination, mse_ordering,      convergence,         determinism,
    };
    Outcome o;
    try {
        o = criteria[static_cast<std::size_t>(criterion - 1)](env);
    } catch (const std::exception& e) {
        o = {false, std::string("error: ") + e.what()};
    }
    std::printf("criterion %d: %s %s\n", criterion, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    return o.pass ? 0 : 1;
}
