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

#include "doctest.h"
#include "support.hpp"

#include "pmdpv/error.hpp"
#include "pmdpv/harness.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace pmdpv;
using pmdpv::test::model_path;

namespace {

std::string small_spec(const std::string& extra = "") {
    return std::string(R"({"model": "fig4.json", "property": "P>=0.5 [ true U \"complete\" ]",
      "grid": {"param": "theta1", "values": [0.2, 0.5]}, "tie": ["theta2=theta1"],
      "configs": [[2, 3], {"traces": 1, "len": 4}], "modes": ["synth", "random-static", "none"],
      "trials": 3, "seed": 11, "mc_samples": 500, "design_mc_samples": 500, "tol": 0.01)") +
           extra + "}";
}

struct Setup {
    ExperimentSpec spec;
    EvalProblem problem;

    explicit Setup(const std::string& text)
        : spec(parse_experiment_spec(text, PMDPV_MODELS_DIR)), problem(prepare_problem(spec)) {}

    DesignContext context() const {
        return DesignContext{&problem.model, &problem.expanded,
                             RegionContext{&problem.map, problem.reduction, &problem.reduced_space}};
    }
};

const Setup& fig4() {
    static const Setup s(small_spec());
    return s;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

} // namespace

TEST_CASE("mean squared error arithmetic") {
    CHECK(mean_squared_error(1, {0.8}) == doctest::Approx(0.04).epsilon(1e-12));
    CHECK(mean_squared_error(0, {0.0, 1.0}) == 0.5);
    CHECK_THROWS_AS(mean_squared_error(1, {}), ValidationError);
}

TEST_CASE("strategy mode names") {
    for (auto m : {StrategyMode::Synth, StrategyMode::Dp, StrategyMode::RandomStatic, StrategyMode::None})
        CHECK(parse_strategy_mode(to_string(m)) == m);
    CHECK_THROWS_AS(parse_strategy_mode("greedy"), ParseError);
}

TEST_CASE("experiment spec parsing") {
    auto s = parse_experiment_spec(R"({"model": "fig4.json", "property": "P>=0.5 [ true U \"complete\" ]",
      "grid": {"param": "theta1", "from": 0.15, "to": 0.75, "step": 0.05}, "configs": [[10, 2], [10, 10]],
      "modes": ["synth", "none"], "tie": ["theta2=theta1"]})",
                                   PMDPV_MODELS_DIR);
    REQUIRE(s.grid.size() == 13);
    CHECK(s.grid.front() == 0.15);
    CHECK(s.grid[5] == 0.4);
    CHECK(s.grid.back() == 0.75);
    CHECK(s.configs == std::vector<TraceConfig>{{10, 2}, {10, 10}});
    CHECK(s.trials == 100);
    CHECK(s.model_path == model_path("fig4.json"));

    CHECK_THROWS_AS(parse_experiment_spec(small_spec(R"(, "colour": "red")"), PMDPV_MODELS_DIR), ParseError);
    CHECK_THROWS_AS(parse_experiment_spec(R"({"model": "fig4.json", "property": "P>=0.5 [ true U \"c\" ]",
      "grid": {"param": "theta1", "values": []}, "configs": [[1, 1]], "modes": ["none"]})",
                                          PMDPV_MODELS_DIR),
                    ValidationError);
    CHECK_THROWS_AS(parse_experiment_spec(R"({"model": "missing.json", "property": "P>=0.5 [ true U \"c\" ]",
      "grid": {"param": "theta1", "values": [0.5]}, "configs": [[1, 1]], "modes": ["none"]})",
                                          PMDPV_MODELS_DIR),
                    ValidationError);
    CHECK_THROWS_AS(parse_experiment_spec("[", PMDPV_MODELS_DIR), ParseError);
}

TEST_CASE("grid points honour ties and validity") {
    const auto& s = fig4();
    CHECK(grid_point(s.spec, s.problem.model, 0.6) == std::vector<double>{0.6, 0.6});
    CHECK_THROWS_AS(grid_point(s.spec, s.problem.model, 0.95), ValidationError);
}

TEST_CASE("ground truth") {
    const auto& s = fig4();
    RegionContext region{&s.problem.map, s.problem.reduction, &s.problem.reduced_space};
    CHECK(ground_truth(region, std::vector<double>{0.5, 0.5}).value == 1);
    CHECK(ground_truth(region, std::vector<double>{0.15, 0.15}).value == 0);
    CHECK_FALSE(ground_truth(region, std::vector<double>{0.5, 0.5}).boundary);

    RegionMap line({Cell{Box{{0.0}, {0.369}}, Verdict::Unsat}, Cell{Box{{0.369}, {0.75}}, Verdict::Sat},
                    Cell{Box{{0.75}, {1.0}}, Verdict::Invalid}});
    RegionContext ctx{&line, Reduction(1, {}), nullptr};
    std::vector<double> edge{0.369};
    auto g = ground_truth(ctx, edge);
    CHECK(g.boundary);
    CHECK(g.value == (line.membership(edge) == Verdict::Sat ? 1 : 0));
    CHECK(ground_truth(ctx, edge).value == g.value);
    CHECK_FALSE(ground_truth(ctx, std::vector<double>{0.5}).boundary);
    CHECK_THROWS_AS(ground_truth(ctx, std::vector<double>{0.9}), ValidationError);

    RegionMap open({Cell{Box{{0.0}, {0.5}}, Verdict::Unknown}, Cell{Box{{0.5}, {1.0}}, Verdict::Sat}});
    RegionContext uctx{&open, Reduction(1, {}), nullptr};
    try {
        ground_truth(uctx, std::vector<double>{0.25});
        FAIL("expected an undecided-cell error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("smaller tolerance") != std::string::npos);
    }
}

TEST_CASE("zero budget returns the prior confidence") {
    const auto& s = fig4();
    RunOptions opt;
    opt.theta = {0.7, 0.7};
    opt.traces = 0;
    opt.mc_samples = 100000;
    auto r = run_verification(s.context(), opt);
    REQUIRE(r.series.size() == 1);
    CHECK(r.steps == 0);
    CHECK(r.posterior == Posterior::prior_of(s.problem.model));
    auto exact = confidence_exact(s.context().region, Posterior::prior_of(s.problem.model)).c;
    CHECK(std::abs(r.final.c - exact) < 4 * std::sqrt(exact * (1 - exact) / 1e5));
}

TEST_CASE("budget accounting is identical across modes") {
    const auto& s = fig4();
    for (auto mode : {StrategyMode::Synth, StrategyMode::Dp, StrategyMode::RandomStatic, StrategyMode::None}) {
        for (std::size_t batch : {0, 1, 3}) {
            RunOptions opt;
            opt.mode = mode;
            opt.theta = {0.6, 0.6};
            opt.traces = 5;
            opt.length = 7;
            opt.batch = batch;
            opt.mc_samples = 500;
            opt.design_mc_samples = 500;
            opt.seed = 3;
            auto r = run_verification(s.context(), opt);
            CHECK(r.steps == 35);
            CHECK(r.series.size() == 6);
            std::int64_t total = 0;
            for (auto c : r.counts)
                total += c;
            CHECK(total == 35);
            if (mode == StrategyMode::Synth || mode == StrategyMode::Dp)
                CHECK(r.strategies.size() == 5);
            CHECK(run_result_to_json(r, s.problem.model) == run_result_to_json(run_verification(s.context(), opt),
                                                                                s.problem.model));
        }
    }
}

TEST_CASE("confidence heads to the truth with data") {
    const auto& s = fig4();
    RunOptions low;
    low.mode = StrategyMode::None;
    low.theta = {0.2, 0.2};
    low.traces = 100;
    low.length = 10;
    low.seed = 1;
    low.record_series = false;
    CHECK(run_verification(s.context(), low).final.c < 0.05);

    RunOptions high;
    high.mode = StrategyMode::Synth;
    high.theta = {0.7, 0.7};
    high.traces = 20;
    high.length = 10;
    high.seed = 1;
    auto r = run_verification(s.context(), high);
    CHECK(r.final.c > 0.9);
    CHECK(r.series.size() == 21);
    auto json = run_result_to_json(r, s.problem.model);
    for (const char* key : {"\"c\"", "\"series\"", "\"strategies\"", "\"posterior\"", "\"log\""})
        CHECK(json.find(key) != std::string::npos);
}

TEST_CASE("grid evaluation is reproducible and self-consistent") {
    const auto& s = fig4();
    auto a = evaluate_grid(s.spec, s.problem, 1);
    auto b = evaluate_grid(s.spec, s.problem, 3);
    auto csv = results_csv(a);
    CHECK(csv == results_csv(b));
    CHECK(csv.rfind("theta,mode,traces,len,trial,confidence,mse_cell\n", 0) == 0);
    REQUIRE(a.cells.size() == 2 * 3 * 2);
    std::size_t rows = 0;
    for (char ch : csv)
        rows += ch == '\n';
    CHECK(rows == 1 + 2 * 3 * 2 * 3);
    for (const auto& c : a.cells) {
        CHECK(c.error.empty());
        REQUIRE(c.outcomes.size() == 3);
        CHECK(c.mse == mean_squared_error(c.truth.value, c.outcomes));
    }
    CHECK(a.cells[0].theta == 0.2);
    CHECK(a.cells[0].truth.value == 0);
    CHECK(a.cells.back().truth.value == 1);
}

TEST_CASE("quantiles and box-plot summaries") {
    CHECK(quantile({1, 2, 3, 4}, 0.5) == 2.5);
    CHECK(quantile({1, 2, 3, 4}, 0.25) == 1.75);
    CHECK(quantile({5}, 0.9) == 5);
    CHECK_THROWS_AS(quantile({}, 0.5), ValidationError);
    auto csv = quartiles_csv({{0.1, 0.5}, {0.3, 0.7}, {0.2, 0.9}});
    CHECK(csv.rfind("batch,min,q1,median,q3,max\n", 0) == 0);
    CHECK(csv.find("\n0,0.1") != std::string::npos);
    CHECK_THROWS_AS(quartiles_csv({}), ValidationError);
}

TEST_CASE("plot files") {
    Setup s(small_spec(R"(, "series": true)"));
    auto r = evaluate_grid(s.spec, s.problem, 1);
    auto dir = std::filesystem::temp_directory_path() / "pmdpv_test_plots";
    std::filesystem::remove_all(dir);
    auto files = emit_plots(r, dir.string());
    for (const char* name : {"results.csv", "mse_t02_l03.csv", "mse_t02_l03.gp", "mse_t01_l04.csv"})
        CHECK(std::filesystem::exists(dir / name));
    bool conv = false;
    for (const auto& f : files)
        conv = conv || std::filesystem::path(f).filename().string().rfind("conv_t02_l03_theta", 0) == 0;
    CHECK(conv);
    CHECK(slurp(dir / "results.csv") == results_csv(r));
    auto first = slurp(dir / "mse_t02_l03.csv");
    emit_plots(r, dir.string());
    CHECK(slurp(dir / "mse_t02_l03.csv") == first);
    std::filesystem::remove_all(dir);
    CHECK_THROWS_AS(emit_plots(EvalResult{}, dir.string()), ValidationError);
}
