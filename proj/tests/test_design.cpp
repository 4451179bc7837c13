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

#include "pmdpv/design.hpp"
#include "pmdpv/error.hpp"

#include <cmath>
#include <numeric>

using namespace pmdpv;
using pmdpv::test::model_path;

namespace {

struct Problem {
    Pmdp model;
    ExpandedModel expanded;
    RegionMap map;
    ParamSpace space;

    Problem(Pmdp m, const Property& prop)
        : model(std::move(m)), expanded(expand(model)), map(synthesise_region(model, prop)),
          space(model.param_space()) {}

    DesignContext context() const {
        return DesignContext{&model, &expanded, RegionContext{&map, Reduction(model.num_params(), {}), &space}};
    }
};

const Problem& fig3() {
    static const Problem p(load_model(model_path("fig3.json")), parse_property(R"(P<=0.5 [ true U "s1" ])"));
    return p;
}

const Problem& fig4() {
    static const Problem p(load_model(model_path("fig4.json")), parse_property(R"(P>=0.5 [ true U "complete" ])"));
    return p;
}

// Every step is a theta1 or 1-theta1 transition.
const char* kFlip = R"({
  "parameters": [{"name": "theta1", "bounds": [0, 1]}],
  "states": [{"name": "s0", "labels": []}, {"name": "s1", "labels": ["g"]}],
  "initial": {"s0": "1"},
  "transitions": [
    {"from": "s0", "action": "a", "to": "s0", "prob": "theta1"},
    {"from": "s0", "action": "a", "to": "s1", "prob": "1 - theta1"},
    {"from": "s1", "action": "a", "to": "s1", "prob": "theta1"},
    {"from": "s1", "action": "a", "to": "s0", "prob": "1 - theta1"}
  ]
})";

// Two actions with identical, parameter-free effects.
const char* kTwins = R"({
  "parameters": [{"name": "theta1", "bounds": [0, 1]}],
  "states": [{"name": "s0", "labels": []}, {"name": "s1", "labels": ["g"]}, {"name": "s2", "labels": []}],
  "initial": {"s0": "1"},
  "transitions": [
    {"from": "s0", "action": "x", "to": "s1", "prob": "1"},
    {"from": "s0", "action": "y", "to": "s1", "prob": "1"},
    {"from": "s1", "action": "z", "to": "s1", "prob": "theta1"},
    {"from": "s1", "action": "z", "to": "s2", "prob": "1 - theta1"},
    {"from": "s2", "action": "z", "to": "s2", "prob": "1"}
  ]
})";

std::string action_at(const Pmdp& m, const Strategy& pi, std::string_view state) {
    auto s = *m.find_state(state);
    return m.actions()[m.choices(s)[pi.choice[s]].action];
}

Strategy with_choice(const Pmdp& m, std::string_view state, std::string_view action) {
    Strategy pi{std::vector<std::size_t>(m.num_states(), 0)};
    auto s = *m.find_state(state);
    pi.choice[s] = *m.find_choice(s, *m.find_action(action));
    return pi;
}

} // namespace

TEST_CASE("expected parameter values") {
    CHECK(expected_param_values(Posterior{{"t"}, {BetaPair{1, 1}}}) == std::vector<double>{0.5});
    CHECK(expected_param_values(Posterior{{"t"}, {BetaPair{4, 2}}})[0] == doctest::Approx(2.0 / 3.0));
    CHECK(expected_param_values(Posterior{{"t"}, {BetaPair{31, 71}}})[0] == doctest::Approx(31.0 / 102.0));
}

TEST_CASE("design point falls back to the valid region") {
    const auto& m = fig4().model;
    auto mean = design_point(m, Posterior::prior_of(m), 1);
    CHECK(mean == std::vector<double>{0.5, 0.5});
    Posterior skew{m.parameter_names(), {BetaPair{9, 1}, BetaPair{1, 1}}};
    auto p = design_point(m, skew, 1);
    CHECK(m.param_space().contains(p));
    CHECK(design_point(m, skew, 1) == p);
}

TEST_CASE("expected counts on a flip chain") {
    auto m = parse_model(kFlip);
    auto e = expand(m);
    auto map = RegionMap({Cell{Box{{0.0}, {1.0}}, Verdict::Sat}});
    DesignContext ctx{&m, &e, RegionContext{&map, Reduction(1, {}), nullptr}};
    Strategy pi{{0, 0}};
    auto five = expected_trace_counts(ctx, pi, Posterior::prior_of(m), 5);
    CHECK(five.params.pos[0] == doctest::Approx(2.5));
    CHECK(five.params.neg[0] == doctest::Approx(2.5));
    auto one = expected_trace_counts(ctx, pi, Posterior{{"theta1"}, {BetaPair{4, 2}}}, 1);
    CHECK(one.params.pos[0] == doctest::Approx(2.0 / 3.0));
    CHECK(one.params.neg[0] == doctest::Approx(1.0 / 3.0));
    CHECK(one.theta[0] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("alpha3 traces carry no theta2 information") {
    const auto& p = fig3();
    auto ctx = p.context();
    auto prior = Posterior::prior_of(p.model);
    auto c3 = expected_trace_counts(ctx, with_choice(p.model, "s0", "alpha3"), prior, 10);
    CHECK(c3.params.pos[1] == 0.0);
    CHECK(c3.params.neg[1] == 0.0);
    CHECK(c3.params.pos[0] + c3.params.neg[0] == doctest::Approx(9.0));
    auto c2 = expected_trace_counts(ctx, with_choice(p.model, "s0", "alpha2"), prior, 10);
    CHECK(c2.params.pos[0] + c2.params.neg[0] > 0.0);
    CHECK(c2.params.pos[1] + c2.params.neg[1] > 0.0);
}

TEST_CASE("per-step expected totals are conserved") {
    for (const Problem* p : {&fig3(), &fig4()}) {
        auto ctx = p->context();
        Rng rng(21);
        for (std::size_t n : {1, 7, 100, 1000}) {
            auto pi = random_strategy(p->model, rng);
            auto c = expected_trace_counts(ctx, pi, Posterior::prior_of(p->model), n);
            REQUIRE(c.step_totals.size() == n);
            for (double t : c.step_totals)
                CHECK(std::abs(t - 1.0) <= 1e-9);
            double total = std::accumulate(c.edges.begin(), c.edges.end(), 0.0);
            CHECK(std::abs(total - static_cast<double>(n)) <= 1e-9 * n);
        }
    }
}

TEST_CASE("predicted confidence") {
    auto m = parse_model(kFlip);
    auto e = expand(m);
    auto map = RegionMap({Cell{Box{{0.0}, {0.369}}, Verdict::Unsat}, Cell{Box{{0.369}, {0.75}}, Verdict::Sat},
                          Cell{Box{{0.75}, {1.0}}, Verdict::Unsat}});
    DesignContext ctx{&m, &e, RegionContext{&map, Reduction(1, {}), nullptr}};
    auto prior = Posterior::prior_of(m);
    DesignOptions opt;
    opt.mc_samples = 100000;
    opt.seed = 3;
    PredictedCounts zero;
    zero.params = {{0.0}, {0.0}};
    for (auto how : {Integration::MonteCarlo, Integration::Exact})
        CHECK(predicted_confidence(ctx, prior, zero, how, opt) == posterior_confidence(ctx, prior, how, opt));
    PredictedCounts big;
    big.params = {{5e5}, {5e5}};
    CHECK(predicted_confidence(ctx, prior, big, Integration::MonteCarlo, opt) == 1.0);
    CHECK(predicted_confidence(ctx, prior, big, Integration::Exact, opt) == doctest::Approx(1.0));
}

TEST_CASE("Fig. 3 strategies predict different confidences") {
    const auto& p = fig3();
    auto ctx = p.context();
    auto prior = Posterior::prior_of(p.model);
    DesignOptions opt;
    auto c2 = predicted_confidence(ctx, prior, expected_trace_counts(ctx, with_choice(p.model, "s0", "alpha2"), prior, 10),
                                   Integration::Exact, opt);
    auto c3 = predicted_confidence(ctx, prior, expected_trace_counts(ctx, with_choice(p.model, "s0", "alpha3"), prior, 10),
                                   Integration::Exact, opt);
    CHECK(c2 != doctest::Approx(c3));
}

TEST_CASE("synthesised strategy on Fig. 3 plays alpha2") {
    const auto& p = fig3();
    auto ctx = p.context();
    auto prior = Posterior::prior_of(p.model);
    DesignOptions opt;
    opt.seed = 5;
    auto r = synthesise_strategy(ctx, prior, opt);
    CHECK(action_at(p.model, r.chosen, "s0") == "alpha2");
    CHECK(r.strategies == 3);
    CHECK(r.gain == confidence_gain(r.c_hat, r.c_current));
    REQUIRE(r.evaluated.size() == 3);
    for (const auto& row : r.evaluated)
        CHECK(row.gain == confidence_gain(row.c_hat, r.c_current));
    CHECK(gain_report_to_json(synthesise_strategy(ctx, prior, opt), p.model) == gain_report_to_json(r, p.model));
    auto four = opt;
    four.threads = 4;
    CHECK(gain_report_to_json(synthesise_strategy(ctx, prior, four), p.model) == gain_report_to_json(r, p.model));
}

TEST_CASE("single-strategy model") {
    auto m = parse_model(kFlip);
    auto e = expand(m);
    auto map = RegionMap({Cell{Box{{0.0}, {0.5}}, Verdict::Unsat}, Cell{Box{{0.5}, {1.0}}, Verdict::Sat}});
    DesignContext ctx{&m, &e, RegionContext{&map, Reduction(1, {}), nullptr}};
    auto r = synthesise_strategy(ctx, Posterior::prior_of(m), DesignOptions{});
    CHECK(r.strategies == 1);
    CHECK(r.chosen.choice == std::vector<std::size_t>{0, 0});
    CHECK(r.gain == confidence_gain(r.c_hat, r.c_current));
    auto d = offline_dp_strategy(ctx, Posterior::prior_of(m), DesignOptions{});
    CHECK(d.chosen == r.chosen);
    Rng rng(1);
    CHECK(random_strategy(m, rng) == r.chosen);
}

TEST_CASE("identical predicted posteriors tie lexicographically") {
    auto m = parse_model(kTwins);
    auto e = expand(m);
    auto map = RegionMap({Cell{Box{{0.0}, {0.5}}, Verdict::Unsat}, Cell{Box{{0.5}, {1.0}}, Verdict::Sat}});
    DesignContext ctx{&m, &e, RegionContext{&map, Reduction(1, {}), nullptr}};
    auto r = synthesise_strategy(ctx, Posterior::prior_of(m), DesignOptions{});
    CHECK(r.strategies == 2);
    CHECK(r.distinct == 2);
    REQUIRE(r.tied.size() == 2);
    CHECK(r.tied[0] == r.chosen);
    CHECK(action_at(m, r.chosen, "s0") == "x");
    CHECK(action_at(m, r.tied[1], "s0") == "y");
}

TEST_CASE("enumeration cap") {
    const auto& p = fig4();
    DesignOptions opt;
    opt.max_strategies = 4;
    CHECK(strategy_count(p.model) == 8);
    CHECK_THROWS_AS(synthesise_strategy(p.context(), Posterior::prior_of(p.model), opt), LimitError);
}

TEST_CASE("offline DP on Fig. 3 ties alpha2 and alpha3") {
    const auto& p = fig3();
    auto ctx = p.context();
    auto s0 = *p.model.find_state("s0");
    auto a2 = *p.model.find_choice(s0, *p.model.find_action("alpha2"));
    auto a3 = *p.model.find_choice(s0, *p.model.find_action("alpha3"));
    auto r = offline_dp_strategy(ctx, Posterior::prior_of(p.model), DesignOptions{});
    CHECK(r.rewards[s0][a2] == r.rewards[s0][a3]);
    CHECK(r.q[s0][a2] == doctest::Approx(r.q[s0][a3]).epsilon(1e-12));
    REQUIRE(r.ties[s0].size() == 2);
    CHECK(r.ties[s0] == std::vector<std::size_t>{a2, a3});
    CHECK(r.chosen.choice[s0] == a2);
    for (std::size_t s = 0; s < p.model.num_states(); ++s)
        CHECK(r.values[s] == doctest::Approx(*std::max_element(r.q[s].begin(), r.q[s].end())));
}

TEST_CASE("vanishing discount is greedy in the immediate gain") {
    for (const Problem* p : {&fig3(), &fig4()}) {
        DesignOptions opt;
        opt.discount = 1e-9;
        auto r = offline_dp_strategy(p->context(), Posterior::prior_of(p->model), opt);
        for (std::size_t s = 0; s < p->model.num_states(); ++s) {
            auto best = *std::max_element(r.rewards[s].begin(), r.rewards[s].end());
            CHECK(r.rewards[s][r.chosen.choice[s]] == doctest::Approx(best).epsilon(1e-6));
        }
    }
    DesignOptions bad;
    bad.discount = 1.0;
    CHECK_THROWS_AS(offline_dp_strategy(fig3().context(), Posterior::prior_of(fig3().model), bad), ValidationError);
}

TEST_CASE("reference recursion at horizon one is the best immediate gain") {
    const auto& p = fig4();
    auto ctx = p.context();
    auto prior = Posterior::prior_of(p.model);
    auto r = offline_dp_strategy(ctx, prior, DesignOptions{});
    auto g = reference_gain(ctx, prior, 1, DesignOptions{});
    auto s0 = p.model.initial().front().first;
    CHECK(g.value == doctest::Approx(*std::max_element(r.rewards[s0].begin(), r.rewards[s0].end())));
    CHECK(r.rewards[s0][g.first_choice] == doctest::Approx(g.value));
    auto g3 = reference_gain(ctx, prior, 3, DesignOptions{});
    CHECK(std::isfinite(g3.value));
    CHECK_THROWS_AS(reference_gain(ctx, prior, 4, DesignOptions{}), LimitError);
    CHECK_THROWS_AS(reference_gain(ctx, prior, 0, DesignOptions{}), LimitError);
}

TEST_CASE("baselines") {
    const auto& m = fig3().model;
    Rng a(77), b(77);
    for (int i = 0; i < 10; ++i)
        CHECK(random_strategy(m, a) == random_strategy(m, b));

    SimConfig cfg;
    cfg.theta = {0.2, 0.2};
    cfg.traces = 10000;
    cfg.length = 1;
    cfg.seed = 13;
    cfg.mode = ActionMode::NoStrategy;
    std::vector<int> hits(m.actions().size(), 0);
    for (const auto& t : simulate_traces(m, cfg))
        ++hits[t.steps[0].action];
    for (const char* name : {"alpha1", "alpha2", "alpha3"})
        CHECK(std::abs(hits[*m.find_action(name)] / 10000.0 - 1.0 / 3.0) <= 0.02);

    cfg.mode = ActionMode::RandomStatic;
    cfg.traces = 20;
    cfg.length = 4;
    CHECK(simulate_traces(m, cfg) == simulate_traces(m, cfg));
}

TEST_CASE("report serialisation") {
    const auto& p = fig3();
    auto ctx = p.context();
    auto prior = Posterior::prior_of(p.model);
    auto g = gain_report_to_json(synthesise_strategy(ctx, prior, DesignOptions{}), p.model);
    CHECK(g.find("\"mode\": \"synth\"") != std::string::npos);
    CHECK(g.find("\"tied\"") != std::string::npos);
    auto d = dp_report_to_json(offline_dp_strategy(ctx, prior, DesignOptions{}), p.model);
    CHECK(d.find("\"mode\": \"dp\"") != std::string::npos);
    CHECK(d.find("\"ties\"") != std::string::npos);
}
