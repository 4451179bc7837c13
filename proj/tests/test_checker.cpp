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

#include "pmdpv/checker.hpp"
#include "pmdpv/error.hpp"
#include "pmdpv/property.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace pmdpv;
using pmdpv::test::model_path;

namespace {

Pmdp two_action_model(const char* p1, const char* p2) {
    std::ostringstream os;
    os << R"({"parameters": [], "states": [{"name": "s0", "labels": []}, {"name": "g", "labels": ["goal"]},
      {"name": "sink", "labels": []}], "initial": {"s0": "1"}, "transitions": [)"
       << R"({"from": "s0", "action": "a1", "to": "g", "prob": ")" << p1 << R"("},)"
       << R"({"from": "s0", "action": "a1", "to": "sink", "prob": "1 - )" << p1 << R"("},)"
       << R"({"from": "s0", "action": "a2", "to": "g", "prob": ")" << p2 << R"("},)"
       << R"({"from": "s0", "action": "a2", "to": "sink", "prob": "1 - )" << p2 << R"("},)"
       << R"({"from": "g", "action": "stay", "to": "g", "prob": "1"},)"
       << R"({"from": "sink", "action": "stay", "to": "sink", "prob": "1"}]})";
    return parse_model(os.str());
}

// Random constant model with probabilities in tenths.
std::string random_model_text(Rng& rng) {
    const std::size_t n = 2 + rng.uniform_int(3);
    std::ostringstream os;
    os << R"({"parameters": [], "states": [)";
    for (std::size_t s = 0; s < n; ++s) {
        os << (s ? "," : "") << R"({"name": "s)" << s << R"(", "labels": [)";
        bool goal = rng.uniform() < 0.3;
        bool safe = rng.uniform() < 0.8;
        if (goal)
            os << R"("goal")";
        if (safe)
            os << (goal ? "," : "") << R"("safe")";
        os << "]}";
    }
    os << R"(], "initial": {"s0": "1"}, "transitions": [)";
    bool first = true;
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t acts = 1 + rng.uniform_int(2);
        for (std::size_t a = 0; a < acts; ++a) {
            std::vector<int> w(n, 0);
            for (int k = 0; k < 10; ++k)
                ++w[rng.uniform_int(n)];
            for (std::size_t t = 0; t < n; ++t) {
                if (!w[t])
                    continue;
                os << (first ? "" : ",") << R"({"from": "s)" << s << R"(", "action": "a)" << a << R"(", "to": "s)"
                   << t << R"(", "prob": ")" << w[t] << R"(/10"})";
                first = false;
            }
        }
    }
    os << "]}";
    return os.str();
}

// Until probabilities of one memoryless strategy by graph analysis and Gaussian elimination.
std::vector<double> chain_until(const Mdp& mdp, const std::vector<std::size_t>& pick, const std::vector<char>& safe,
                                const std::vector<char>& goal) {
    const std::size_t n = mdp.num_states();
    std::vector<char> reach(goal.begin(), goal.end());
    for (bool grew = true; grew;) {
        grew = false;
        for (std::size_t s = 0; s < n; ++s) {
            if (reach[s] || !safe[s])
                continue;
            for (const auto& t : mdp.choices(s)[pick[s]].transitions)
                if (t.prob > 0 && reach[t.target]) {
                    reach[s] = 1;
                    grew = true;
                    break;
                }
        }
    }
    std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
    for (std::size_t s = 0; s < n; ++s) {
        a[s][s] = 1.0;
        if (goal[s])
            a[s][n] = 1.0;
        else if (reach[s])
            for (const auto& t : mdp.choices(s)[pick[s]].transitions)
                a[s][t.target] -= t.prob;
    }
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c]))
                piv = r;
        std::swap(a[c], a[piv]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c || a[r][c] == 0.0)
                continue;
            double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k <= n; ++k)
                a[r][k] -= f * a[c][k];
        }
    }
    std::vector<double> x(n);
    for (std::size_t s = 0; s < n; ++s)
        x[s] = a[s][n] / a[s][s];
    return x;
}

const Property kReachSafe = parse_property(R"(P>=0.5 [ "safe" U "goal" ])");

} // namespace

TEST_CASE("property parsing") {
    auto p = parse_property(R"(P>=0.5 [ true U "complete" ])");
    CHECK(p.op == Comparison::GreaterEq);
    CHECK(p.threshold == 0.5);
    CHECK(p.path == Property::Path::Until);
    CHECK(p.lhs == StateFormula::truth());
    CHECK(p.rhs == StateFormula::atom("complete"));

    auto q = parse_property(R"(P<=0.5 [ true U "s1" ])");
    CHECK(q.op == Comparison::LessEq);
    CHECK(q.rhs == StateFormula::atom("s1"));

    auto x = parse_property(R"(P>0.25 [ X !("a" & "b") ])");
    CHECK(x.path == Property::Path::Next);
    CHECK(x.op == Comparison::Greater);
    CHECK(x.rhs.kind == StateFormula::Kind::Not);

    for (const char* text : {R"(P<0.1 [ "a" & !"b" U ("c") ])", R"(P>=1 [ X true ])"})
        CHECK(parse_property(parse_property(text).to_string()) == parse_property(text));
}

TEST_CASE("property syntax errors") {
    CHECK_THROWS_AS(parse_property(R"(P>=0.2 [ P>=0.1 [ true U "a" ] U "a" ])"), ParseError);
    CHECK_THROWS_AS(parse_property(R"(P>=1.5 [ true U "a" ])"), ParseError);
    CHECK_THROWS_AS(parse_property(R"(P=0.5 [ true U "a" ])"), ParseError);
    CHECK_THROWS_AS(parse_property(R"(P>=0.5 [ true U "a" )"), ParseError);
    CHECK_THROWS_AS(parse_property(R"(P>=0.5 [ true U "a" ] extra)"), ParseError);
}

TEST_CASE("single goal state has probability one") {
    auto m = parse_model(R"({"parameters": [], "states": [{"name": "s", "labels": ["goal"]}],
      "initial": {"s": "1"}, "transitions": [{"from": "s", "action": "a", "to": "s", "prob": "1"}]})");
    auto mdp = instantiate(m, {});
    auto r = min_until_probability(mdp, StateFormula::truth(), StateFormula::atom("goal"));
    CHECK(r.values[0] == 1.0);
}

TEST_CASE("minimum over two actions") {
    auto m = two_action_model("4/5", "3/10");
    auto mdp = instantiate(m, {});
    auto r = min_until_probability(mdp, StateFormula::truth(), StateFormula::atom("goal"));
    CHECK(r.values[0] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(m.actions()[m.choices(0)[r.strategy[0]].action] == "a2");
    auto up = max_until_probability(mdp, StateFormula::truth(), StateFormula::atom("goal"));
    CHECK(up.values[0] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("Fig. 4 min-probability near the lower endpoint") {
    auto m = load_model(model_path("fig4.json"));
    auto prop = parse_property(R"(P>=0.5 [ true U "complete" ])");
    CheckOptions opt;
    opt.tolerance = 1e-9;
    // Linear-solve oracle over all eight strategies: min(3/5, 4*theta1/3).
    struct Row {
        double theta;
        double expected;
    };
    for (auto row : {Row{0.369, 0.49199999999999999}, Row{0.375, 0.5}, Row{0.7, 0.59999999999999998},
                     Row{0.2, 0.26666666666666666}}) {
        CAPTURE(row.theta);
        std::vector<double> theta{row.theta, row.theta};
        auto mdp = instantiate(m, theta);
        CHECK(decisive_probability(mdp, prop, Quantifier::Universal, opt) ==
              doctest::Approx(row.expected).epsilon(1e-8));
    }
    CHECK_FALSE(satisfies(instantiate(m, std::vector<double>{0.2, 0.2}), prop));
    CHECK(satisfies(instantiate(m, std::vector<double>{0.5, 0.5}), prop));
    CHECK(satisfies(instantiate(m, std::vector<double>{0.75, 0.75}), prop));
}

TEST_CASE("threshold semantics") {
    auto m = two_action_model("3/5", "4/5");
    auto mdp = instantiate(m, {});
    CHECK(satisfies(mdp, parse_property(R"(P>=0.5 [ true U "goal" ])")));
    auto half_model = two_action_model("1/2", "4/5");
    auto half = instantiate(half_model, {});
    CHECK_FALSE(satisfies(half, parse_property(R"(P>0.5 [ true U "goal" ])")));
    CHECK(satisfies(half, parse_property(R"(P>=0.5 [ true U "goal" ])")));
    CHECK(compare(0.5, Comparison::LessEq, 0.5));
    CHECK_FALSE(compare(0.5, Comparison::Less, 0.5));
}

TEST_CASE("upper bounds use the maximising strategy unless the minimum is requested") {
    auto m = two_action_model("1/5", "4/5");
    auto mdp = instantiate(m, {});
    auto prop = parse_property(R"(P<=0.5 [ true U "goal" ])");
    CHECK(uses_maximum(prop, Quantifier::Universal));
    CHECK_FALSE(uses_maximum(prop, Quantifier::Minimum));
    CHECK(decisive_probability(mdp, prop) == doctest::Approx(0.8));
    CHECK_FALSE(satisfies(mdp, prop));
    CHECK(satisfies(mdp, prop, Quantifier::Minimum));
}

TEST_CASE("next operator takes one step") {
    auto m = two_action_model("1/5", "4/5");
    auto mdp = instantiate(m, {});
    auto lo = min_next_probability(mdp, StateFormula::atom("goal"));
    auto hi = max_next_probability(mdp, StateFormula::atom("goal"));
    CHECK(lo.values[0] == doctest::Approx(0.2));
    CHECK(hi.values[0] == doctest::Approx(0.8));
    CHECK(lo.values[1] == 1.0);
    CHECK(satisfies(mdp, parse_property(R"(P>=0.2 [ X "goal" ])")));
}

TEST_CASE("brute-force strategy enumeration agrees on small models") {
    Rng rng(404);
    CheckOptions opt;
    opt.tolerance = 1e-12;
    int models = 0;
    for (int trial = 0; trial < 300; ++trial) {
        auto m = parse_model(random_model_text(rng));
        auto mdp = instantiate(m, {});
        auto safe = evaluate_states(m, StateFormula::atom("safe"), false);
        auto goal = evaluate_states(m, StateFormula::atom("goal"), false);
        const std::size_t n = mdp.num_states();
        std::vector<double> lo(n, 2.0), hi(n, -1.0);
        std::vector<std::size_t> pick(n, 0);
        for (;;) {
            auto x = chain_until(mdp, pick, safe, goal);
            for (std::size_t s = 0; s < n; ++s) {
                lo[s] = std::min(lo[s], x[s]);
                hi[s] = std::max(hi[s], x[s]);
            }
            std::size_t s = 0;
            while (s < n && ++pick[s] == mdp.choices(s).size())
                pick[s++] = 0;
            if (s == n)
                break;
        }
        auto rmin = min_until_probability(mdp, kReachSafe.lhs, kReachSafe.rhs, opt);
        auto rmax = max_until_probability(mdp, kReachSafe.lhs, kReachSafe.rhs, opt);
        for (std::size_t s = 0; s < n; ++s) {
            CHECK(std::abs(rmin.values[s] - lo[s]) < 1e-8);
            CHECK(std::abs(rmax.values[s] - hi[s]) < 1e-8);
        }
        ++models;
    }
    CHECK(models == 300);
}

TEST_CASE("qualitative states, witness strategy and monotone convergence") {
    Rng rng(77);
    CheckOptions tight;
    tight.tolerance = 1e-9;
    CheckOptions loose;
    loose.tolerance = 1e-3;
    for (int trial = 0; trial < 200; ++trial) {
        auto m = parse_model(random_model_text(rng));
        auto mdp = instantiate(m, {});
        auto safe = evaluate_states(m, StateFormula::atom("safe"), false);
        auto goal = evaluate_states(m, StateFormula::atom("goal"), false);
        auto r = min_until_probability(mdp, kReachSafe.lhs, kReachSafe.rhs, tight);
        auto coarse = min_until_probability(mdp, kReachSafe.lhs, kReachSafe.rhs, loose);
        auto witness = strategy_until_probability(mdp, r.strategy, kReachSafe.lhs, kReachSafe.rhs);
        CHECK(r.residual < tight.tolerance);
        for (std::size_t s = 0; s < mdp.num_states(); ++s) {
            if (goal[s])
                CHECK(r.values[s] == 1.0);
            if (!goal[s] && !safe[s])
                CHECK(r.values[s] == 0.0);
            CHECK(r.values[s] >= 0.0);
            CHECK(r.values[s] <= 1.0);
            CHECK(std::abs(witness[s] - r.values[s]) <= 10 * tight.tolerance);
            CHECK(coarse.values[s] <= r.values[s] + 1e-15);
        }
    }
}

TEST_CASE("states that cannot reach the goal are exactly zero") {
    auto m = parse_model(R"({"parameters": [], "states": [{"name": "s0", "labels": []},
      {"name": "loop", "labels": []}, {"name": "g", "labels": ["goal"]}], "initial": {"s0": "1"},
      "transitions": [
        {"from": "s0", "action": "a", "to": "loop", "prob": "1/2"},
        {"from": "s0", "action": "a", "to": "g", "prob": "1/2"},
        {"from": "s0", "action": "b", "to": "s0", "prob": "1"},
        {"from": "loop", "action": "a", "to": "loop", "prob": "1"},
        {"from": "g", "action": "a", "to": "g", "prob": "1"}]})");
    auto mdp = instantiate(m, {});
    auto r = min_until_probability(mdp, StateFormula::truth(), StateFormula::atom("goal"));
    CHECK(r.values[0] == 0.0);
    CHECK(r.values[1] == 0.0);
    CHECK(r.values[2] == 1.0);
    auto up = max_until_probability(mdp, StateFormula::truth(), StateFormula::atom("goal"));
    CHECK(up.values[0] == doctest::Approx(0.5));
}
