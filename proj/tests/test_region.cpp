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
#include "pmdpv/region.hpp"

#include <cmath>

using namespace pmdpv;
using pmdpv::test::model_path;

namespace {

const char* kSumModel = R"({
  "parameters": [{"name": "theta1", "bounds": [0, 1]}, {"name": "theta2", "bounds": [0, 1]}],
  "states": [{"name": "s0", "labels": []}, {"name": "g", "labels": ["g"]}, {"name": "x", "labels": []}],
  "initial": {"s0": "1"},
  "transitions": [
    {"from": "s0", "action": "a", "to": "g", "prob": "1/2*theta1 + 1/2*theta2"},
    {"from": "s0", "action": "a", "to": "x", "prob": "1 - 1/2*theta1 - 1/2*theta2"},
    {"from": "g", "action": "a", "to": "g", "prob": "1"},
    {"from": "x", "action": "a", "to": "x", "prob": "1"}
  ]
})";

const Property kComplete = parse_property(R"(P>=0.5 [ true U "complete" ])");

SynthOptions tied_options(const Pmdp& m, double tol) {
    SynthOptions opt;
    opt.tol = tol;
    opt.ties.push_back(parse_tie("theta2=theta1", m.parameter_names()));
    return opt;
}

const RegionMap& fig4_line() {
    static const Pmdp m = load_model(model_path("fig4.json"));
    static const RegionMap map = synthesise_region(m, kComplete, tied_options(m, 1e-3));
    return map;
}

bool agrees(Verdict v, bool sat) {
    return (v == Verdict::Sat && sat) || (v == Verdict::Unsat && !sat);
}

} // namespace

TEST_CASE("threshold zero satisfies the whole space in one cell") {
    auto m = parse_model(kSumModel);
    auto map = synthesise_region(m, parse_property(R"(P>=0 [ true U "g" ])"));
    REQUIRE(map.cells().size() == 1);
    CHECK(map.cells()[0].verdict == Verdict::Sat);
    CHECK(map.volume(Verdict::Sat) == doctest::Approx(1.0));
}

TEST_CASE("staircase map agrees with a dense grid oracle") {
    auto m = parse_model(kSumModel);
    auto prop = parse_property(R"(P>=0.5 [ true U "g" ])");
    SynthOptions opt;
    opt.tol = 1e-3;
    SynthStats stats;
    auto map = synthesise_region(m, prop, opt, &stats);
    CHECK(map.total_volume() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(stats.undecided_fraction <= opt.budget);
    int compared = 0;
    for (int i = 0; i < 100; ++i)
        for (int j = 0; j < 100; ++j) {
            std::vector<double> theta{(i + 0.5) / 100, (j + 0.5) / 100};
            auto v = map.membership(theta);
            if (v == Verdict::Unknown)
                continue;
            ++compared;
            CAPTURE(theta[0]);
            CAPTURE(theta[1]);
            CHECK(agrees(v, satisfies(instantiate(m, theta), prop)));
        }
    CHECK(compared >= 9800);
}

TEST_CASE("Fig. 4 line map") {
    const auto& map = fig4_line();
    CHECK(map.dims() == 1);
    CHECK(map.total_volume() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(map.membership(std::vector<double>{0.5}) == Verdict::Sat);
    CHECK(map.membership(std::vector<double>{0.2}) == Verdict::Unsat);
    CHECK(map.membership(std::vector<double>{0.9}) == Verdict::Invalid);
    std::vector<double> edge{0.369};
    auto first = map.membership(edge);
    CHECK(map.membership(edge) == first);
    CHECK(map.locate(edge) == map.locate_linear(edge));
    for (const auto& c : map.cells())
        if (c.verdict == Verdict::Sat) {
            CHECK(c.box.lo[0] >= 0.375 - 1e-3);
            CHECK(c.box.hi[0] <= 0.75 + 1e-12);
        }
    CHECK(map.volume(Verdict::Sat) == doctest::Approx(0.375).epsilon(0.01));
    CHECK_THROWS_AS(map.membership(std::vector<double>{1.5}), ValidationError);
    CHECK_FALSE(map.locate(std::vector<double>{-0.1}).has_value());
}

TEST_CASE("indexed lookup matches a linear scan") {
    auto m = load_model(model_path("fig4.json"));
    SynthOptions opt;
    opt.tol = 1e-2;
    auto map = synthesise_region(m, kComplete, opt);
    Rng rng(31);
    for (int i = 0; i < 5000; ++i) {
        std::vector<double> p{rng.uniform(), rng.uniform()};
        CHECK(map.locate(p) == map.locate_linear(p));
    }
    for (const auto& c : map.cells()) {
        CHECK(map.locate(c.box.lo) == map.locate_linear(c.box.lo));
        CHECK(map.locate(c.box.hi) == map.locate_linear(c.box.hi));
    }
}

TEST_CASE("decided cells agree with sampled model checking") {
    auto m = load_model(model_path("fig4.json"));
    SynthOptions opt;
    opt.tol = 1e-3;
    auto map = synthesise_region(m, kComplete, opt);
    CHECK(map.total_volume() == doctest::Approx(1.0).epsilon(1e-9));
    const auto space = m.param_space();
    Rng rng(7);
    int valid = 0, decided = 0, mismatches = 0;
    for (int i = 0; i < 10000; ++i) {
        std::vector<double> p{rng.uniform(), rng.uniform()};
        auto v = map.membership(p);
        if (v == Verdict::Unknown) {
            ++valid;
            continue;
        }
        if (v == Verdict::Invalid) {
            CHECK_FALSE(space.contains(p));
            continue;
        }
        ++valid;
        ++decided;
        bool sat = satisfies(instantiate(m, p), kComplete);
        if (agrees(v, sat))
            continue;
        ++mismatches;
        bool near = false;
        for (std::size_t d = 0; d < 2 && !near; ++d)
            for (double step : {-opt.tol, opt.tol}) {
                auto q = p;
                q[d] = std::clamp(q[d] + step, 0.0, 1.0);
                if (space.contains(q) && satisfies(instantiate(m, q), kComplete) != sat)
                    near = true;
            }
        CHECK(near);
    }
    CHECK(decided >= valid * 98 / 100);
    CHECK(mismatches <= decided / 1000);
}

TEST_CASE("halving the tolerance never flips a decided verdict") {
    auto m = load_model(model_path("fig4.json"));
    SynthOptions coarse_opt;
    coarse_opt.tol = 2e-2;
    SynthOptions fine_opt;
    fine_opt.tol = 1e-2;
    auto coarse = synthesise_region(m, kComplete, coarse_opt);
    auto fine = synthesise_region(m, kComplete, fine_opt);
    Rng rng(12);
    for (int i = 0; i < 10000; ++i) {
        std::vector<double> p{rng.uniform(), rng.uniform()};
        auto a = coarse.membership(p);
        auto b = fine.membership(p);
        if (a == Verdict::Sat)
            CHECK(b != Verdict::Unsat);
        if (a == Verdict::Unsat)
            CHECK(b != Verdict::Sat);
    }
    CHECK(fine.volume(Verdict::Unknown) <= coarse.volume(Verdict::Unknown) + 1e-12);
}

TEST_CASE("synthesis is deterministic across thread counts") {
    auto m = load_model(model_path("fig4.json"));
    SynthOptions one;
    one.tol = 1e-2;
    SynthOptions four = one;
    four.threads = 4;
    CHECK(synthesise_region(m, kComplete, one) == synthesise_region(m, kComplete, four));
}

TEST_CASE("region maps round-trip through JSON") {
    const auto& map = fig4_line();
    auto again = region_from_json(region_to_json(map));
    CHECK(again == map);
    CHECK(region_to_json(again) == region_to_json(map));
    CHECK_THROWS_AS(region_from_json("[{\"lo\": [0], \"hi\": [1], \"verdict\": \"maybe\"}]"), ValidationError);
}

TEST_CASE("parameter ties") {
    std::vector<std::string> names{"theta1", "theta2", "theta3"};
    auto t = parse_tie("theta2=theta1", names);
    CHECK(t.param == 1);
    CHECK(t.source == 0);
    CHECK_THROWS(parse_tie("theta9=theta1", names));
    CHECK_THROWS(parse_tie("theta1", names));
    Reduction r(3, {t});
    CHECK(r.free_dims() == 2);
    CHECK(r.expand(std::vector<double>{0.3, 0.6}) == std::vector<double>{0.3, 0.3, 0.6});
    CHECK(r.project(std::vector<double>{0.3, 0.3, 0.6}) == std::vector<double>{0.3, 0.6});
}

TEST_CASE("empty validity region is an error") {
    const char* text = R"({
      "parameters": [{"name": "theta1", "bounds": [0.8, 1]}],
      "states": [{"name": "s0", "labels": []}, {"name": "g", "labels": ["g"]}, {"name": "x", "labels": []}],
      "initial": {"s0": "1"},
      "transitions": [
        {"from": "s0", "action": "a", "to": "g", "prob": "theta1"},
        {"from": "s0", "action": "a", "to": "s0", "prob": "1/4"},
        {"from": "s0", "action": "a", "to": "x", "prob": "1 - theta1 - 1/4"},
        {"from": "g", "action": "a", "to": "g", "prob": "1"},
        {"from": "x", "action": "a", "to": "x", "prob": "1"}
      ]
    })";
    auto m = parse_model(text);
    CHECK_THROWS_AS(synthesise_region(m, parse_property(R"(P>=0.5 [ true U "g" ])")), ValidationError);
}
