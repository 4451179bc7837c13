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

#include "pmdpv/simulate.hpp"

#include "pmdpv/error.hpp"

#include "json.hpp"

namespace pmdpv {

std::string strategy_to_json(const Strategy& s, const Pmdp& m) {
    if (s.choice.size() != m.num_states())
        throw ValidationError("strategy does not cover every state");
    nlohmann::ordered_json doc = nlohmann::ordered_json::object();
    for (std::size_t st = 0; st < m.num_states(); ++st) {
        auto row = m.choices(st);
        if (row.size() > 1)
            doc[m.state(st).name] = m.actions()[row[s.choice[st]].action];
    }
    return doc.dump();
}

Strategy strategy_from_json(std::string_view text, const Pmdp& m) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("strategy is not valid JSON: ") + e.what());
    }
    Strategy out{std::vector<std::size_t>(m.num_states(), 0)};
    if (!doc.is_object())
        throw ValidationError("strategy must be a JSON object {state: action}");
    for (const auto& [name, v] : doc.items()) {
        auto s = m.find_state(name);
        if (!s)
            throw ValidationError("strategy names unknown state '" + name + "'");
        auto a = m.find_action(v.get<std::string>());
        auto c = a ? m.find_choice(*s, *a) : std::nullopt;
        if (!c)
            throw ValidationError("action '" + v.get<std::string>() + "' is not enabled at '" + name + "'");
        out.choice[*s] = *c;
    }
    return out;
}

Strategy random_strategy(const Pmdp& m, Rng& rng) {
    Strategy s{std::vector<std::size_t>(m.num_states(), 0)};
    for (std::size_t st = 0; st < m.num_states(); ++st) {
        auto n = m.choices(st).size();
        if (n > 1)
            s.choice[st] = static_cast<std::size_t>(rng.uniform_int(n));
    }
    return s;
}

TraceData simulate_traces(const Pmdp& m, const SimConfig& cfg) {
    if (cfg.length == 0 || cfg.traces == 0)
        throw ValidationError("trace length and count must be at least 1");
    if (cfg.mode == ActionMode::Fixed && cfg.strategy.choice.size() != m.num_states())
        throw ValidationError("a fixed strategy must assign a choice to every state");
    const Mdp mdp = instantiate(m, cfg.theta);
    std::vector<double> init_w;
    std::vector<std::size_t> init_s;
    for (const auto& [s, p] : mdp.initial()) {
        init_s.push_back(s);
        init_w.push_back(p);
    }
    TraceData out(cfg.traces);
    std::vector<double> w;
    for (std::size_t i = 0; i < cfg.traces; ++i) {
        Rng rng(cfg.seed, i);
        Strategy strat = cfg.strategy;
        if (cfg.mode == ActionMode::RandomStatic)
            strat = random_strategy(m, rng);
        std::size_t s = init_s.size() == 1 ? init_s[0] : init_s[rng.categorical(init_w)];
        auto& steps = out[i].steps;
        steps.reserve(cfg.length);
        for (std::size_t t = 0; t < cfg.length; ++t) {
            auto row = mdp.choices(s);
            std::size_t c = 0;
            if (row.size() > 1)
                c = cfg.mode == ActionMode::NoStrategy ? static_cast<std::size_t>(rng.uniform_int(row.size()))
                                                       : strat.choice[s];
            const auto& ch = row[c];
            w.clear();
            for (const auto& tr : ch.transitions)
                w.push_back(tr.prob);
            std::size_t next = ch.transitions[rng.categorical(w)].target;
            steps.push_back(Step{s, ch.action, next});
            s = next;
        }
    }
    return out;
}

} // namespace pmdpv
