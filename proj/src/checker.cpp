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

#include "pmdpv/checker.hpp"

#include "pmdpv/error.hpp"

#include <algorithm>
#include <cmath>

namespace pmdpv {

namespace {

constexpr double kTie = 1e-12;

// States from which phi2 is reached with positive probability. `all_choices`
// demands it for every choice (complement is Prob0E, used for minima); otherwise
// for some choice (complement is Prob0A, used for maxima).
std::vector<char> positive_states(const Mdp& m, const std::vector<char>& sat1, const std::vector<char>& sat2,
                                  bool all_choices) {
    const std::size_t n = m.num_states();
    std::vector<char> pos(sat2);
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t s = 0; s < n; ++s) {
            if (pos[s] || !sat1[s])
                continue;
            bool any = false;
            bool all = true;
            for (const auto& ch : m.choices(s)) {
                bool hit = false;
                for (const auto& t : ch.transitions)
                    if (t.prob > 0.0 && pos[t.target]) {
                        hit = true;
                        break;
                    }
                any = any || hit;
                all = all && hit;
            }
            if (all_choices ? all : any) {
                pos[s] = 1;
                changed = true;
            }
        }
    }
    return pos;
}

double choice_value(const MdpChoice& ch, const std::vector<double>& x) {
    double v = 0.0;
    for (const auto& t : ch.transitions)
        v += t.prob * x[t.target];
    return v;
}

ReachResult until_impl(const Mdp& m, const StateFormula& phi1, const StateFormula& phi2, const CheckOptions& opt,
                       bool maximise) {
    const std::size_t n = m.num_states();
    const auto sat1 = evaluate_states(m.source(), phi1, true);
    const auto sat2 = evaluate_states(m.source(), phi2, false);
    const auto pos = positive_states(m, sat1, sat2, !maximise);

    ReachResult r;
    r.values.assign(n, 0.0);
    r.strategy.assign(n, 0);
    std::vector<std::size_t> todo;
    for (std::size_t s = 0; s < n; ++s) {
        if (sat2[s])
            r.values[s] = 1.0;
        else if (pos[s])
            todo.push_back(s);
    }

    for (;;) {
        double residual = 0.0;
        for (std::size_t s : todo) {
            auto choices = m.choices(s);
            double best = maximise ? -1.0 : 2.0;
            for (const auto& ch : choices) {
                double v = choice_value(ch, r.values);
                best = maximise ? std::max(best, v) : std::min(best, v);
            }
            residual = std::max(residual, std::fabs(best - r.values[s]));
            r.values[s] = best;
        }
        ++r.iterations;
        r.residual = residual;
        if (residual < opt.tolerance)
            break;
        if (r.iterations >= opt.max_iterations)
            throw LimitError("value iteration did not converge within " + std::to_string(opt.max_iterations) +
                             " sweeps (residual " + std::to_string(residual) + ")");
    }

    // Strategy extraction.
    for (std::size_t s = 0; s < n; ++s) {
        auto choices = m.choices(s);
        if (sat2[s] || !sat1[s])
            continue;
        if (!pos[s]) {
            if (!maximise) {
                // Some choice avoids every positive state.
                for (std::size_t c = 0; c < choices.size(); ++c) {
                    bool hit = false;
                    for (const auto& t : choices[c].transitions)
                        hit = hit || (t.prob > 0.0 && pos[t.target]);
                    if (!hit) {
                        r.strategy[s] = c;
                        break;
                    }
                }
            }
            continue;
        }
        if (!maximise) {
            double best = 2.0;
            for (std::size_t c = 0; c < choices.size(); ++c) {
                double v = choice_value(choices[c], r.values);
                if (v < best - kTie) {
                    best = v;
                    r.strategy[s] = c;
                }
            }
        }
    }
    if (maximise) {
        // Among optimal choices, pick one that strictly approaches phi2 so the
        // induced chain does not cycle in a non-goal end component.
        std::vector<char> ranked(sat2);
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t s : todo) {
                if (ranked[s])
                    continue;
                auto choices = m.choices(s);
                double best = -1.0;
                for (const auto& ch : choices)
                    best = std::max(best, choice_value(ch, r.values));
                for (std::size_t c = 0; c < choices.size(); ++c) {
                    if (choice_value(choices[c], r.values) < best - 10.0 * opt.tolerance)
                        continue;
                    bool hit = false;
                    for (const auto& t : choices[c].transitions)
                        hit = hit || (t.prob > 0.0 && ranked[t.target]);
                    if (hit) {
                        r.strategy[s] = c;
                        ranked[s] = 1;
                        changed = true;
                        break;
                    }
                }
            }
        }
    }
    return r;
}

ReachResult next_impl(const Mdp& m, const StateFormula& phi, bool maximise) {
    const auto sat = evaluate_states(m.source(), phi, false);
    ReachResult r;
    r.values.assign(m.num_states(), 0.0);
    r.strategy.assign(m.num_states(), 0);
    for (std::size_t s = 0; s < m.num_states(); ++s) {
        auto choices = m.choices(s);
        double best = maximise ? -1.0 : 2.0;
        for (std::size_t c = 0; c < choices.size(); ++c) {
            double v = 0.0;
            for (const auto& t : choices[c].transitions)
                if (sat[t.target])
                    v += t.prob;
            if (maximise ? v > best + kTie : v < best - kTie) {
                best = v;
                r.strategy[s] = c;
            }
        }
        r.values[s] = best;
    }
    r.iterations = 1;
    return r;
}

} // namespace

ReachResult min_until_probability(const Mdp& m, const StateFormula& phi1, const StateFormula& phi2,
                                  const CheckOptions& opt) {
    return until_impl(m, phi1, phi2, opt, false);
}

ReachResult max_until_probability(const Mdp& m, const StateFormula& phi1, const StateFormula& phi2,
                                  const CheckOptions& opt) {
    return until_impl(m, phi1, phi2, opt, true);
}

ReachResult min_next_probability(const Mdp& m, const StateFormula& phi) { return next_impl(m, phi, false); }

ReachResult max_next_probability(const Mdp& m, const StateFormula& phi) { return next_impl(m, phi, true); }

bool uses_maximum(const Property& p, Quantifier q) noexcept {
    return q == Quantifier::Universal && is_upper_bound(p.op);
}

ReachResult path_probability(const Mdp& m, const Property& p, Quantifier q, const CheckOptions& opt) {
    bool maximise = uses_maximum(p, q);
    if (p.path == Property::Path::Next)
        return maximise ? max_next_probability(m, p.rhs) : min_next_probability(m, p.rhs);
    return maximise ? max_until_probability(m, p.lhs, p.rhs, opt) : min_until_probability(m, p.lhs, p.rhs, opt);
}

double decisive_probability(const Mdp& m, const Property& p, Quantifier q, const CheckOptions& opt) {
    auto r = path_probability(m, p, q, opt);
    bool upper = is_upper_bound(p.op);
    double v = upper ? 0.0 : 1.0;
    for (const auto& [s, w] : m.initial()) {
        if (!(w > 0.0))
            continue;
        v = upper ? std::max(v, r.values[s]) : std::min(v, r.values[s]);
    }
    return v;
}

bool satisfies(const Mdp& m, const Property& p, Quantifier q, const CheckOptions& opt) {
    return compare(decisive_probability(m, p, q, opt), p.op, p.threshold);
}

std::vector<double> strategy_until_probability(const Mdp& m, const std::vector<std::size_t>& strategy,
                                               const StateFormula& phi1, const StateFormula& phi2) {
    const std::size_t n = m.num_states();
    if (strategy.size() != n)
        throw ValidationError("strategy must assign a choice to every state");
    const auto sat1 = evaluate_states(m.source(), phi1, true);
    const auto sat2 = evaluate_states(m.source(), phi2, false);
    // Restrict to states that can reach phi2 in the induced chain.
    std::vector<char> pos(sat2);
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t s = 0; s < n; ++s) {
            if (pos[s] || !sat1[s])
                continue;
            for (const auto& t : m.choices(s)[strategy[s]].transitions)
                if (t.prob > 0.0 && pos[t.target]) {
                    pos[s] = 1;
                    changed = true;
                    break;
                }
        }
    }
    // Dense system (I - P) x = b over the unknown states.
    std::vector<std::size_t> idx(n, n);
    std::vector<std::size_t> unknown;
    for (std::size_t s = 0; s < n; ++s)
        if (pos[s] && !sat2[s]) {
            idx[s] = unknown.size();
            unknown.push_back(s);
        }
    const std::size_t k = unknown.size();
    std::vector<double> a(k * (k + 1), 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t s = unknown[i];
        a[i * (k + 1) + i] = 1.0;
        for (const auto& t : m.choices(s)[strategy[s]].transitions) {
            if (sat2[t.target])
                a[i * (k + 1) + k] += t.prob;
            else if (idx[t.target] < n)
                a[i * (k + 1) + idx[t.target]] -= t.prob;
        }
    }
    for (std::size_t col = 0; col < k; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < k; ++r)
            if (std::fabs(a[r * (k + 1) + col]) > std::fabs(a[piv * (k + 1) + col]))
                piv = r;
        if (std::fabs(a[piv * (k + 1) + col]) < 1e-300)
            throw NumericError("singular system in strategy evaluation");
        if (piv != col)
            for (std::size_t c = 0; c <= k; ++c)
                std::swap(a[piv * (k + 1) + c], a[col * (k + 1) + c]);
        for (std::size_t r = 0; r < k; ++r) {
            if (r == col)
                continue;
            double f = a[r * (k + 1) + col] / a[col * (k + 1) + col];
            if (f == 0.0)
                continue;
            for (std::size_t c = col; c <= k; ++c)
                a[r * (k + 1) + c] -= f * a[col * (k + 1) + c];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t s = 0; s < n; ++s)
        if (sat2[s])
            x[s] = 1.0;
    for (std::size_t i = 0; i < k; ++i)
        x[unknown[i]] = a[i * (k + 1) + k] / a[i * (k + 1) + i];
    return x;
}

} // namespace pmdpv
