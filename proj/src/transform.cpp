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

#include "pmdpv/transform.hpp"

#include "pmdpv/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace pmdpv {

namespace {

struct EdgeKey {
    std::size_t state;
    std::size_t action;
    std::size_t target;
};

using KeyPath = std::vector<EdgeKey>;

// Accumulates a PmdpSpec while remembering edges by (state, action, target).
class Builder {
public:
    explicit Builder(const Pmdp& m) {
        spec_.parameters = m.parameters();
        spec_.priors = m.priors();
        spec_.states = m.spec().states;
        spec_.actions = m.actions();
        spec_.initial = m.initial();
        spec_.choices.resize(spec_.states.size());
    }

    std::size_t num_states() const { return spec_.states.size(); }
    const std::string& state_name(std::size_t s) const { return spec_.states[s].name; }
    const std::string& action_name(std::size_t a) const { return spec_.actions[a]; }

    std::size_t fresh_state(std::string name) {
        for (const auto& st : spec_.states)
            if (st.name == name)
                throw ValidationError("fresh state name '" + name + "' collides with an existing state");
        spec_.states.push_back(StateInfo{std::move(name), {}});
        spec_.choices.emplace_back();
        fresh_.push_back(spec_.states.size() - 1);
        return spec_.states.size() - 1;
    }

    std::size_t aux_action() {
        auto it = std::find(spec_.actions.begin(), spec_.actions.end(), std::string(kAuxPrefix));
        if (it != spec_.actions.end())
            return static_cast<std::size_t>(it - spec_.actions.begin());
        spec_.actions.emplace_back(kAuxPrefix);
        return spec_.actions.size() - 1;
    }

    EdgeKey add(std::size_t s, std::size_t action, std::size_t target, AffineExpr prob) {
        auto& row = spec_.choices[s];
        auto it = std::find_if(row.begin(), row.end(), [&](const Choice& c) { return c.action == action; });
        if (it == row.end()) {
            row.push_back(Choice{action, {}});
            it = row.end() - 1;
        }
        it->transitions.push_back(Transition{target, std::move(prob)});
        return EdgeKey{s, action, target};
    }

    const std::vector<std::size_t>& fresh() const { return fresh_; }

    Pmdp build() { return Pmdp(std::move(spec_)); }

private:
    PmdpSpec spec_;
    std::vector<std::size_t> fresh_;
};

std::size_t resolve(const Pmdp& m, const EdgeKey& k) {
    auto c = m.find_choice(k.state, k.action);
    if (!c)
        throw Error("internal: expanded edge without choice");
    const auto& tr = m.choices(k.state)[*c].transitions;
    auto it = std::lower_bound(tr.begin(), tr.end(), k.target,
                               [](const Transition& t, std::size_t target) { return t.target < target; });
    if (it == tr.end() || it->target != k.target)
        throw Error("internal: expanded edge not found");
    return m.edge_id(k.state, *c, static_cast<std::size_t>(it - tr.begin()));
}

ExpandedModel finish(Builder& b, std::size_t original_states, std::size_t original_edges,
                     const std::vector<std::vector<KeyPath>>& paths, std::vector<std::string> warnings) {
    std::vector<std::size_t> fresh = b.fresh();
    Pmdp model = b.build();
    ExpandedModel out{std::move(model), original_states, original_edges, std::move(fresh), {}, std::move(warnings)};
    out.lineage.resize(paths.size());
    for (std::size_t e = 0; e < paths.size(); ++e)
        for (const auto& kp : paths[e]) {
            EdgePath p;
            for (const auto& k : kp)
                p.push_back(resolve(out.model, k));
            out.lineage[e].push_back(std::move(p));
        }
    return out;
}

std::string aux_name(const Builder& b, std::size_t s, std::size_t action, const std::string& tail) {
    return std::string(kAuxPrefix) + "_" + b.state_name(s) + "_" + b.action_name(action) + "_" + tail;
}

} // namespace

ExpandedModel ExpandedModel::identity(const Pmdp& m) {
    ExpandedModel e{m, m.num_states(), m.num_edges(), {}, {}, {}};
    e.lineage.resize(m.num_edges());
    for (std::size_t id = 0; id < m.num_edges(); ++id)
        e.lineage[id] = {EdgePath{id}};
    return e;
}

bool ExpandedModel::is_identity() const {
    return std::all_of(lineage.begin(), lineage.end(),
                       [](const auto& paths) { return paths.size() == 1 && paths[0].size() == 1; });
}

double ExpandedModel::path_probability(const EdgePath& p, std::span<const double> theta) const {
    double v = 1.0;
    for (auto id : p)
        v *= model.transition(id).prob.evaluate(theta);
    return v;
}

AffineExpr ExpandedModel::path_expression(const EdgePath& p) const {
    Rational factor(1);
    std::optional<AffineExpr> parametric;
    for (auto id : p) {
        const auto& e = model.transition(id).prob;
        if (e.is_constant()) {
            factor = factor * e.constant();
        } else {
            if (parametric)
                throw NumericError("lineage path with more than one parametric edge");
            parametric = e;
        }
    }
    return parametric ? parametric->scaled(factor) : AffineExpr(factor);
}

bool is_normal_entry(const AffineExpr& e) {
    return e.is_constant() || e.as_parameter().has_value() || e.as_complement().has_value();
}

ExpandedModel split_transitions(const Pmdp& m) {
    Builder b(m);
    std::vector<std::vector<KeyPath>> paths(m.num_edges());
    for (std::size_t s = 0; s < m.num_states(); ++s) {
        auto row = m.choices(s);
        for (std::size_t c = 0; c < row.size(); ++c) {
            const auto action = row[c].action;
            for (std::size_t k = 0; k < row[c].transitions.size(); ++k) {
                const auto& tr = row[c].transitions[k];
                const std::size_t id = m.edge_id(s, c, k);
                if (!tr.prob.is_positive_form() || tr.prob.summands() < 2) {
                    paths[id] = {{b.add(s, action, tr.target, tr.prob)}};
                    continue;
                }
                std::vector<AffineExpr> parts;
                if (!tr.prob.constant().is_zero())
                    parts.emplace_back(tr.prob.constant());
                for (const auto& t : tr.prob.terms())
                    parts.push_back(AffineExpr::parameter(t.param, t.coef));
                for (std::size_t i = 0; i < parts.size(); ++i) {
                    std::size_t n =
                        b.fresh_state(aux_name(b, s, action, b.state_name(tr.target) + "_" + std::to_string(i)));
                    EdgeKey in = b.add(s, action, n, parts[i]);
                    EdgeKey out = b.add(n, b.aux_action(), tr.target, AffineExpr(Rational(1)));
                    paths[id].push_back({in, out});
                }
            }
        }
    }
    return finish(b, m.num_states(), m.num_edges(), paths, {});
}

ExpandedModel split_states(const Pmdp& m) {
    Builder b(m);
    std::vector<std::vector<KeyPath>> paths(m.num_edges());
    std::vector<std::string> warnings;
    const auto names = m.parameter_names();

    for (std::size_t s = 0; s < m.num_states(); ++s) {
        auto row = m.choices(s);
        for (std::size_t c = 0; c < row.size(); ++c) {
            const auto action = row[c].action;
            const auto& trs = row[c].transitions;
            auto where = [&] { return "row (" + m.state(s).name + ", " + m.actions()[action] + ")"; };

            std::vector<char> live(trs.size(), 1);
            std::map<std::size_t, std::vector<std::size_t>> pos; // param -> positive entries
            std::map<std::size_t, std::vector<std::size_t>> neg; // param -> complement entries
            for (std::size_t k = 0; k < trs.size(); ++k) {
                const auto& e = trs[k].prob;
                if (e.is_zero()) {
                    live[k] = 0;
                    warnings.push_back("dropped zero-probability edge " + m.describe_edge(m.edge_id(s, c, k)));
                    continue;
                }
                if (e.is_constant())
                    continue;
                if (e.is_positive_form()) {
                    if (e.summands() != 1)
                        throw ValidationError(where() + ": entry " + e.to_string(names) +
                                              " has several summands; split transitions first");
                    pos[e.terms()[0].param].push_back(k);
                } else {
                    for (const auto& t : e.terms())
                        neg[t.param].push_back(k);
                }
            }

            // Parameters whose entries are already a literal theta_j / 1 - theta_j pair.
            std::vector<std::size_t> hubs;
            for (const auto& [j, ps] : pos) {
                const auto& qs = neg[j];
                bool literal = ps.size() == 1 && qs.size() == 1 && trs[ps[0]].prob.as_parameter() &&
                               trs[qs[0]].prob.as_complement();
                if (!literal)
                    hubs.push_back(j);
            }
            for (const auto& [j, qs] : neg)
                if (!pos.count(j))
                    throw ValidationError(where() + ": parameter " + names[j] +
                                          " appears only with negative coefficients");

            std::vector<Rational> residual(trs.size());
            bool feasible = true;
            for (std::size_t k = 0; k < trs.size(); ++k) {
                const auto& e = trs[k].prob;
                if (!live[k] || !e.is_complement_form())
                    continue;
                if (e.as_complement() && std::find(hubs.begin(), hubs.end(), *e.as_complement()) == hubs.end())
                    continue;
                Rational r = e.constant();
                for (const auto& t : e.terms())
                    r += t.coef; // coefficients are negative
                residual[k] = r;
                if (r < Rational(0))
                    feasible = false;
            }

            if (hubs.empty() || !feasible) {
                if (!feasible)
                    for (const auto& [j, ps] : pos)
                        for (auto k : ps)
                            if (!trs[k].prob.as_parameter())
                                throw ValidationError(where() + ": entry " + trs[k].prob.to_string(names) +
                                                      " cannot be expanded (complement constant too small) and "
                                                      "is not a literal parameter");
                for (std::size_t k = 0; k < trs.size(); ++k)
                    if (live[k])
                        paths[m.edge_id(s, c, k)] = {{b.add(s, action, trs[k].target, trs[k].prob)}};
                continue;
            }

            std::vector<char> handled(trs.size(), 0);
            for (std::size_t j : hubs) {
                const auto& ps = pos[j];
                const auto& qs = neg[j];
                Rational kp;
                for (auto k : ps)
                    kp += trs[k].prob.terms()[0].coef;
                Rational kq;
                for (auto k : qs)
                    kq -= trs[k].prob.coefficient(j);
                if (kp != kq)
                    throw ValidationError(where() + ": coefficients of " + names[j] + " do not cancel");
                if (kp > Rational(1))
                    throw ValidationError(where() + ": total coefficient of " + names[j] + " exceeds 1");
                const std::size_t h = b.fresh_state(aux_name(b, s, action, "h_" + names[j]));
                EdgeKey into = b.add(s, action, h, AffineExpr(kp));
                const std::size_t aux = b.aux_action();

                auto branch = [&](const std::vector<std::size_t>& entries, const AffineExpr& prob,
                                  const std::string& tag, auto coef_of) {
                    std::vector<std::pair<std::size_t, KeyPath>> result;
                    if (entries.size() == 1) {
                        EdgeKey e = b.add(h, aux, trs[entries[0]].target, prob);
                        result.push_back({entries[0], {into, e}});
                        return result;
                    }
                    const std::size_t x = b.fresh_state(aux_name(b, s, action, tag + "_" + names[j]));
                    EdgeKey e = b.add(h, aux, x, prob);
                    for (auto k : entries) {
                        EdgeKey f = b.add(x, aux, trs[k].target, AffineExpr(coef_of(k) / kp));
                        result.push_back({k, {into, e, f}});
                    }
                    return result;
                };
                auto theta = AffineExpr::parameter(j);
                auto one_minus = AffineExpr(Rational(1)) - theta;
                for (auto& [k, p] : branch(ps, theta, "hp", [&](std::size_t k) { return trs[k].prob.terms()[0].coef; })) {
                    paths[m.edge_id(s, c, k)].push_back(std::move(p));
                    handled[k] = 1;
                }
                for (auto& [k, p] : branch(qs, one_minus, "hq", [&](std::size_t k) { return -trs[k].prob.coefficient(j); })) {
                    paths[m.edge_id(s, c, k)].push_back(std::move(p));
                    handled[k] = 1;
                }
            }
            for (std::size_t k = 0; k < trs.size(); ++k) {
                if (!live[k])
                    continue;
                const std::size_t id = m.edge_id(s, c, k);
                if (!handled[k]) {
                    paths[id] = {{b.add(s, action, trs[k].target, trs[k].prob)}};
                } else if (residual[k] > Rational(0)) {
                    paths[id].push_back({b.add(s, action, trs[k].target, AffineExpr(residual[k]))});
                }
            }
        }
    }
    return finish(b, m.num_states(), m.num_edges(), paths, std::move(warnings));
}

ExpandedModel split_states(const ExpandedModel& first) {
    ExpandedModel second = split_states(first.model);
    ExpandedModel out{second.model, first.original_states, first.original_edges, second.fresh, {}, first.warnings};
    out.warnings.insert(out.warnings.end(), second.warnings.begin(), second.warnings.end());
    out.lineage.resize(first.lineage.size());
    for (std::size_t e = 0; e < first.lineage.size(); ++e) {
        for (const auto& path : first.lineage[e]) {
            std::vector<EdgePath> acc{EdgePath{}};
            for (auto id : path) {
                std::vector<EdgePath> grown;
                for (const auto& prefix : acc)
                    for (const auto& tail : second.lineage[id]) {
                        EdgePath p = prefix;
                        p.insert(p.end(), tail.begin(), tail.end());
                        grown.push_back(std::move(p));
                    }
                acc = std::move(grown);
            }
            for (auto& p : acc)
                out.lineage[e].push_back(std::move(p));
        }
    }
    return out;
}

ExpandedModel expand(const Pmdp& m) { return split_states(split_transitions(m)); }

bool verify_equivalence(const Pmdp& original, const ExpandedModel& expanded, std::span<const double> theta,
                        const Property& prop, Quantifier q, double tol, double* max_diff) {
    if (prop.path != Property::Path::Until)
        throw ValidationError("expansion preserves until-properties only");
    auto a = path_probability(instantiate(original, theta), prop, q);
    auto b = path_probability(instantiate(expanded.model, theta), prop, q);
    double diff = 0.0;
    for (const auto& [s, w] : original.initial())
        diff = std::max(diff, std::fabs(a.values[s] - b.values[s]));
    if (max_diff)
        *max_diff = diff;
    return diff <= tol;
}

std::string expanded_to_json(const Pmdp& original, const ExpandedModel& e) {
    using nlohmann::ordered_json;
    ordered_json doc;
    doc["model"] = ordered_json::parse(print_model(e.model));
    doc["fresh"] = ordered_json::array();
    for (auto s : e.fresh)
        doc["fresh"].push_back(e.model.state(s).name);
    auto edge_json = [&](const Pmdp& m, std::size_t id) {
        const auto& ref = m.edge(id);
        const auto& ch = m.choices(ref.state)[ref.choice];
        return ordered_json::array(
            {m.state(ref.state).name, m.actions()[ch.action], m.state(ch.transitions[ref.index].target).name});
    };
    doc["lineage"] = ordered_json::array();
    if (original.num_edges() != e.lineage.size())
        throw ValidationError("expanded model does not derive from the given original");
    const auto names = original.parameter_names();
    for (std::size_t id = 0; id < e.lineage.size(); ++id) {
        ordered_json entry;
        ordered_json paths = ordered_json::array();
        for (const auto& p : e.lineage[id]) {
            ordered_json jp = ordered_json::array();
            for (auto x : p)
                jp.push_back(edge_json(e.model, x));
            paths.push_back(std::move(jp));
        }
        entry["edge"] = edge_json(original, id);
        entry["prob"] = original.transition(id).prob.to_string(names);
        entry["paths"] = std::move(paths);
        doc["lineage"].push_back(std::move(entry));
    }
    if (!e.warnings.empty())
        doc["warnings"] = e.warnings;
    return doc.dump(2) + "\n";
}

} // namespace pmdpv
