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

#include "pmdpv/model.hpp"

#include "pmdpv/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace pmdpv {

namespace {

constexpr double kProbSlack = 1e-12;

bool valid_identifier(std::string_view s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_'))
        return false;
    return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

void check_shape(const AffineExpr& e, const std::string& where) {
    if (e.is_constant()) {
        if (e.constant() < Rational(0) || e.constant() > Rational(1))
            throw ValidationError(where + ": constant probability " + e.constant().to_string() + " outside [0,1]");
        return;
    }
    for (const auto& t : e.terms()) {
        Rational k = t.coef < Rational(0) ? -t.coef : t.coef;
        if (k > Rational(1))
            throw ValidationError(where + ": parameter coefficient " + k.to_string() + " exceeds 1");
    }
    if (e.is_positive_form() || e.is_complement_form()) {
        if (e.constant() > Rational(1))
            throw ValidationError(where + ": constant part " + e.constant().to_string() + " exceeds 1");
        return;
    }
    throw ValidationError(where + ": expression mixes positive and negative parameter coefficients; "
                                  "expected g(theta) or 1 - g(theta)");
}

} // namespace

Pmdp::Pmdp(PmdpSpec spec) : spec_(std::move(spec)) {
    auto& d = spec_;
    std::vector<std::string> names;
    for (const auto& p : d.parameters) {
        if (!valid_identifier(p.name))
            throw ValidationError("invalid parameter name '" + p.name + "'");
        if (std::find(names.begin(), names.end(), p.name) != names.end())
            throw ValidationError("duplicate parameter '" + p.name + "'");
        if (!(p.lo >= 0.0 && p.lo <= p.hi && p.hi <= 1.0))
            throw ValidationError("bounds of parameter '" + p.name + "' must satisfy 0 <= lo <= hi <= 1");
        names.push_back(p.name);
    }
    if (d.priors.empty())
        d.priors.assign(d.parameters.size(), BetaPair{});
    if (d.priors.size() != d.parameters.size())
        throw ValidationError("one prior per parameter is required");
    for (std::size_t j = 0; j < d.priors.size(); ++j)
        if (!(d.priors[j].a > 0 && d.priors[j].b > 0))
            throw ValidationError("prior hyperparameters of '" + d.parameters[j].name + "' must be positive");

    if (d.states.empty())
        throw ValidationError("model has no states");
    for (std::size_t s = 0; s < d.states.size(); ++s) {
        const auto& st = d.states[s];
        if (st.name.empty())
            throw ValidationError("state with empty name");
        for (std::size_t t = 0; t < s; ++t)
            if (d.states[t].name == st.name)
                throw ValidationError("duplicate state '" + st.name + "'");
        for (const auto& l : st.labels)
            if (l.starts_with(kAuxPrefix))
                throw ValidationError("label '" + l + "' uses the reserved prefix " + std::string(kAuxPrefix));
    }
    if (d.choices.size() != d.states.size())
        throw ValidationError("choice table does not match the state count");

    offsets_.resize(d.states.size());
    for (std::size_t s = 0; s < d.states.size(); ++s) {
        auto& row = d.choices[s];
        if (row.empty())
            throw ValidationError("state '" + d.states[s].name + "' has no enabled actions");
        std::sort(row.begin(), row.end(), [](const Choice& a, const Choice& b) { return a.action < b.action; });
        for (std::size_t c = 0; c < row.size(); ++c) {
            auto& ch = row[c];
            if (ch.action >= d.actions.size())
                throw ValidationError("unknown action index in state '" + d.states[s].name + "'");
            if (c > 0 && row[c - 1].action == ch.action)
                throw ValidationError("action '" + d.actions[ch.action] + "' listed twice at state '" +
                                      d.states[s].name + "'");
            if (ch.transitions.empty())
                throw ValidationError("action '" + d.actions[ch.action] + "' at '" + d.states[s].name +
                                      "' has no transitions");
            std::sort(ch.transitions.begin(), ch.transitions.end(),
                      [](const Transition& a, const Transition& b) { return a.target < b.target; });
            AffineExpr sum;
            std::string where_row = "row (" + d.states[s].name + ", " + d.actions[ch.action] + ")";
            for (std::size_t k = 0; k < ch.transitions.size(); ++k) {
                const auto& tr = ch.transitions[k];
                if (tr.target >= d.states.size())
                    throw ValidationError(where_row + ": unknown target state");
                if (k > 0 && ch.transitions[k - 1].target == tr.target)
                    throw ValidationError(where_row + ": duplicate target '" + d.states[tr.target].name + "'");
                for (const auto& term : tr.prob.terms())
                    if (term.param >= d.parameters.size())
                        throw ValidationError(where_row + ": unknown parameter index");
                check_shape(tr.prob, where_row + " -> " + d.states[tr.target].name);
                sum = sum + tr.prob;
            }
            if (!(sum == AffineExpr(Rational(1)))) {
                if (!sum.is_constant())
                    throw ValidationError(where_row + ": probabilities do not sum to 1 for every theta (sum is " +
                                          sum.to_string(names) + ")");
                throw ValidationError(where_row + ": probabilities sum to " + sum.constant().to_string() +
                                      ", not 1");
            }
        }
        offsets_[s].resize(row.size());
        for (std::size_t c = 0; c < row.size(); ++c) {
            offsets_[s][c] = edges_.size();
            for (std::size_t k = 0; k < row[c].transitions.size(); ++k)
                edges_.push_back(EdgeRef{s, c, k});
        }
    }

    if (d.initial.empty())
        throw ValidationError("model has no initial state");
    std::sort(d.initial.begin(), d.initial.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    Rational total;
    for (std::size_t i = 0; i < d.initial.size(); ++i) {
        const auto& [s, p] = d.initial[i];
        if (s >= d.states.size())
            throw ValidationError("unknown initial state");
        if (i > 0 && d.initial[i - 1].first == s)
            throw ValidationError("initial state listed twice");
        if (!(p > Rational(0)) || p > Rational(1))
            throw ValidationError("initial probability of '" + d.states[s].name + "' must be in (0,1]");
        total += p;
    }
    if (total != Rational(1))
        throw ValidationError("initial distribution sums to " + total.to_string() + ", not 1");
}

std::vector<std::string> Pmdp::parameter_names() const {
    std::vector<std::string> names;
    for (const auto& p : spec_.parameters)
        names.push_back(p.name);
    return names;
}

std::optional<std::size_t> Pmdp::find_state(std::string_view name) const {
    for (std::size_t s = 0; s < spec_.states.size(); ++s)
        if (spec_.states[s].name == name)
            return s;
    return std::nullopt;
}

std::optional<std::size_t> Pmdp::find_action(std::string_view name) const {
    for (std::size_t a = 0; a < spec_.actions.size(); ++a)
        if (spec_.actions[a] == name)
            return a;
    return std::nullopt;
}

std::optional<std::size_t> Pmdp::find_parameter(std::string_view name) const {
    for (std::size_t j = 0; j < spec_.parameters.size(); ++j)
        if (spec_.parameters[j].name == name)
            return j;
    return std::nullopt;
}

std::optional<std::size_t> Pmdp::find_choice(std::size_t s, std::size_t action) const {
    const auto& row = spec_.choices.at(s);
    for (std::size_t c = 0; c < row.size(); ++c)
        if (row[c].action == action)
            return c;
    return std::nullopt;
}

bool Pmdp::has_label(std::size_t s, std::string_view label) const {
    const auto& labels = spec_.states.at(s).labels;
    return std::find(labels.begin(), labels.end(), label) != labels.end();
}

const Transition& Pmdp::transition(std::size_t id) const {
    const auto& e = edges_.at(id);
    return spec_.choices[e.state][e.choice].transitions[e.index];
}

std::string Pmdp::describe_edge(std::size_t id) const {
    const auto& e = edges_.at(id);
    const auto& ch = spec_.choices[e.state][e.choice];
    return "(" + spec_.states[e.state].name + ", " + spec_.actions[ch.action] + ", " +
           spec_.states[ch.transitions[e.index].target].name + ")";
}

ParamSpace Pmdp::param_space() const {
    Box box;
    for (const auto& p : spec_.parameters) {
        box.lo.push_back(p.lo);
        box.hi.push_back(p.hi);
    }
    std::vector<AffineExpr> constraints;
    for (const auto& row : spec_.choices)
        for (const auto& ch : row)
            for (const auto& tr : ch.transitions) {
                if (tr.prob.is_constant())
                    continue;
                if (std::find(constraints.begin(), constraints.end(), tr.prob) == constraints.end())
                    constraints.push_back(tr.prob);
            }
    return ParamSpace(parameter_names(), std::move(box), std::move(constraints));
}

double Box::volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < lo.size(); ++i)
        v *= hi[i] - lo[i];
    return v;
}

bool Box::contains(std::span<const double> p) const {
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (p[i] < lo[i] || p[i] > hi[i])
            return false;
    return true;
}

bool Box::empty() const {
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (!(lo[i] <= hi[i]))
            return true;
    return false;
}

ParamSpace::ParamSpace(std::vector<std::string> names, Box box, std::vector<AffineExpr> constraints)
    : names_(std::move(names)), box_(std::move(box)), constraints_(std::move(constraints)) {}

bool ParamSpace::contains(std::span<const double> theta) const { return !violation(theta).has_value(); }

std::optional<std::string> ParamSpace::violation(std::span<const double> theta) const {
    if (theta.size() != dims())
        return "expected " + std::to_string(dims()) + " parameter values, got " + std::to_string(theta.size());
    for (std::size_t j = 0; j < dims(); ++j) {
        if (!(theta[j] >= box_.lo[j] - kProbSlack && theta[j] <= box_.hi[j] + kProbSlack)) {
            std::ostringstream os;
            os << "parameter " << names_[j] << " = " << theta[j] << " outside [" << box_.lo[j] << ", "
               << box_.hi[j] << "]";
            return os.str();
        }
    }
    for (const auto& c : constraints_) {
        double v = c.evaluate(theta);
        if (v < -kProbSlack || v > 1.0 + kProbSlack) {
            std::ostringstream os;
            os << c.to_string(names_) << " = " << v << (v < 0 ? " < 0" : " > 1");
            return os.str();
        }
    }
    return std::nullopt;
}

Box ParamSpace::tightened_box() const {
    Box b = box_;
    for (int pass = 0; pass < 200; ++pass) {
        bool changed = false;
        for (const auto& c : constraints_) {
            for (const auto& t : c.terms()) {
                // c = k0 + a*theta_j + rest; 0 <= c <= 1.
                double rest_lo = c.constant().to_double();
                double rest_hi = rest_lo;
                for (const auto& u : c.terms()) {
                    if (u.param == t.param)
                        continue;
                    double x = u.coef_value * b.lo[u.param];
                    double y = u.coef_value * b.hi[u.param];
                    rest_lo += std::min(x, y);
                    rest_hi += std::max(x, y);
                }
                double lo = (0.0 - rest_hi) / t.coef_value;
                double hi = (1.0 - rest_lo) / t.coef_value;
                if (t.coef_value < 0)
                    std::swap(lo, hi);
                double& blo = b.lo[t.param];
                double& bhi = b.hi[t.param];
                if (lo > blo + 1e-15) {
                    blo = lo;
                    changed = true;
                }
                if (hi < bhi - 1e-15) {
                    bhi = hi;
                    changed = true;
                }
                if (blo > bhi + kProbSlack)
                    return b;
            }
        }
        if (!changed)
            break;
    }
    for (std::size_t j = 0; j < b.dims(); ++j)
        if (b.lo[j] > b.hi[j] && b.lo[j] - b.hi[j] <= kProbSlack)
            b.hi[j] = b.lo[j];
    return b;
}

bool ParamSpace::box_valid(const Box& box) const {
    for (const auto& c : constraints_) {
        auto [lo, hi] = c.range(box.lo, box.hi);
        if (lo < -kProbSlack || hi > 1.0 + kProbSlack)
            return false;
    }
    return true;
}

bool ParamSpace::box_invalid(const Box& box) const {
    for (const auto& c : constraints_) {
        auto [lo, hi] = c.range(box.lo, box.hi);
        if (hi < -kProbSlack || lo > 1.0 + kProbSlack)
            return true;
    }
    return false;
}

Mdp::Mdp(const Pmdp& source, std::vector<std::vector<MdpChoice>> choices,
         std::vector<std::pair<std::size_t, double>> initial)
    : source_(&source), choices_(std::move(choices)), initial_(std::move(initial)) {}

Mdp instantiate(const Pmdp& m, std::span<const double> theta) {
    if (theta.size() != m.num_params())
        throw ValidationError("expected " + std::to_string(m.num_params()) + " parameter values, got " +
                              std::to_string(theta.size()));
    const auto names = m.parameter_names();
    for (std::size_t j = 0; j < theta.size(); ++j) {
        const auto& p = m.parameters()[j];
        if (!(theta[j] >= p.lo - kProbSlack && theta[j] <= p.hi + kProbSlack)) {
            std::ostringstream os;
            os << "parameter " << p.name << " = " << theta[j] << " outside [" << p.lo << ", " << p.hi << "]";
            throw ValidationError(os.str());
        }
    }
    std::vector<std::vector<MdpChoice>> choices(m.num_states());
    for (std::size_t s = 0; s < m.num_states(); ++s) {
        auto row = m.choices(s);
        choices[s].reserve(row.size());
        for (const auto& ch : row) {
            MdpChoice out{ch.action, {}};
            out.transitions.reserve(ch.transitions.size());
            for (const auto& tr : ch.transitions) {
                double v = tr.prob.evaluate(theta);
                if (v < -kProbSlack || v > 1.0 + kProbSlack) {
                    std::ostringstream os;
                    os << "probability of (" << m.state(s).name << ", " << m.actions()[ch.action] << ", "
                       << m.state(tr.target).name << ") is " << tr.prob.to_string(names) << " = " << v
                       << (v < 0 ? " < 0" : " > 1");
                    throw ValidationError(os.str());
                }
                out.transitions.push_back(MdpTransition{tr.target, std::clamp(v, 0.0, 1.0)});
            }
            choices[s].push_back(std::move(out));
        }
    }
    std::vector<std::pair<std::size_t, double>> init;
    for (const auto& [s, p] : m.initial())
        init.emplace_back(s, p.to_double());
    return Mdp(m, std::move(choices), std::move(init));
}

std::vector<std::size_t> enabled_actions(const Pmdp& m, std::size_t s) {
    if (s >= m.num_states())
        throw ValidationError("unknown state index " + std::to_string(s));
    std::vector<std::size_t> out;
    for (const auto& ch : m.choices(s))
        out.push_back(ch.action);
    return out;
}

// ---------------------------------------------------------------------------
// Model file format

namespace {

using nlohmann::json;

std::pair<int, int> line_column(std::string_view text, std::size_t byte) {
    int line = 1;
    int col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

Rational probability_value(const json& v, const std::string& where) {
    if (v.is_string())
        return Rational::parse(v.get<std::string>());
    if (v.is_number_integer())
        return Rational(v.get<std::int64_t>());
    if (v.is_number())
        return Rational::from_double(v.get<double>());
    throw ValidationError(where + ": probability must be a number or a string");
}

const json& require(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key))
        throw ValidationError(where + ": missing key '" + key + "'");
    return obj.at(key);
}

} // namespace

Pmdp parse_model(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
        throw ParseError(std::string("model file is not valid JSON: ") + e.what(), line, col);
    }
    if (!doc.is_object())
        throw ValidationError("model file must be a JSON object");

    try {
        PmdpSpec spec;
        if (doc.contains("parameters")) {
            for (const auto& p : doc.at("parameters")) {
                Parameter par;
                par.name = require(p, "name", "parameter").get<std::string>();
                if (p.contains("bounds")) {
                    const auto& b = p.at("bounds");
                    if (!b.is_array() || b.size() != 2)
                        throw ValidationError("parameter '" + par.name + "': bounds must be [lo, hi]");
                    par.lo = b[0].get<double>();
                    par.hi = b[1].get<double>();
                }
                spec.parameters.push_back(par);
            }
        }
        auto param_lookup = [&](std::string_view name) -> std::optional<std::size_t> {
            for (std::size_t j = 0; j < spec.parameters.size(); ++j)
                if (spec.parameters[j].name == name)
                    return j;
            return std::nullopt;
        };
        if (doc.contains("priors")) {
            spec.priors.assign(spec.parameters.size(), BetaPair{});
            for (const auto& [name, v] : doc.at("priors").items()) {
                auto j = param_lookup(name);
                if (!j)
                    throw ValidationError("prior for unknown parameter '" + name + "'");
                if (!v.is_array() || v.size() != 2)
                    throw ValidationError("prior of '" + name + "' must be [mu1, mu2]");
                spec.priors[*j] = BetaPair{v[0].get<double>(), v[1].get<double>()};
            }
        }
        for (const auto& s : require(doc, "states", "model")) {
            StateInfo st;
            if (s.is_string()) {
                st.name = s.get<std::string>();
            } else {
                st.name = require(s, "name", "state").get<std::string>();
                if (s.contains("labels"))
                    st.labels = s.at("labels").get<std::vector<std::string>>();
            }
            spec.states.push_back(std::move(st));
        }
        auto state_lookup = [&](const std::string& name, const std::string& where) {
            for (std::size_t s = 0; s < spec.states.size(); ++s)
                if (spec.states[s].name == name)
                    return s;
            throw ValidationError(where + ": unknown state '" + name + "'");
        };
        spec.choices.resize(spec.states.size());
        const auto& transitions = require(doc, "transitions", "model");
        for (std::size_t i = 0; i < transitions.size(); ++i) {
            const auto& t = transitions[i];
            std::string where = "transition #" + std::to_string(i);
            std::size_t from = state_lookup(require(t, "from", where).get<std::string>(), where);
            std::size_t to = state_lookup(require(t, "to", where).get<std::string>(), where);
            std::string action = require(t, "action", where).get<std::string>();
            auto ait = std::find(spec.actions.begin(), spec.actions.end(), action);
            std::size_t a = static_cast<std::size_t>(ait - spec.actions.begin());
            if (ait == spec.actions.end())
                spec.actions.push_back(action);
            const auto& pv = require(t, "prob", where);
            AffineExpr prob;
            try {
                prob = pv.is_string() ? parse_affine(pv.get<std::string>(), param_lookup)
                                      : AffineExpr(probability_value(pv, where));
            } catch (const ParseError& e) {
                throw ParseError(where + ": " + e.what());
            }
            auto& row = spec.choices[from];
            auto cit = std::find_if(row.begin(), row.end(), [&](const Choice& c) { return c.action == a; });
            if (cit == row.end()) {
                row.push_back(Choice{a, {}});
                cit = row.end() - 1;
            }
            for (const auto& existing : cit->transitions)
                if (existing.target == to)
                    throw ValidationError(where + ": duplicate transition " + spec.states[from].name + " --" +
                                          action + "--> " + spec.states[to].name);
            cit->transitions.push_back(Transition{to, std::move(prob)});
        }
        for (const auto& [name, v] : require(doc, "initial", "model").items())
            spec.initial.emplace_back(state_lookup(name, "initial"), probability_value(v, "initial"));
        return Pmdp(std::move(spec));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed model file: ") + e.what());
    }
}

Pmdp load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot open model file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

std::string print_model(const Pmdp& m) {
    nlohmann::ordered_json doc;
    const auto names = m.parameter_names();
    doc["parameters"] = nlohmann::ordered_json::array();
    for (const auto& p : m.parameters())
        doc["parameters"].push_back({{"name", p.name}, {"bounds", {p.lo, p.hi}}});
    doc["priors"] = nlohmann::ordered_json::object();
    for (std::size_t j = 0; j < m.num_params(); ++j)
        doc["priors"][names[j]] = {m.priors()[j].a, m.priors()[j].b};
    doc["states"] = nlohmann::ordered_json::array();
    for (std::size_t s = 0; s < m.num_states(); ++s)
        doc["states"].push_back({{"name", m.state(s).name}, {"labels", m.state(s).labels}});
    doc["initial"] = nlohmann::ordered_json::object();
    for (const auto& [s, p] : m.initial())
        doc["initial"][m.state(s).name] = p.to_string();
    doc["transitions"] = nlohmann::ordered_json::array();
    // Actions are re-indexed by first appearance on parse, so emit in action order.
    std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> order;
    for (std::size_t s = 0; s < m.num_states(); ++s)
        for (std::size_t c = 0; c < m.choices(s).size(); ++c)
            order.emplace_back(m.choices(s)[c].action, s, c);
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return std::get<0>(a) < std::get<0>(b); });
    for (const auto& [a, s, c] : order)
        for (const auto& tr : m.choices(s)[c].transitions)
            doc["transitions"].push_back({{"from", m.state(s).name},
                                          {"action", m.actions()[a]},
                                          {"to", m.state(tr.target).name},
                                          {"prob", tr.prob.to_string(names)}});
    return doc.dump(2) + "\n";
}

} // namespace pmdpv
