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

#pragma once

#include "pmdpv/affine.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pmdpv {

/// Prefix reserved for states introduced by model expansion. Such states are
/// pass-through for formula evaluation and never carry user labels.
inline constexpr std::string_view kAuxPrefix = "__aux";

struct Parameter {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;

    friend bool operator==(const Parameter&, const Parameter&) = default;
};

struct BetaPair {
    double a = 1.0;
    double b = 1.0;

    double mean() const noexcept { return a / (a + b); }
    friend bool operator==(const BetaPair&, const BetaPair&) = default;
};

struct StateInfo {
    std::string name;
    std::vector<std::string> labels;

    bool auxiliary() const { return name.starts_with(kAuxPrefix); }
    friend bool operator==(const StateInfo&, const StateInfo&) = default;
};

struct Transition {
    std::size_t target;
    AffineExpr prob;

    friend bool operator==(const Transition&, const Transition&) = default;
};

/// One enabled action of a state with its outgoing distribution, sorted by target.
struct Choice {
    std::size_t action;
    std::vector<Transition> transitions;

    friend bool operator==(const Choice&, const Choice&) = default;
};

/// Unvalidated model description; `Pmdp` validates it on construction.
struct PmdpSpec {
    std::vector<Parameter> parameters;
    std::vector<BetaPair> priors; // one per parameter, Dir(1,1) when empty
    std::vector<StateInfo> states;
    std::vector<std::string> actions;
    std::vector<std::vector<Choice>> choices; // per state, sorted by action index
    std::vector<std::pair<std::size_t, Rational>> initial;

    friend bool operator==(const PmdpSpec&, const PmdpSpec&) = default;
};

/// Flat handle of one (state, choice, transition) entry.
struct EdgeRef {
    std::size_t state;
    std::size_t choice;
    std::size_t index;
};

class ParamSpace;

/// Parametric MDP with affine transition probabilities. Immutable once built.
class Pmdp {
public:
    explicit Pmdp(PmdpSpec spec);

    const PmdpSpec& spec() const noexcept { return spec_; }
    std::size_t num_states() const noexcept { return spec_.states.size(); }
    std::size_t num_params() const noexcept { return spec_.parameters.size(); }
    const std::vector<Parameter>& parameters() const noexcept { return spec_.parameters; }
    const std::vector<BetaPair>& priors() const noexcept { return spec_.priors; }
    const std::vector<std::string>& actions() const noexcept { return spec_.actions; }
    const StateInfo& state(std::size_t s) const { return spec_.states.at(s); }
    std::span<const Choice> choices(std::size_t s) const { return spec_.choices.at(s); }
    const std::vector<std::pair<std::size_t, Rational>>& initial() const noexcept { return spec_.initial; }
    std::vector<std::string> parameter_names() const;

    std::optional<std::size_t> find_state(std::string_view name) const;
    std::optional<std::size_t> find_action(std::string_view name) const;
    std::optional<std::size_t> find_parameter(std::string_view name) const;
    /// Index into choices(s) of the given action, if enabled.
    std::optional<std::size_t> find_choice(std::size_t s, std::size_t action) const;
    bool has_label(std::size_t s, std::string_view label) const;

    std::size_t num_edges() const noexcept { return edges_.size(); }
    std::size_t edge_id(std::size_t s, std::size_t choice, std::size_t index) const {
        return offsets_[s][choice] + index;
    }
    const EdgeRef& edge(std::size_t id) const { return edges_.at(id); }
    const Transition& transition(std::size_t id) const;
    std::string describe_edge(std::size_t id) const;

    ParamSpace param_space() const;

    friend bool operator==(const Pmdp& a, const Pmdp& b) { return a.spec_ == b.spec_; }

private:
    PmdpSpec spec_;
    std::vector<std::vector<std::size_t>> offsets_;
    std::vector<EdgeRef> edges_;
};

/// Axis-aligned box of parameter values.
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    std::size_t dims() const noexcept { return lo.size(); }
    double volume() const;
    bool contains(std::span<const double> p) const;
    bool empty() const;
    friend bool operator==(const Box&, const Box&) = default;
};

/// Declared parameter box plus the affine validity constraints 0 <= g(theta) <= 1
/// contributed by every parametric transition.
class ParamSpace {
public:
    ParamSpace(std::vector<std::string> names, Box box, std::vector<AffineExpr> constraints);

    std::size_t dims() const noexcept { return names_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const Box& box() const noexcept { return box_; }
    const std::vector<AffineExpr>& constraints() const noexcept { return constraints_; }

    /// Whether every transition probability lies in [0,1] (within 1e-12) and the point is in the box.
    bool contains(std::span<const double> theta) const;
    /// Human-readable reason the point is invalid, or nullopt.
    std::optional<std::string> violation(std::span<const double> theta) const;
    /// Box tightened by interval propagation of the constraints. Empty if infeasible.
    Box tightened_box() const;
    /// Every point of the box satisfies every constraint.
    bool box_valid(const Box& box) const;
    /// Some single constraint is violated on the whole box.
    bool box_invalid(const Box& box) const;

private:
    std::vector<std::string> names_;
    Box box_;
    std::vector<AffineExpr> constraints_;
};

struct MdpTransition {
    std::size_t target;
    double prob;
};

struct MdpChoice {
    std::size_t action;
    std::vector<MdpTransition> transitions;
};

/// Induced MDP M(theta): the pMDP with every probability evaluated.
class Mdp {
public:
    Mdp(const Pmdp& source, std::vector<std::vector<MdpChoice>> choices, std::vector<std::pair<std::size_t, double>> initial);

    std::size_t num_states() const noexcept { return choices_.size(); }
    std::span<const MdpChoice> choices(std::size_t s) const { return choices_.at(s); }
    const std::vector<std::pair<std::size_t, double>>& initial() const noexcept { return initial_; }
    const Pmdp& source() const noexcept { return *source_; }

private:
    const Pmdp* source_;
    std::vector<std::vector<MdpChoice>> choices_;
    std::vector<std::pair<std::size_t, double>> initial_;
};

/// Parses and validates a model file (JSON). Syntax errors carry line/column.
Pmdp parse_model(std::string_view text);
Pmdp load_model(const std::string& path);
/// Serialises to the model-file format; parse_model(print_model(m)) == m.
std::string print_model(const Pmdp& m);

/// Evaluates every transition at theta. Throws ValidationError naming the first
/// probability outside [0,1] or the parameter outside its bounds.
Mdp instantiate(const Pmdp& m, std::span<const double> theta);

/// Actions enabled at s, in action-index order.
std::vector<std::size_t> enabled_actions(const Pmdp& m, std::size_t s);

} // namespace pmdpv
