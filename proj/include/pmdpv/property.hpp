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

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace pmdpv {

class Pmdp;

/// Propositional state formula: true, "label", negation, conjunction.
struct StateFormula {
    enum class Kind { True, Label, Not, And };

    Kind kind = Kind::True;
    std::string label;
    std::vector<StateFormula> operands;

    static StateFormula truth() { return {}; }
    static StateFormula atom(std::string label) { return {Kind::Label, std::move(label), {}}; }
    static StateFormula negation(StateFormula f) { return {Kind::Not, {}, {std::move(f)}}; }
    static StateFormula conjunction(StateFormula a, StateFormula b) {
        return {Kind::And, {}, {std::move(a), std::move(b)}};
    }

    std::string to_string() const;
    friend bool operator==(const StateFormula&, const StateFormula&) = default;
};

enum class Comparison { Less, LessEq, GreaterEq, Greater };

/// True for < and <=, where the satisfaction check bounds the maximal probability.
inline bool is_upper_bound(Comparison c) noexcept { return c == Comparison::Less || c == Comparison::LessEq; }
bool compare(double value, Comparison op, double threshold) noexcept;
std::string_view to_string(Comparison c) noexcept;

/// Top-level probabilistic formula P op p [ lhs U rhs ] or P op p [ X rhs ].
struct Property {
    enum class Path { Until, Next };

    Comparison op = Comparison::GreaterEq;
    double threshold = 0.0;
    Path path = Path::Until;
    StateFormula lhs; // unused for Next
    StateFormula rhs;

    std::string to_string() const;
    friend bool operator==(const Property&, const Property&) = default;
};

/// Parses `P op num [ sf U sf ]` or `P op num [ X sf ]`. Throws ParseError with a column.
Property parse_property(std::string_view text);

/// Per-state truth of a formula. Auxiliary expansion states get `aux_value`.
std::vector<char> evaluate_states(const Pmdp& m, const StateFormula& f, bool aux_value);

} // namespace pmdpv
