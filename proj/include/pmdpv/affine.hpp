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

#include "pmdpv/rational.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pmdpv {

struct AffineTerm {
    std::size_t param;
    Rational coef;
    double coef_value;

    friend bool operator==(const AffineTerm& a, const AffineTerm& b) {
        return a.param == b.param && a.coef == b.coef;
    }
};

/// k0 + k1*theta_1 + ... + kn*theta_n with exact rational coefficients.
/// Terms are kept sorted by parameter index with nonzero coefficients only.
class AffineExpr {
public:
    AffineExpr() = default;
    explicit AffineExpr(const Rational& constant);
    static AffineExpr parameter(std::size_t index, const Rational& coef = Rational(1));

    const Rational& constant() const noexcept { return constant_; }
    const std::vector<AffineTerm>& terms() const noexcept { return terms_; }
    Rational coefficient(std::size_t index) const;

    bool is_constant() const noexcept { return terms_.empty(); }
    bool is_zero() const noexcept { return terms_.empty() && constant_.is_zero(); }
    /// Exactly theta_j.
    std::optional<std::size_t> as_parameter() const;
    /// Exactly 1 - theta_j.
    std::optional<std::size_t> as_complement() const;
    /// Constant >= 0 and every coefficient >= 0.
    bool is_positive_form() const;
    /// Every coefficient <= 0 with at least one parameter term.
    bool is_complement_form() const;
    /// Number of nonzero summands, counting the constant.
    std::size_t summands() const noexcept { return terms_.size() + (constant_.is_zero() ? 0 : 1); }

    double evaluate(std::span<const double> theta) const noexcept;
    /// Interval bounds over the box [lo, hi].
    std::pair<double, double> range(std::span<const double> lo, std::span<const double> hi) const noexcept;

    AffineExpr operator+(const AffineExpr& o) const;
    AffineExpr operator-(const AffineExpr& o) const;
    AffineExpr scaled(const Rational& factor) const;
    /// Replaces theta_from by theta_to everywhere.
    AffineExpr substituted(std::size_t from, std::size_t to) const;

    std::string to_string(std::span<const std::string> names) const;

    friend bool operator==(const AffineExpr& a, const AffineExpr& b) {
        return a.constant_ == b.constant_ && a.terms_ == b.terms_;
    }

private:
    void add_term(std::size_t index, const Rational& coef);

    Rational constant_;
    double constant_value_ = 0.0;
    std::vector<AffineTerm> terms_;
};

using ParamLookup = std::function<std::optional<std::size_t>(std::string_view)>;

/// Grammar: expr := ['-'] term (('+'|'-') term)* ; term := rational | rational '*' param | param.
/// Throws ParseError with a 1-based column on malformed input.
AffineExpr parse_affine(std::string_view text, const ParamLookup& lookup);

} // namespace pmdpv
