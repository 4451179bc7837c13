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

#include "pmdpv/affine.hpp"

#include "pmdpv/error.hpp"

#include <algorithm>
#include <cctype>

namespace pmdpv {

AffineExpr::AffineExpr(const Rational& constant) : constant_(constant), constant_value_(constant.to_double()) {}

AffineExpr AffineExpr::parameter(std::size_t index, const Rational& coef) {
    AffineExpr e;
    e.add_term(index, coef);
    return e;
}

void AffineExpr::add_term(std::size_t index, const Rational& coef) {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), index,
                               [](const AffineTerm& t, std::size_t i) { return t.param < i; });
    if (it != terms_.end() && it->param == index) {
        it->coef += coef;
        it->coef_value = it->coef.to_double();
        if (it->coef.is_zero())
            terms_.erase(it);
    } else if (!coef.is_zero()) {
        terms_.insert(it, AffineTerm{index, coef, coef.to_double()});
    }
}

Rational AffineExpr::coefficient(std::size_t index) const {
    for (const auto& t : terms_)
        if (t.param == index)
            return t.coef;
    return Rational(0);
}

std::optional<std::size_t> AffineExpr::as_parameter() const {
    if (constant_.is_zero() && terms_.size() == 1 && terms_[0].coef == Rational(1))
        return terms_[0].param;
    return std::nullopt;
}

std::optional<std::size_t> AffineExpr::as_complement() const {
    if (constant_ == Rational(1) && terms_.size() == 1 && terms_[0].coef == Rational(-1))
        return terms_[0].param;
    return std::nullopt;
}

bool AffineExpr::is_positive_form() const {
    if (constant_ < Rational(0))
        return false;
    return std::all_of(terms_.begin(), terms_.end(), [](const AffineTerm& t) { return t.coef > Rational(0); });
}

bool AffineExpr::is_complement_form() const {
    return !terms_.empty() &&
           std::all_of(terms_.begin(), terms_.end(), [](const AffineTerm& t) { return t.coef < Rational(0); });
}

double AffineExpr::evaluate(std::span<const double> theta) const noexcept {
    double v = constant_value_;
    for (const auto& t : terms_)
        v += t.coef_value * theta[t.param];
    return v;
}

std::pair<double, double> AffineExpr::range(std::span<const double> lo, std::span<const double> hi) const noexcept {
    double a = constant_value_;
    double b = constant_value_;
    for (const auto& t : terms_) {
        if (t.coef_value >= 0) {
            a += t.coef_value * lo[t.param];
            b += t.coef_value * hi[t.param];
        } else {
            a += t.coef_value * hi[t.param];
            b += t.coef_value * lo[t.param];
        }
    }
    return {a, b};
}

AffineExpr AffineExpr::operator+(const AffineExpr& o) const {
    AffineExpr r(constant_ + o.constant_);
    r.terms_ = terms_;
    for (const auto& t : o.terms_)
        r.add_term(t.param, t.coef);
    return r;
}

AffineExpr AffineExpr::operator-(const AffineExpr& o) const { return *this + o.scaled(Rational(-1)); }

AffineExpr AffineExpr::scaled(const Rational& factor) const {
    AffineExpr r(constant_ * factor);
    for (const auto& t : terms_)
        r.add_term(t.param, t.coef * factor);
    return r;
}

AffineExpr AffineExpr::substituted(std::size_t from, std::size_t to) const {
    AffineExpr r(constant_);
    for (const auto& t : terms_)
        r.add_term(t.param == from ? to : t.param, t.coef);
    return r;
}

std::string AffineExpr::to_string(std::span<const std::string> names) const {
    std::string out;
    if (!constant_.is_zero() || terms_.empty())
        out = constant_.to_string();
    for (const auto& t : terms_) {
        bool negative = t.coef < Rational(0);
        Rational mag = negative ? -t.coef : t.coef;
        if (out.empty())
            out = negative ? "-" : "";
        else
            out += negative ? " - " : " + ";
        if (mag != Rational(1))
            out += mag.to_string() + "*";
        out += names[t.param];
    }
    return out;
}

namespace {

class ExprParser {
public:
    ExprParser(std::string_view text, const ParamLookup& lookup) : text_(text), lookup_(lookup) {}

    AffineExpr run() {
        AffineExpr result;
        skip();
        bool negate = false;
        if (peek() == '-') {
            negate = true;
            ++pos_;
        }
        AffineExpr first = term();
        result = negate ? first.scaled(Rational(-1)) : first;
        for (;;) {
            skip();
            if (pos_ >= text_.size())
                break;
            char op = text_[pos_];
            if (op != '+' && op != '-')
                fail("expected '+' or '-'");
            ++pos_;
            AffineExpr t = term();
            result = op == '+' ? result + t : result - t;
        }
        return result;
    }

private:
    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    void skip() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("probability expression '" + std::string(text_) + "': " + what, 1,
                         static_cast<int>(pos_) + 1);
    }

    static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
    static bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

    std::string_view number_token() {
        std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-'))
                ++pos_;
            if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
                pos_ = save;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
        }
        return text_.substr(start, pos_ - start);
    }

    Rational rational() {
        std::size_t start = pos_;
        std::string_view num = number_token();
        if (num.empty())
            fail("expected a number");
        Rational value;
        try {
            value = Rational::parse(num);
            skip();
            if (peek() == '/') {
                ++pos_;
                skip();
                std::string_view den = number_token();
                if (den.empty())
                    fail("expected a denominator");
                value = value / Rational::parse(den);
            }
        } catch (const NumericError&) {
            pos_ = start;
            fail("invalid number");
        } catch (const ParseError&) {
            pos_ = start;
            fail("invalid number");
        }
        return value;
    }

    std::size_t param() {
        std::size_t start = pos_;
        while (pos_ < text_.size() && ident_char(text_[pos_]))
            ++pos_;
        std::string_view name = text_.substr(start, pos_ - start);
        auto idx = lookup_(name);
        if (!idx) {
            pos_ = start;
            fail("unknown parameter '" + std::string(name) + "'");
        }
        return *idx;
    }

    AffineExpr term() {
        skip();
        char c = peek();
        if (ident_start(c))
            return AffineExpr::parameter(param());
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            Rational k = rational();
            skip();
            if (peek() == '*') {
                ++pos_;
                skip();
                if (!ident_start(peek()))
                    fail("expected a parameter name after '*'");
                return AffineExpr::parameter(param(), k);
            }
            return AffineExpr(k);
        }
        fail(c == '\0' ? "unexpected end of expression" : std::string("unexpected character '") + c + "'");
    }

    std::string_view text_;
    const ParamLookup& lookup_;
    std::size_t pos_ = 0;
};

} // namespace

AffineExpr parse_affine(std::string_view text, const ParamLookup& lookup) {
    return ExprParser(text, lookup).run();
}

} // namespace pmdpv
