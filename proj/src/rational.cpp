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

#include "pmdpv/rational.hpp"

#include "pmdpv/error.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

namespace pmdpv {

namespace {

using i128 = __int128;

std::int64_t narrow(i128 v) {
    if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min())
        throw NumericError("rational arithmetic overflow");
    return static_cast<std::int64_t>(v);
}

Rational make(i128 num, i128 den) {
    if (den == 0)
        throw NumericError("rational division by zero");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    i128 a = num < 0 ? -num : num;
    i128 b = den;
    while (b != 0) {
        i128 t = a % b;
        a = b;
        b = t;
    }
    if (a > 1) {
        num /= a;
        den /= a;
    }
    return Rational(narrow(num), narrow(den));
}

} // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
    if (den == 0)
        throw NumericError("rational with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    num_ = num;
    den_ = den;
}

Rational Rational::parse(std::string_view text) {
    auto fail = [&] { return ParseError("invalid rational '" + std::string(text) + "'"); };
    if (text.empty())
        throw fail();
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        Rational n = parse(text.substr(0, slash));
        Rational d = parse(text.substr(slash + 1));
        if (d.is_zero())
            throw fail();
        return n / d;
    }
    std::size_t i = 0;
    bool negative = false;
    if (text[i] == '+' || text[i] == '-') {
        negative = text[i] == '-';
        ++i;
    }
    i128 mantissa = 0;
    int scale = 0;
    bool digits = false;
    bool dot = false;
    for (; i < text.size(); ++i) {
        char c = text[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            mantissa = mantissa * 10 + (c - '0');
            if (mantissa > i128(std::numeric_limits<std::int64_t>::max()))
                throw NumericError("rational literal too long: '" + std::string(text) + "'");
            if (dot)
                ++scale;
            digits = true;
        } else if (c == '.' && !dot) {
            dot = true;
        } else {
            break;
        }
    }
    if (!digits)
        throw fail();
    int exponent = 0;
    if (i < text.size()) {
        if (text[i] != 'e' && text[i] != 'E')
            throw fail();
        ++i;
        bool eneg = false;
        if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
            eneg = text[i] == '-';
            ++i;
        }
        if (i >= text.size())
            throw fail();
        for (; i < text.size(); ++i) {
            if (!std::isdigit(static_cast<unsigned char>(text[i])) || exponent > 100)
                throw fail();
            exponent = exponent * 10 + (text[i] - '0');
        }
        if (eneg)
            exponent = -exponent;
    }
    int power = exponent - scale;
    i128 num = negative ? -mantissa : mantissa;
    i128 den = 1;
    for (; power > 0; --power) {
        num *= 10;
        narrow(num);
    }
    for (; power < 0; ++power) {
        den *= 10;
        narrow(den);
    }
    return make(num, den);
}

Rational Rational::from_double(double value) {
    if (!std::isfinite(value))
        throw NumericError("non-finite value cannot be made rational");
    std::int64_t den = 1;
    for (int k = 0; k < 15; ++k) {
        double scaled = value * static_cast<double>(den);
        if (std::nearbyint(scaled) == scaled)
            break;
        den *= 10;
    }
    return Rational(static_cast<std::int64_t>(std::llround(value * static_cast<double>(den))), den);
}

std::string Rational::to_string() const {
    if (den_ == 1)
        return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::operator-() const { return make(-i128(num_), den_); }

Rational operator+(const Rational& a, const Rational& b) {
    return make(i128(a.num_) * b.den_ + i128(b.num_) * a.den_, i128(a.den_) * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) {
    return make(i128(a.num_) * b.den_ - i128(b.num_) * a.den_, i128(a.den_) * b.den_);
}

Rational operator*(const Rational& a, const Rational& b) {
    return make(i128(a.num_) * b.num_, i128(a.den_) * b.den_);
}

Rational operator/(const Rational& a, const Rational& b) {
    return make(i128(a.num_) * b.den_, i128(a.den_) * b.num_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    i128 l = i128(a.num_) * b.den_;
    i128 r = i128(b.num_) * a.den_;
    return l < r ? std::strong_ordering::less
                 : (l > r ? std::strong_ordering::greater : std::strong_ordering::equal);
}

} // namespace pmdpv
