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

#include "pmdpv/property.hpp"

#include "pmdpv/error.hpp"
#include "pmdpv/model.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

namespace pmdpv {

bool compare(double value, Comparison op, double threshold) noexcept {
    switch (op) {
    case Comparison::Less:
        return value < threshold;
    case Comparison::LessEq:
        return value <= threshold;
    case Comparison::GreaterEq:
        return value >= threshold;
    case Comparison::Greater:
        return value > threshold;
    }
    return false;
}

std::string_view to_string(Comparison c) noexcept {
    switch (c) {
    case Comparison::Less:
        return "<";
    case Comparison::LessEq:
        return "<=";
    case Comparison::GreaterEq:
        return ">=";
    case Comparison::Greater:
        return ">";
    }
    return "?";
}

std::string StateFormula::to_string() const {
    switch (kind) {
    case Kind::True:
        return "true";
    case Kind::Label:
        return "\"" + label + "\"";
    case Kind::Not: {
        const auto& f = operands[0];
        std::string inner = f.to_string();
        return f.kind == Kind::And ? "!(" + inner + ")" : "!" + inner;
    }
    case Kind::And: {
        auto side = [](const StateFormula& f) {
            return f.kind == Kind::And ? "(" + f.to_string() + ")" : f.to_string();
        };
        return side(operands[0]) + " & " + side(operands[1]);
    }
    }
    return {};
}

std::string Property::to_string() const {
    char num[32];
    std::snprintf(num, sizeof num, "%.17g", threshold);
    std::string out = "P" + std::string(pmdpv::to_string(op)) + num + " [ ";
    if (path == Path::Until)
        out += lhs.to_string() + " U " + rhs.to_string();
    else
        out += "X " + rhs.to_string();
    return out + " ]";
}

namespace {

class PropertyParser {
public:
    explicit PropertyParser(std::string_view text) : text_(text) {}

    Property parse() {
        Property p;
        skip();
        expect('P');
        skip();
        p.op = comparison();
        skip();
        p.threshold = number();
        if (!(p.threshold >= 0.0 && p.threshold <= 1.0))
            fail("probability threshold must lie in [0,1]");
        skip();
        expect('[');
        skip();
        if (peek_word("X")) {
            pos_ += 1;
            p.path = Property::Path::Next;
            p.rhs = formula();
        } else {
            p.lhs = formula();
            skip();
            if (!peek_word("U"))
                fail("expected 'U'");
            pos_ += 1;
            p.path = Property::Path::Until;
            p.rhs = formula();
        }
        skip();
        expect(']');
        skip();
        if (pos_ != text_.size())
            fail("unexpected trailing input");
        return p;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("property: " + what, 1, static_cast<int>(pos_) + 1);
    }

    void skip() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    void expect(char c) {
        if (pos_ >= text_.size() || text_[pos_] != c)
            fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    // A keyword followed by a non-identifier character.
    bool peek_word(std::string_view w) const {
        if (text_.substr(pos_, w.size()) != w)
            return false;
        std::size_t end = pos_ + w.size();
        return end >= text_.size() ||
               !(std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_');
    }

    Comparison comparison() {
        auto rest = text_.substr(pos_);
        if (rest.starts_with("<=")) {
            pos_ += 2;
            return Comparison::LessEq;
        }
        if (rest.starts_with(">=")) {
            pos_ += 2;
            return Comparison::GreaterEq;
        }
        if (rest.starts_with("<")) {
            pos_ += 1;
            return Comparison::Less;
        }
        if (rest.starts_with(">")) {
            pos_ += 1;
            return Comparison::Greater;
        }
        fail("expected one of <, <=, >=, >");
    }

    double number() {
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' || text_[pos_] == 'e' ||
                text_[pos_] == 'E' || ((text_[pos_] == '-' || text_[pos_] == '+') && pos_ > start &&
                                       (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E'))))
            ++pos_;
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
        if (ec != std::errc() || ptr != text_.data() + pos_ || start == pos_) {
            pos_ = start;
            fail("expected a probability threshold");
        }
        return v;
    }

    StateFormula formula() {
        StateFormula left = unary();
        skip();
        while (pos_ < text_.size() && text_[pos_] == '&') {
            ++pos_;
            StateFormula right = unary();
            left = StateFormula::conjunction(std::move(left), std::move(right));
            skip();
        }
        return left;
    }

    StateFormula unary() {
        skip();
        if (pos_ >= text_.size())
            fail("unexpected end of property");
        char c = text_[pos_];
        if (c == '!') {
            ++pos_;
            return StateFormula::negation(unary());
        }
        if (c == '(') {
            ++pos_;
            StateFormula f = formula();
            skip();
            expect(')');
            return f;
        }
        if (c == '"') {
            std::size_t end = text_.find('"', pos_ + 1);
            if (end == std::string_view::npos)
                fail("unterminated label");
            std::string label(text_.substr(pos_ + 1, end - pos_ - 1));
            if (label.empty())
                fail("empty label");
            pos_ = end + 1;
            return StateFormula::atom(std::move(label));
        }
        if (peek_word("true")) {
            pos_ += 4;
            return StateFormula::truth();
        }
        if (c == 'P' && pos_ + 1 < text_.size() &&
            (text_[pos_ + 1] == '<' || text_[pos_ + 1] == '>' || std::isspace(static_cast<unsigned char>(text_[pos_ + 1]))))
            fail("nested probabilistic operators are not supported");
        fail("expected a state formula");
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

bool eval_at(const Pmdp& m, std::size_t s, const StateFormula& f) {
    switch (f.kind) {
    case StateFormula::Kind::True:
        return true;
    case StateFormula::Kind::Label:
        return m.has_label(s, f.label);
    case StateFormula::Kind::Not:
        return !eval_at(m, s, f.operands[0]);
    case StateFormula::Kind::And:
        return eval_at(m, s, f.operands[0]) && eval_at(m, s, f.operands[1]);
    }
    return false;
}

} // namespace

Property parse_property(std::string_view text) { return PropertyParser(text).parse(); }

std::vector<char> evaluate_states(const Pmdp& m, const StateFormula& f, bool aux_value) {
    std::vector<char> out(m.num_states());
    for (std::size_t s = 0; s < m.num_states(); ++s)
        out[s] = m.state(s).auxiliary() ? aux_value : eval_at(m, s, f);
    return out;
}

} // namespace pmdpv
