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

#include "pmdpv/region.hpp"

#include "parallel.hpp"
#include "pmdpv/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pmdpv {

std::string_view to_string(Verdict v) noexcept {
    switch (v) {
    case Verdict::Sat:
        return "sat";
    case Verdict::Unsat:
        return "unsat";
    case Verdict::Unknown:
        return "unknown";
    case Verdict::Invalid:
        return "invalid";
    }
    return "unknown";
}

Verdict parse_verdict(std::string_view text) {
    if (text == "sat")
        return Verdict::Sat;
    if (text == "unsat")
        return Verdict::Unsat;
    if (text == "unknown")
        return Verdict::Unknown;
    if (text == "invalid")
        return Verdict::Invalid;
    throw ValidationError("unknown verdict '" + std::string(text) + "'");
}

Tie parse_tie(std::string_view text, const std::vector<std::string>& names) {
    auto eq = text.find('=');
    if (eq == std::string_view::npos)
        throw ParseError("tie must look like theta2=theta1");
    auto trim = [](std::string_view s) {
        while (!s.empty() && s.front() == ' ')
            s.remove_prefix(1);
        while (!s.empty() && s.back() == ' ')
            s.remove_suffix(1);
        return s;
    };
    auto find = [&](std::string_view n) {
        auto it = std::find(names.begin(), names.end(), n);
        if (it == names.end())
            throw ValidationError("tie names unknown parameter '" + std::string(n) + "'");
        return static_cast<std::size_t>(it - names.begin());
    };
    return Tie{find(trim(text.substr(0, eq))), find(trim(text.substr(eq + 1)))};
}

// ---------------------------------------------------------------------------

Reduction::Reduction(std::size_t dims, std::vector<Tie> ties) : full_(dims), ties_(std::move(ties)) {
    std::vector<char> tied(dims, 0);
    for (const auto& t : ties_) {
        if (t.param >= dims || t.source >= dims)
            throw ValidationError("tie refers to an unknown parameter");
        if (t.param == t.source)
            throw ValidationError("a parameter cannot be tied to itself");
        if (tied[t.param])
            throw ValidationError("parameter tied twice");
        tied[t.param] = 1;
    }
    for (const auto& t : ties_)
        if (tied[t.source])
            throw ValidationError("tie source must itself be free");
    std::vector<std::size_t> pos(dims, 0);
    for (std::size_t j = 0; j < dims; ++j)
        if (!tied[j]) {
            pos[j] = free_.size();
            free_.push_back(j);
        }
    source_of_.resize(dims);
    for (std::size_t j = 0; j < dims; ++j)
        source_of_[j] = pos[j];
    for (const auto& t : ties_)
        source_of_[t.param] = pos[t.source];
}

std::vector<double> Reduction::project(std::span<const double> full) const {
    if (full.size() != full_)
        throw ValidationError("expected " + std::to_string(full_) + " parameter values");
    std::vector<double> out;
    out.reserve(free_.size());
    for (auto j : free_)
        out.push_back(full[j]);
    return out;
}

std::vector<double> Reduction::expand(std::span<const double> reduced) const {
    if (reduced.size() != free_.size())
        throw ValidationError("expected " + std::to_string(free_.size()) + " free parameter values");
    std::vector<double> out(full_);
    for (std::size_t j = 0; j < full_; ++j)
        out[j] = reduced[source_of_[j]];
    return out;
}

ParamSpace Reduction::reduce(const ParamSpace& space) const {
    if (space.dims() != full_)
        throw ValidationError("parameter space dimension mismatch");
    Box box;
    std::vector<std::string> names;
    for (auto j : free_) {
        box.lo.push_back(space.box().lo[j]);
        box.hi.push_back(space.box().hi[j]);
        names.push_back(space.names()[j]);
    }
    for (const auto& t : ties_) {
        std::size_t k = source_of_[t.param];
        box.lo[k] = std::max(box.lo[k], space.box().lo[t.param]);
        box.hi[k] = std::min(box.hi[k], space.box().hi[t.param]);
    }
    std::vector<AffineExpr> constraints;
    for (auto c : space.constraints()) {
        for (const auto& t : ties_)
            c = c.substituted(t.param, t.source);
        AffineExpr r(c.constant());
        for (const auto& term : c.terms())
            r = r + AffineExpr::parameter(source_of_[term.param], term.coef);
        if (std::find(constraints.begin(), constraints.end(), r) == constraints.end())
            constraints.push_back(std::move(r));
    }
    return ParamSpace(std::move(names), std::move(box), std::move(constraints));
}

// ---------------------------------------------------------------------------

struct RegionMap::Index {
    struct Node {
        int dim = -1;
        double split = 0.0;
        std::uint32_t left = 0;
        std::uint32_t right = 0;
        std::vector<std::uint32_t> bucket;
    };
    std::vector<Node> nodes;
};

namespace {

bool lex_less(const Cell& a, const Cell& b) {
    if (a.box.lo != b.box.lo)
        return std::lexicographical_compare(a.box.lo.begin(), a.box.lo.end(), b.box.lo.begin(), b.box.lo.end());
    return std::lexicographical_compare(a.box.hi.begin(), a.box.hi.end(), b.box.hi.begin(), b.box.hi.end());
}

constexpr std::size_t kLeafSize = 8;
constexpr auto kNone = std::numeric_limits<std::size_t>::max();

} // namespace

RegionMap::RegionMap(std::vector<Cell> cells, double tol) : cells_(std::move(cells)), tol_(tol) {
    if (cells_.empty())
        throw ValidationError("region map has no cells");
    const std::size_t k = cells_.front().box.dims();
    for (const auto& c : cells_) {
        if (c.box.dims() != k || c.box.hi.size() != k)
            throw ValidationError("region cells disagree on dimension");
        if (c.box.empty())
            throw ValidationError("region cell with lo > hi");
    }
    std::sort(cells_.begin(), cells_.end(), lex_less);
    domain_ = cells_.front().box;
    for (const auto& c : cells_)
        for (std::size_t d = 0; d < k; ++d) {
            domain_.lo[d] = std::min(domain_.lo[d], c.box.lo[d]);
            domain_.hi[d] = std::max(domain_.hi[d], c.box.hi[d]);
        }
    build_index();
}

RegionMap::RegionMap(const RegionMap& o) : cells_(o.cells_), tol_(o.tol_), domain_(o.domain_) {
    if (o.index_)
        index_ = std::make_unique<Index>(*o.index_);
}

RegionMap& RegionMap::operator=(const RegionMap& o) {
    if (this != &o) {
        cells_ = o.cells_;
        tol_ = o.tol_;
        domain_ = o.domain_;
        index_ = o.index_ ? std::make_unique<Index>(*o.index_) : nullptr;
    }
    return *this;
}

RegionMap::RegionMap(RegionMap&&) noexcept = default;
RegionMap& RegionMap::operator=(RegionMap&&) noexcept = default;
RegionMap::RegionMap() = default;
RegionMap::~RegionMap() = default;

void RegionMap::build_index() {
    index_ = std::make_unique<Index>();
    auto& nodes = index_->nodes;
    const std::size_t k = dims();

    struct Work {
        std::size_t node;
        std::vector<std::uint32_t> items;
        Box box;
    };
    std::vector<Work> stack;
    std::vector<std::uint32_t> all(cells_.size());
    for (std::uint32_t i = 0; i < all.size(); ++i)
        all[i] = i;
    nodes.emplace_back();
    stack.push_back({0, std::move(all), domain_});
    while (!stack.empty()) {
        Work w = std::move(stack.back());
        stack.pop_back();
        int best_dim = -1;
        double best_split = 0.0;
        std::size_t best_balance = kNone;
        if (w.items.size() > kLeafSize) {
            for (std::size_t d = 0; d < k; ++d) {
                std::vector<std::uint32_t> order = w.items;
                std::sort(order.begin(), order.end(), [&](auto a, auto b) {
                    return cells_[a].box.lo[d] < cells_[b].box.lo[d];
                });
                double max_hi = -std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < order.size(); ++i) {
                    double v = cells_[order[i]].box.lo[d];
                    if (i > 0 && v > w.box.lo[d] && v > cells_[order[i - 1]].box.lo[d] && max_hi <= v) {
                        std::size_t left = i;
                        std::size_t right = order.size() - i;
                        std::size_t balance = left > right ? left - right : right - left;
                        if (balance < best_balance) {
                            best_balance = balance;
                            best_dim = static_cast<int>(d);
                            best_split = v;
                        }
                    }
                    max_hi = std::max(max_hi, cells_[order[i]].box.hi[d]);
                }
            }
        }
        if (best_dim < 0) {
            std::sort(w.items.begin(), w.items.end());
            nodes[w.node].bucket = std::move(w.items);
            continue;
        }
        const auto d = static_cast<std::size_t>(best_dim);
        std::vector<std::uint32_t> left;
        std::vector<std::uint32_t> right;
        for (auto i : w.items)
            (cells_[i].box.hi[d] <= best_split ? left : right).push_back(i);
        Box lbox = w.box;
        Box rbox = w.box;
        lbox.hi[d] = best_split;
        rbox.lo[d] = best_split;
        auto l = static_cast<std::uint32_t>(nodes.size());
        nodes.emplace_back();
        auto r = static_cast<std::uint32_t>(nodes.size());
        nodes.emplace_back();
        nodes[w.node].dim = best_dim;
        nodes[w.node].split = best_split;
        nodes[w.node].left = l;
        nodes[w.node].right = r;
        stack.push_back({l, std::move(left), std::move(lbox)});
        stack.push_back({r, std::move(right), std::move(rbox)});
    }
}

std::optional<std::size_t> RegionMap::locate(std::span<const double> p) const {
    if (p.size() != dims())
        throw ValidationError("point has " + std::to_string(p.size()) + " coordinates, region map has " +
                              std::to_string(dims()));
    if (!domain_.contains(p))
        return std::nullopt;
    std::size_t best = kNone;
    std::vector<std::uint32_t> stack{0};
    while (!stack.empty()) {
        const auto& node = index_->nodes[stack.back()];
        stack.pop_back();
        if (node.dim < 0) {
            for (auto i : node.bucket) {
                if (i >= best)
                    break;
                if (cells_[i].box.contains(p)) {
                    best = i;
                    break;
                }
            }
            continue;
        }
        double x = p[static_cast<std::size_t>(node.dim)];
        if (x <= node.split)
            stack.push_back(node.left);
        if (x >= node.split)
            stack.push_back(node.right);
    }
    if (best == kNone)
        return std::nullopt;
    return best;
}

std::optional<std::size_t> RegionMap::locate_linear(std::span<const double> p) const {
    if (p.size() != dims())
        throw ValidationError("point dimension mismatch");
    for (std::size_t i = 0; i < cells_.size(); ++i)
        if (cells_[i].box.contains(p))
            return i;
    return std::nullopt;
}

Verdict RegionMap::membership(std::span<const double> p) const {
    auto i = locate(p);
    if (!i)
        throw ValidationError("point lies outside the region map");
    return cells_[*i].verdict;
}

double RegionMap::volume(Verdict v) const {
    double total = 0.0;
    for (const auto& c : cells_)
        if (c.verdict == v)
            total += c.box.volume();
    return total;
}

double RegionMap::total_volume() const {
    double total = 0.0;
    for (const auto& c : cells_)
        total += c.box.volume();
    return total;
}

// ---------------------------------------------------------------------------

namespace {

double max_width(const Box& b) {
    double w = 0.0;
    for (std::size_t d = 0; d < b.dims(); ++d)
        w = std::max(w, b.hi[d] - b.lo[d]);
    return w;
}

std::vector<std::vector<double>> sample_points(const Box& b) {
    const std::size_t k = b.dims();
    std::vector<std::vector<double>> pts;
    std::vector<double> centre(k);
    for (std::size_t d = 0; d < k; ++d)
        centre[d] = 0.5 * (b.lo[d] + b.hi[d]);
    pts.push_back(std::move(centre));
    for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
        std::vector<double> c(k);
        for (std::size_t d = 0; d < k; ++d)
            c[d] = (mask >> d & 1) ? b.hi[d] : b.lo[d];
        pts.push_back(std::move(c));
    }
    return pts;
}

struct Outcome {
    bool split = false;
    Verdict verdict = Verdict::Unknown;
    bool at_tol = false;
    std::size_t evaluations = 0;
};

class Synthesiser {
public:
    Synthesiser(const Pmdp& m, const Property& prop, const SynthOptions& opt, const Reduction& red,
                const ParamSpace& space)
        : m_(m), prop_(prop), opt_(opt), red_(red), space_(space) {}

    Outcome evaluate(const Box& cell, double tol) const {
        Outcome out;
        if (space_.box_invalid(cell)) {
            out.verdict = Verdict::Invalid;
            return out;
        }
        const bool small = max_width(cell) <= tol;
        const bool valid = space_.box_valid(cell);
        std::vector<double> values;
        std::vector<char> sats;
        for (const auto& p : sample_points(cell)) {
            if (!valid && !space_.contains(p))
                continue;
            Mdp mdp = instantiate(m_, red_.expand(p));
            double v = decisive_probability(mdp, prop_, opt_.quantifier, opt_.check);
            ++out.evaluations;
            values.push_back(v);
            sats.push_back(compare(v, prop_.op, prop_.threshold));
        }
        if (values.empty()) {
            if (small)
                out.verdict = Verdict::Invalid;
            else
                out.split = true;
            return out;
        }
        auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        const double spread = *hi - *lo;
        double margin = std::numeric_limits<double>::infinity();
        for (double v : values)
            margin = std::min(margin, std::fabs(v - prop_.threshold));
        const bool agree = std::all_of(sats.begin(), sats.end(), [&](char s) { return s == sats.front(); });
        const bool decided = agree && (spread == 0.0 || margin > 2.0 * spread);
        if (decided && (valid || small)) {
            out.verdict = sats.front() ? Verdict::Sat : Verdict::Unsat;
            return out;
        }
        if (small) {
            out.verdict = Verdict::Unknown;
            out.at_tol = true;
            return out;
        }
        out.split = true;
        return out;
    }

    /// Refines `frontier` level by level; appends leaves to `leaves`.
    void refine(std::vector<Box> frontier, double tol, std::vector<Cell>& leaves,
                std::vector<Box>& unknown_at_tol, std::size_t& evaluations) const {
        while (!frontier.empty()) {
            std::vector<Outcome> results(frontier.size());
            detail::parallel_for(frontier.size(), opt_.threads,
                                 [&](std::size_t i) { results[i] = evaluate(frontier[i], tol); });
            std::vector<Box> next;
            for (std::size_t i = 0; i < frontier.size(); ++i) {
                const auto& r = results[i];
                evaluations += r.evaluations;
                if (!r.split) {
                    if (r.at_tol)
                        unknown_at_tol.push_back(frontier[i]);
                    else
                        leaves.push_back(Cell{frontier[i], r.verdict});
                    continue;
                }
                const Box& b = frontier[i];
                std::size_t dim = 0;
                for (std::size_t d = 1; d < b.dims(); ++d)
                    if (b.hi[d] - b.lo[d] > b.hi[dim] - b.lo[dim])
                        dim = d;
                const double mid = 0.5 * (b.lo[dim] + b.hi[dim]);
                Box lower = b;
                Box upper = b;
                lower.hi[dim] = mid;
                upper.lo[dim] = mid;
                next.push_back(std::move(lower));
                next.push_back(std::move(upper));
            }
            frontier = std::move(next);
        }
    }

private:
    const Pmdp& m_;
    const Property& prop_;
    const SynthOptions& opt_;
    const Reduction& red_;
    const ParamSpace& space_;
};

} // namespace

RegionMap synthesise_region(const Pmdp& m, const Property& prop, const SynthOptions& opt, SynthStats* stats) {
    if (!(opt.tol > 0.0))
        throw ValidationError("synthesis tolerance must be positive");
    if (!(opt.budget >= 0.0 && opt.budget <= 1.0))
        throw ValidationError("undecided budget must be a fraction in [0,1]");
    Reduction red(m.num_params(), opt.ties);
    ParamSpace space = red.reduce(m.param_space());
    const Box declared = space.box();
    const Box root = space.tightened_box();
    if (root.empty() || space.box_invalid(root))
        throw ValidationError("validity region of the model is empty");

    std::vector<Cell> leaves;
    // Slabs of the declared box cut away by interval propagation contain no valid point.
    Box rest = declared;
    for (std::size_t d = 0; d < declared.dims(); ++d) {
        if (root.lo[d] > rest.lo[d]) {
            Box slab = rest;
            slab.hi[d] = root.lo[d];
            leaves.push_back(Cell{slab, Verdict::Invalid});
        }
        if (root.hi[d] < rest.hi[d]) {
            Box slab = rest;
            slab.lo[d] = root.hi[d];
            leaves.push_back(Cell{slab, Verdict::Invalid});
        }
        rest.lo[d] = root.lo[d];
        rest.hi[d] = root.hi[d];
    }

    SynthStats st;
    st.final_tol = opt.tol;
    const bool always = (prop.op == Comparison::GreaterEq && prop.threshold == 0.0) ||
                        (prop.op == Comparison::LessEq && prop.threshold == 1.0);
    const bool never = (prop.op == Comparison::Greater && prop.threshold == 1.0) ||
                       (prop.op == Comparison::Less && prop.threshold == 0.0);
    if (always || never) {
        leaves.push_back(Cell{root, always ? Verdict::Sat : Verdict::Unsat});
        if (stats)
            *stats = st;
        return RegionMap(std::move(leaves), opt.tol);
    }

    Synthesiser synth(m, prop, opt, red, space);
    std::vector<Box> unknown;
    double tol = opt.tol;
    synth.refine({root}, tol, leaves, unknown, st.evaluations);
    const double total = declared.volume();
    auto undecided = [&] {
        double v = 0.0;
        for (const auto& b : unknown)
            v += b.volume();
        return total > 0.0 ? v / total : 0.0;
    };
    while (undecided() > opt.budget) {
        if (st.refinements >= opt.max_refinements)
            throw LimitError("undecided volume " + std::to_string(undecided()) + " exceeds budget " +
                             std::to_string(opt.budget) + " after " + std::to_string(st.refinements) +
                             " tolerance halvings");
        tol *= 0.5;
        ++st.refinements;
        std::vector<Box> retry;
        retry.swap(unknown);
        synth.refine(std::move(retry), tol, leaves, unknown, st.evaluations);
    }
    st.final_tol = tol;
    st.undecided_fraction = undecided();
    for (auto& b : unknown)
        leaves.push_back(Cell{std::move(b), Verdict::Unknown});
    if (stats)
        *stats = st;
    return RegionMap(std::move(leaves), tol);
}

// ---------------------------------------------------------------------------

std::string region_to_json(const RegionMap& map) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& c : map.cells())
        arr.push_back({{"lo", c.box.lo}, {"hi", c.box.hi}, {"verdict", std::string(to_string(c.verdict))}});
    return arr.dump() + "\n";
}

RegionMap region_from_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("region map is not valid JSON: ") + e.what());
    }
    if (!doc.is_array())
        throw ValidationError("region map must be a JSON array");
    std::vector<Cell> cells;
    try {
        for (const auto& c : doc) {
            Cell cell{Box{c.at("lo").get<std::vector<double>>(), c.at("hi").get<std::vector<double>>()},
                      parse_verdict(c.at("verdict").get<std::string>())};
            if (cell.box.lo.size() != cell.box.hi.size())
                throw ValidationError("region cell lo/hi lengths differ");
            cells.push_back(std::move(cell));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed region map: ") + e.what());
    }
    double tol = 0.0;
    return RegionMap(std::move(cells), tol);
}

} // namespace pmdpv
