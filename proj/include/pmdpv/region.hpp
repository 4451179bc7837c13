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

#include "pmdpv/checker.hpp"
#include "pmdpv/model.hpp"
#include "pmdpv/property.hpp"

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pmdpv {

enum class Verdict { Sat, Unsat, Unknown, Invalid };

std::string_view to_string(Verdict v) noexcept;
Verdict parse_verdict(std::string_view text);

struct Cell {
    Box box;
    Verdict verdict;

    friend bool operator==(const Cell&, const Cell&) = default;
};

/// theta[param] is set equal to theta[source].
struct Tie {
    std::size_t param;
    std::size_t source;

    friend bool operator==(const Tie&, const Tie&) = default;
};

/// Parses "theta2=theta1" against the model's parameter names.
Tie parse_tie(std::string_view text, const std::vector<std::string>& names);

/// Maps full parameter vectors to the free (untied) coordinates and back.
class Reduction {
public:
    Reduction() = default;
    Reduction(std::size_t dims, std::vector<Tie> ties);

    std::size_t full_dims() const noexcept { return full_; }
    std::size_t free_dims() const noexcept { return free_.size(); }
    const std::vector<std::size_t>& free_params() const noexcept { return free_; }
    const std::vector<Tie>& ties() const noexcept { return ties_; }

    std::vector<double> project(std::span<const double> full) const;
    std::vector<double> expand(std::span<const double> reduced) const;
    /// Validity region over the free coordinates.
    ParamSpace reduce(const ParamSpace& space) const;

private:
    std::size_t full_ = 0;
    std::vector<std::size_t> free_;
    std::vector<Tie> ties_;
    std::vector<std::size_t> source_of_; // per full param, the free index it reads
};

/// Tiling of the parameter domain by tagged rectangles, kept in lexicographic
/// order of (lo, hi). A point on a shared face belongs to the first covering cell.
class RegionMap {
public:
    RegionMap();
    explicit RegionMap(std::vector<Cell> cells, double tol = 0.0);
    RegionMap(const RegionMap& other);
    RegionMap& operator=(const RegionMap& other);
    RegionMap(RegionMap&&) noexcept;
    RegionMap& operator=(RegionMap&&) noexcept;
    ~RegionMap();

    const std::vector<Cell>& cells() const noexcept { return cells_; }
    std::size_t dims() const noexcept { return cells_.empty() ? 0 : cells_.front().box.dims(); }
    double tolerance() const noexcept { return tol_; }
    /// Bounding box of all cells.
    const Box& domain() const noexcept { return domain_; }

    /// Index of the covering cell, or nullopt outside the tiling.
    std::optional<std::size_t> locate(std::span<const double> point) const;
    /// Same answer by scanning every cell; reference for the indexed lookup.
    std::optional<std::size_t> locate_linear(std::span<const double> point) const;
    /// Throws ValidationError outside the tiling.
    Verdict membership(std::span<const double> point) const;

    double volume(Verdict v) const;
    double total_volume() const;

    friend bool operator==(const RegionMap& a, const RegionMap& b) { return a.cells_ == b.cells_; }

private:
    struct Index;
    void build_index();

    std::vector<Cell> cells_;
    double tol_ = 0.0;
    Box domain_;
    std::unique_ptr<Index> index_;
};

struct SynthOptions {
    double tol = 1e-3;
    double budget = 0.02;
    Quantifier quantifier = Quantifier::Universal;
    CheckOptions check;
    std::vector<Tie> ties;
    unsigned threads = 1;
    std::size_t max_refinements = 20;
};

struct SynthStats {
    std::size_t evaluations = 0;
    std::size_t refinements = 0;
    double final_tol = 0.0;
    double undecided_fraction = 0.0;
};

/// Sample-based adaptive bisection of the parameter domain into sat/unsat/
/// unknown/invalid cells over the free parameters.
RegionMap synthesise_region(const Pmdp& m, const Property& prop, const SynthOptions& opt = {},
                            SynthStats* stats = nullptr);

/// JSON array of {lo, hi, verdict}.
std::string region_to_json(const RegionMap& map);
RegionMap region_from_json(std::string_view text);

} // namespace pmdpv
