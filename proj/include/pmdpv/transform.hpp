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

#include "pmdpv/model.hpp"
#include "pmdpv/property.hpp"
#include "pmdpv/checker.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace pmdpv {

/// Sequence of expanded edge ids whose probabilities multiply.
using EdgePath = std::vector<std::size_t>;

/// Result of expanding a pMDP. Original states keep their indices; fresh
/// states are appended. `lineage[e]` lists, for original edge id e, the
/// expanded paths whose probabilities sum to the original entry.
struct ExpandedModel {
    Pmdp model;
    std::size_t original_states = 0;
    std::size_t original_edges = 0;
    std::vector<std::size_t> fresh;
    std::vector<std::vector<EdgePath>> lineage;
    std::vector<std::string> warnings;

    /// Original model viewed as its own expansion.
    static ExpandedModel identity(const Pmdp& m);

    /// True when every original edge maps to exactly one single-edge path.
    bool is_identity() const;
    /// Probability of one lineage path at theta.
    double path_probability(const EdgePath& p, std::span<const double> theta) const;
    /// Sum of the path expressions of an original edge, as an affine expression
    /// (each path carries at most one parametric factor).
    AffineExpr path_expression(const EdgePath& p) const;
};

/// Replaces every multi-summand positive entry by one edge per summand into a
/// fresh state with a unit exit to the original target.
ExpandedModel split_transitions(const Pmdp& m);

/// Routes parametric entries of each row through a hub reached with the row's
/// total coefficient, which then branches theta_j / 1 - theta_j. Rows whose
/// complement entries cannot be rewritten with nonnegative constants are kept
/// intact provided their positive parametric entries are literal theta_j.
ExpandedModel split_states(const Pmdp& m);
/// Applies split_states on top of an earlier expansion and composes lineage.
ExpandedModel split_states(const ExpandedModel& e);

/// split_states(split_transitions(m)).
ExpandedModel expand(const Pmdp& m);

/// Whether the shape of an entry is const, theta_j or 1 - theta_j.
bool is_normal_entry(const AffineExpr& e);

/// Compares the property's path probability at the original initial states.
bool verify_equivalence(const Pmdp& original, const ExpandedModel& expanded, std::span<const double> theta,
                        const Property& prop, Quantifier q = Quantifier::Universal, double tol = 1e-6,
                        double* max_diff = nullptr);

/// Expanded model plus fresh-state list and lineage, as JSON.
std::string expanded_to_json(const Pmdp& original, const ExpandedModel& e);

} // namespace pmdpv
