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

namespace pmdpv {

/// log B(a, b).
double log_beta(double a, double b);

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0,1].
double incomplete_beta(double x, double a, double b);

/// P(lo <= X <= hi) for X ~ Beta(a, b).
double beta_interval_mass(double a, double b, double lo, double hi);

} // namespace pmdpv
