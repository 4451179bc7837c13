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

#include "pmdpv/special.hpp"

#include "pmdpv/error.hpp"

#include <cmath>

namespace pmdpv {

namespace {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_fraction(double x, double a, double b) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny)
        d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 100000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny)
            d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny)
            d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps)
            return h;
    }
    throw NumericError("incomplete beta continued fraction did not converge");
}

} // namespace

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double incomplete_beta(double x, double a, double b) {
    if (!(a > 0) || !(b > 0))
        throw NumericError("incomplete beta needs a, b > 0");
    if (!(x >= 0.0 && x <= 1.0))
        throw NumericError("incomplete beta needs x in [0,1]");
    if (x == 0.0)
        return 0.0;
    if (x == 1.0)
        return 1.0;
    const double front =
        std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * beta_fraction(x, a, b) / a;
    return 1.0 - front * beta_fraction(1.0 - x, b, a) / b;
}

double beta_interval_mass(double a, double b, double lo, double hi) {
    if (!(lo >= 0.0 && lo <= hi && hi <= 1.0))
        throw NumericError("interval must satisfy 0 <= lo <= hi <= 1");
    // Subtract in the tail that keeps precision.
    const double mean = a / (a + b);
    if (lo > mean)
        return std::max(0.0, incomplete_beta(1.0 - lo, b, a) - incomplete_beta(1.0 - hi, b, a));
    return std::max(0.0, incomplete_beta(hi, a, b) - incomplete_beta(lo, a, b));
}

} // namespace pmdpv
