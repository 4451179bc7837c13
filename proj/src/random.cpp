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

#include "pmdpv/random.hpp"

#include "pmdpv/error.hpp"

#include <cmath>
#include <numeric>

namespace pmdpv {

namespace {

constexpr std::uint64_t kPhiloxM = 0xD2B74407B1CE6E93ULL;
constexpr std::uint64_t kPhiloxW = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

Philox::Block Philox::generate(Block ctr, std::uint64_t key) noexcept {
    for (int round = 0; round < 10; ++round) {
        unsigned __int128 prod = static_cast<unsigned __int128>(kPhiloxM) * ctr[0];
        auto hi = static_cast<std::uint64_t>(prod >> 64);
        auto lo = static_cast<std::uint64_t>(prod);
        ctr = {hi ^ key ^ ctr[1], lo};
        key += kPhiloxW;
    }
    return ctr;
}

std::uint64_t Philox::next() noexcept {
    if (avail_ == 0) {
        buf_ = generate({block_++, stream_}, key_);
        avail_ = 2;
    }
    return buf_[2 - avail_--];
}

std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = mix64(seed + kPhiloxW);
    for (auto v : path)
        h = mix64(h ^ (v + kPhiloxW + (h << 6) + (h >> 2)));
    return h;
}

double Rng::uniform() noexcept { return static_cast<double>(gen_.next() >> 11) * 0x1.0p-53; }

double Rng::uniform_open() noexcept { return (static_cast<double>(gen_.next() >> 12) + 0.5) * 0x1.0p-52; }

std::uint64_t Rng::uniform_int(std::uint64_t n) noexcept {
    // Rejection keeps the draw exactly uniform.
    std::uint64_t limit = n == 0 ? 0 : (~std::uint64_t{0} / n) * n;
    for (;;) {
        std::uint64_t x = gen_.next();
        if (x < limit)
            return x % n;
    }
}

double Rng::normal() noexcept {
    double u1 = uniform_open();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double Rng::gamma(double shape) {
    if (!(shape > 0) || !std::isfinite(shape))
        throw NumericError("gamma shape must be positive and finite");
    if (shape < 1.0) {
        double g = gamma(shape + 1.0);
        return g * std::pow(uniform_open(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x;
        double v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        double u = uniform_open();
        if (u < 1.0 - 0.0331 * x * x * x * x)
            return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
            return d * v;
    }
}

double Rng::beta(double a, double b) {
    for (;;) {
        double x = gamma(a);
        double y = gamma(b);
        double s = x + y;
        if (s > 0)
            return x / s;
    }
}

std::int64_t Rng::binomial(std::int64_t n, double p) {
    if (n < 0 || !(p >= 0.0 && p <= 1.0))
        throw NumericError("binomial parameters out of range");
    if (n == 0 || p == 0.0)
        return 0;
    if (p == 1.0)
        return n;
    // Chop-down inversion starting at the mode, alternating sides.
    const double q = 1.0 - p;
    const auto mode = static_cast<std::int64_t>(std::floor((static_cast<double>(n) + 1.0) * p));
    const std::int64_t m = std::min(mode, n);
    auto log_pmf = [&](std::int64_t k) {
        return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
               std::lgamma(static_cast<double>(n - k) + 1.0) + static_cast<double>(k) * std::log(p) +
               static_cast<double>(n - k) * std::log(q);
    };
    const double pm = std::exp(log_pmf(m));
    for (;;) {
        double u = uniform();
        if ((u -= pm) < 0)
            return m;
        double up = pm;
        double down = pm;
        std::int64_t hi = m;
        std::int64_t lo = m;
        while (hi < n || lo > 0) {
            if (hi < n) {
                up *= static_cast<double>(n - hi) / static_cast<double>(hi + 1) * (p / q);
                ++hi;
                if ((u -= up) < 0)
                    return hi;
            }
            if (lo > 0) {
                down *= static_cast<double>(lo) / static_cast<double>(n - lo + 1) * (q / p);
                --lo;
                if ((u -= down) < 0)
                    return lo;
            }
        }
        // Rounding left u marginally positive; redraw.
    }
}

std::size_t Rng::categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0))
            throw NumericError("categorical weights must be nonnegative");
        total += w;
    }
    if (!(total > 0.0))
        throw NumericError("categorical weights sum to zero");
    double u = uniform() * total;
    std::size_t last = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0)
            continue;
        last = i;
        if (u < weights[i])
            return i;
        u -= weights[i];
    }
    return last;
}

} // namespace pmdpv
