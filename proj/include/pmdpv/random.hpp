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

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>

namespace pmdpv {

/// Philox2x64-10 counter-based generator. The key is the seed; the counter is
/// (block index, stream), so independent streams never overlap.
class Philox {
public:
    using Block = std::array<std::uint64_t, 2>;

    static Block generate(Block counter, std::uint64_t key) noexcept;

    explicit Philox(std::uint64_t seed, std::uint64_t stream = 0) noexcept : key_(seed), stream_(stream) {}

    std::uint64_t next() noexcept;

private:
    std::uint64_t key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    Block buf_{};
    int avail_ = 0;
};

/// Mixes a seed with a sequence of indices into a new seed (splitmix64 finaliser chain).
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept;

/// Portable distributions on top of Philox; results depend only on (seed, stream, call order).
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept : gen_(seed, stream) {}

    std::uint64_t next_u64() noexcept { return gen_.next(); }
    /// Uniform on [0,1) with 53 random bits.
    double uniform() noexcept;
    /// Uniform on (0,1).
    double uniform_open() noexcept;
    /// Uniform integer in [0,n).
    std::uint64_t uniform_int(std::uint64_t n) noexcept;
    double normal() noexcept;
    double gamma(double shape);
    double beta(double a, double b);
    std::int64_t binomial(std::int64_t n, double p);
    /// Inverse-CDF draw over weights in index order. Weights need not be normalised.
    std::size_t categorical(std::span<const double> weights);

private:
    Philox gen_;
};

} // namespace pmdpv
