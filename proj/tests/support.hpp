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
#include "pmdpv/random.hpp"

#include <string>
#include <vector>

namespace pmdpv::test {

inline std::string model_path(const std::string& name) {
    return std::string(PMDPV_MODELS_DIR) + "/" + name;
}

inline const std::vector<std::string>& shipped_models() {
    static const std::vector<std::string> names{"fig2.json", "fig3.json", "fig3_split.json", "fig4.json"};
    return names;
}

// Uniform over the parameter box, rejected until every probability is valid.
inline std::vector<double> random_valid_theta(const Pmdp& m, Rng& rng) {
    const auto space = m.param_space();
    std::vector<double> theta(m.num_params());
    for (;;) {
        for (std::size_t j = 0; j < theta.size(); ++j) {
            const auto& p = m.parameters()[j];
            theta[j] = p.lo + (p.hi - p.lo) * rng.uniform();
        }
        if (space.contains(theta))
            return theta;
    }
}

} // namespace pmdpv::test
