/*
 * Copyright 2026 the pipetune authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

namespace pipetune {

/// Power samples (t seconds, watts), strictly increasing in t.
struct PowerTrace {
    std::vector<std::pair<double, double>> samples;
};

/// Trapezoidal integral of a power trace, in joules.
inline double integrate(const PowerTrace& trace) {
    const auto& s = trace.samples;
    if (s.size() < 2) throw std::invalid_argument("integrate: need at least 2 power samples");
    double joules = 0.0;
    for (std::size_t i = 1; i < s.size(); ++i) {
        const double dt = s[i].first - s[i - 1].first;
        if (dt <= 0.0) throw std::invalid_argument("integrate: timestamps must be strictly increasing");
        joules += dt * (s[i].second + s[i - 1].second) * 0.5;
    }
    return joules;
}

}  // namespace pipetune
