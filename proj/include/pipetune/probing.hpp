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

#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pipetune/core.hpp"
#include "pipetune/events.hpp"

namespace pipetune {

/// Assignment of candidate system configurations to training epochs, one
/// candidate per epoch. `remaining_config` is what runs after the probe
/// window until a measured best is selected; the plan is truncated when the
/// trial has fewer epochs left than there are candidates.
struct ProbePlan {
    std::vector<std::pair<int, SystemConfig>> assignments;  // (epoch index, config)
    SystemConfig remaining_config;
    bool truncated = false;

    const SystemConfig* config_for_epoch(int epoch) const {
        for (const auto& [e, cfg] : assignments)
            if (e == epoch) return &cfg;
        return nullptr;
    }
    int last_probe_epoch() const {
        return assignments.empty() ? 0 : assignments.back().first;
    }
};

/// Metrics collected while one candidate ran for one epoch.
struct ProbeMeasurement {
    SystemConfig config;
    double duration_s = 0.0;
    double energy_j = 0.0;
    EpochProfile profile;
    int epoch_index = 0;
};

/// Assigns candidates, in the given order, to consecutive epochs starting at
/// `start_epoch` within a trial of `total_epochs` epochs.
inline ProbePlan make_plan(std::span<const SystemConfig> candidates, int start_epoch,
                           int total_epochs, SystemConfig fallback) {
    if (candidates.empty()) throw std::invalid_argument("make_plan: no candidate configurations");
    if (start_epoch < 1) throw std::invalid_argument("make_plan: start epoch must be >= 1");
    ProbePlan plan;
    plan.remaining_config = fallback;
    int epoch = start_epoch;
    for (const SystemConfig& cfg : candidates) {
        if (epoch > total_epochs) {
            plan.truncated = true;
            break;
        }
        plan.assignments.emplace_back(epoch, cfg);
        ++epoch;
    }
    return plan;
}

enum class ProbeCriterion { MinDuration, MinEnergy };

/// Linear scan for the measurement minimizing the criterion; ties go to the
/// cheaper footprint (fewer cores, then less memory).
inline SystemConfig select_best(std::span<const ProbeMeasurement> measurements,
                                ProbeCriterion criterion) {
    if (measurements.empty()) throw std::invalid_argument("select_best: no measurements");
    auto value = [criterion](const ProbeMeasurement& m) {
        return criterion == ProbeCriterion::MinDuration ? m.duration_s : m.energy_j;
    };
    const ProbeMeasurement* best = &measurements[0];
    for (const ProbeMeasurement& m : measurements.subspan(1)) {
        const double v = value(m);
        const double b = value(*best);
        if (v < b || (v == b && (m.config.cores < best->config.cores ||
                                 (m.config.cores == best->config.cores &&
                                  m.config.memory_gb < best->config.memory_gb))))
            best = &m;
    }
    return best->config;
}

}  // namespace pipetune
