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

#include <array>
#include <optional>
#include <span>
#include <stdexcept>

#include "pipetune/events.hpp"

namespace pipetune {

/// Multiplex correction: estimates what the count would have been had the
/// event been scheduled for the whole second,
///   final_count = raw_count * time_enabled / time_running.
/// A sample with time_running == 0 carries no measurement; the caller drops
/// it and records a gap.
inline std::optional<double> scaled_count(const EventSample& s) {
    if (s.time_running_s <= 0.0) return std::nullopt;
    return s.raw_count * s.time_enabled_s / s.time_running_s;
}

/// Per-event counts of dropped (unmeasured) sample rows.
struct ProfileGaps {
    std::array<int, kEventCount> per_event{};
    int total() const {
        int n = 0;
        for (int g : per_event) n += g;
        return n;
    }
};

/// Averages multiplex-corrected per-second samples into one epoch profile.
/// Events whose every row was a gap get value 0.
inline EpochProfile build_epoch_profile(std::span<const EventRow> rows, int epoch_index,
                                        ProfileGaps* gaps = nullptr) {
    if (rows.empty()) throw std::invalid_argument("build_epoch_profile: no sample rows");
    EpochProfile profile;
    profile.epoch_index = epoch_index;
    for (std::size_t e = 0; e < kEventCount; ++e) {
        double sum = 0.0;
        int valid = 0;
        int dropped = 0;
        for (const EventRow& row : rows) {
            if (auto v = scaled_count(row[e])) {
                sum += *v;
                ++valid;
            } else {
                ++dropped;
            }
        }
        profile.values[e] = valid > 0 ? sum / valid : 0.0;
        if (gaps) gaps->per_event[e] = dropped;
    }
    return profile;
}

/// Mean of several epoch profiles (the configurable first-k-epochs window).
inline EpochProfile average_profiles(std::span<const EpochProfile> profiles) {
    if (profiles.empty()) throw std::invalid_argument("average_profiles: no profiles");
    EpochProfile out;
    out.epoch_index = profiles.back().epoch_index;
    out.workload_hint = profiles.front().workload_hint;
    for (const EpochProfile& p : profiles)
        for (std::size_t e = 0; e < kEventCount; ++e) out.values[e] += p.values[e];
    for (std::size_t e = 0; e < kEventCount; ++e) out.values[e] /= static_cast<double>(profiles.size());
    return out;
}

}  // namespace pipetune
