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
#include <cstddef>
#include <string>

namespace pipetune {

/// Number of distinct hardware events sampled per second. The event list is
/// fixed; indices 0..57 identify events throughout the library.
inline constexpr std::size_t kEventCount = 58;

/// One per-second reading of one hardware event counter. When the kernel
/// multiplexes counters the event is only scheduled for part of the second
/// and time_running_s < time_enabled_s; a reading with time_running_s == 0
/// carries no measurement at all.
struct EventSample {
    int event_index = 0;
    double raw_count = 0.0;
    double time_enabled_s = 0.0;
    double time_running_s = 0.0;
};

/// All 58 event readings for one second of execution.
using EventRow = std::array<EventSample, kEventCount>;

/// Averaged, multiplex-corrected event counts for one epoch. This is the
/// feature vector consumed by the similarity store.
struct EpochProfile {
    std::array<double, kEventCount> values{};
    int epoch_index = 0;
    std::string workload_hint;  // evaluation-only label; may be empty
};

}  // namespace pipetune
