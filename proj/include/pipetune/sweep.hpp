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
#include <vector>

#include "pipetune/ground_truth.hpp"
#include "pipetune/profiler.hpp"
#include "pipetune/simulator.hpp"

namespace pipetune {

/// Offline profiling campaign that bootstraps the similarity store: every
/// workload is profiled for one epoch under each combination of memory
/// {4,8,16,32} GB, cores {4,8,16} and batch size {32,64,512,1024} — 48
/// configurations — and the whole sweep is repeated to absorb sampling
/// noise. Each record carries the probed system configuration scored by
/// negated epoch duration, so a cluster's best-known configuration is its
/// fastest probed one.
struct SweepOptions {
    std::vector<int> batch_sizes{32, 64, 512, 1024};
    int repetitions = 2;
    std::uint64_t seed = 0x5EEDULL;
};

inline std::vector<ProfileRecord> profile_sweep(std::span<const WorkloadSpec> workloads,
                                                const SweepOptions& opt = {}) {
    std::vector<ProfileRecord> records;
    const auto grid = enumerate_system_grid();
    for (const WorkloadSpec& w : workloads) {
        for (int rep = 0; rep < opt.repetitions; ++rep) {
            for (int batch : opt.batch_sizes) {
                for (const SystemConfig& sys : grid) {
                    TrialSpec spec;
                    spec.workload = w;
                    spec.hyper.batch_size = batch;
                    spec.hyper.learning_rate = w.calibration.lr_opt;
                    spec.hyper.num_epochs = 10;
                    spec.trial_id = "sweep";
                    spec.seed = hash_mix(opt.seed, fnv1a(w.name()), rep, batch, sys.cores,
                                         sys.memory_gb);
                    const EpochOutcome outcome = simulate_epoch(spec, sys, 1);
                    ProfileRecord rec;
                    rec.profile = build_epoch_profile(outcome.event_samples, 1);
                    rec.profile.workload_hint = w.name();
                    rec.config = sys;
                    rec.config_score = -outcome.duration_s;
                    rec.family_hint = to_string(w.family);
                    records.push_back(std::move(rec));
                }
            }
        }
    }
    return records;
}

/// Fits a warm-start store from the sweep over the given workloads.
inline GroundTruthStore warm_start_store(std::span<const WorkloadSpec> workloads, int k = 2,
                                         std::uint64_t seed = 42, double theta = 2.0,
                                         const SweepOptions& opt = {}) {
    GroundTruthStore store(k, seed, theta);
    store.replace_history(profile_sweep(workloads, opt));
    return store;
}

}  // namespace pipetune
