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

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "pipetune/core.hpp"
#include "pipetune/energy.hpp"
#include "pipetune/rng.hpp"

namespace pipetune {

/// Deterministic, seedable stand-in for distributed DNN training. Cost comes
/// from a compute term that parallelizes across cores plus a synchronization
/// term that grows with cores and with the number of weight updates per
/// epoch; accuracy follows a saturating curve that depends only on the
/// workload and hyperparameters, never on the system configuration.

struct EpochOutcome {
    double duration_s = 0.0;
    double accuracy_after = 0.0;
    PowerTrace power;
    std::vector<EventRow> event_samples;
};

/// Seconds for one epoch:
///   t = (kappa*S)/c + sigma*c*(S/B), times spill_factor when memory is
/// below the workload's floor. S = samples per epoch, B = batch size,
/// c = cores.
inline double epoch_duration_s(const WorkloadSpec& w, const HyperParams& h, SystemConfig s) {
    const auto& cal = w.calibration;
    const double samples = static_cast<double>(w.samples_per_epoch);
    const double cores = static_cast<double>(s.cores);
    const double updates = samples / static_cast<double>(h.batch_size);
    double t = cal.kappa * samples / cores + cal.sigma * cores * updates;
    if (static_cast<double>(s.memory_gb) < cal.mem_floor_gb) t *= cal.spill_factor;
    return t;
}

/// Peak reachable accuracy for the given hyperparameters: the reference peak
/// minus additive penalties for large batches, off-optimum learning rate and
/// insufficient regularization, clamped to [0, 1].
inline double peak_accuracy(const WorkloadSpec& w, const HyperParams& h) {
    const auto& cal = w.calibration;
    const double batch_penalty =
        cal.beta_batch * std::log2(static_cast<double>(h.batch_size) / 32.0);
    const double lr_dev = std::log10(h.learning_rate) - std::log10(cal.lr_opt);
    const double lr_pen = cal.lr_penalty * lr_dev * lr_dev;
    const double dropout_pen = cal.dropout_penalty * std::max(0.0, 0.25 - h.dropout_rate);
    return std::clamp(cal.a_max0 - batch_penalty - lr_pen - dropout_pen, 0.0, 1.0);
}

/// Accuracy after `epoch` full passes (1-based): A_max * (1 - exp(-e/tau)).
inline double accuracy_after_epoch(const WorkloadSpec& w, const HyperParams& h, int epoch) {
    if (epoch < 1) throw std::invalid_argument("accuracy_after_epoch: epoch index must be >= 1");
    return peak_accuracy(w, h) * (1.0 - std::exp(-static_cast<double>(epoch) / w.calibration.tau));
}

namespace detail {

// Stream labels for counter-based noise; values are arbitrary but frozen.
inline constexpr std::uint64_t kPowerStream = 0x70;
inline constexpr std::uint64_t kEventStream = 0x45;
inline constexpr std::uint64_t kMuxStream = 0x4D;

// Weights of the linear event-signature model.
inline constexpr double kModelWeight = 0.5;
inline constexpr double kDatasetWeight = 0.5;

// Fraction of per-second event samples that the kernel multiplexes, and the
// range of time_running/time_enabled when it does.
inline constexpr double kMultiplexFraction = 0.3;
inline constexpr double kMultiplexRatioMin = 0.4;
inline constexpr double kMultiplexRatioMax = 1.0;

/// Reference magnitude of event i. Real counters span orders of magnitude,
/// so magnitudes are log-uniform in [1e1, 1e5].
inline double event_magnitude(std::size_t event) {
    Rng rng(hash_mix(fnv1a("event-magnitude"), event));
    return std::pow(10.0, 1.0 + 4.0 * rng.uniform01());
}

inline double signed_unit(std::uint64_t seed) {
    Rng rng(seed);
    return rng.uniform(-1.0, 1.0);
}

}  // namespace detail

/// Fixed 58-vector embedding of a system configuration: how each event's
/// rate shifts when cores or memory change. Independent of the workload.
inline std::array<double, kEventCount> system_embedding(SystemConfig s) {
    std::array<double, kEventCount> g{};
    const double core_term = std::log2(static_cast<double>(s.cores)) - 3.0;     // {-1, 0, 1}
    const double mem_term = std::log2(static_cast<double>(s.memory_gb)) - 4.0;  // {-2 .. 1}
    for (std::size_t e = 0; e < kEventCount; ++e) {
        const double m = detail::event_magnitude(e);
        const double uc = detail::signed_unit(hash_mix(fnv1a("embed-core"), e));
        const double um = detail::signed_unit(hash_mix(fnv1a("embed-mem"), e));
        g[e] = m * (0.15 * uc * core_term + 0.09 * um * mem_term);
    }
    return g;
}

/// Simulates one epoch of one trial under system config `s`.
/// `duration_scale` stretches the epoch (the orchestrator uses it for the
/// profiling overhead); samples are emitted for the stretched duration.
inline EpochOutcome simulate_epoch(const TrialSpec& trial, SystemConfig s, int epoch,
                                   double duration_scale = 1.0) {
    if (epoch < 1) throw std::invalid_argument("simulate_epoch: epoch index must be >= 1");
    const auto& cal = trial.workload.calibration;

    EpochOutcome out;
    out.duration_s = epoch_duration_s(trial.workload, trial.hyper, s) * duration_scale;
    out.accuracy_after = accuracy_after_epoch(trial.workload, trial.hyper, epoch);

    // Sample instants: integer seconds from 0, plus the epoch end when it
    // falls between ticks, so the trace spans exactly [0, duration].
    std::vector<double> ticks;
    const int whole = static_cast<int>(std::floor(out.duration_s));
    ticks.reserve(static_cast<std::size_t>(whole) + 2);
    for (int t = 0; t <= whole; ++t) ticks.push_back(static_cast<double>(t));
    if (out.duration_s - static_cast<double>(whole) > 1e-9) ticks.push_back(out.duration_s);

    const double nominal_w = cal.p_idle_w + cal.p_core_w * static_cast<double>(s.cores);
    const auto g = system_embedding(s);

    out.power.samples.reserve(ticks.size());
    out.event_samples.reserve(ticks.size());
    for (std::size_t i = 0; i < ticks.size(); ++i) {
        Rng power_rng(hash_mix(trial.seed, detail::kPowerStream, epoch, i));
        const double watts =
            std::max(0.0, nominal_w + cal.noise_scale * nominal_w * power_rng.gaussian());
        out.power.samples.emplace_back(ticks[i], watts);

        EventRow row;
        for (std::size_t e = 0; e < kEventCount; ++e) {
            Rng ev_rng(hash_mix(trial.seed, detail::kEventStream, epoch, i, e));
            const double m = detail::event_magnitude(e);
            double value = detail::kModelWeight * cal.event_signature_model[e] +
                           detail::kDatasetWeight * cal.event_signature_dataset[e] + g[e] +
                           cal.noise_scale * m * ev_rng.gaussian();
            value = std::max(0.0, value);

            Rng mux_rng(hash_mix(trial.seed, detail::kMuxStream, epoch, i, e));
            EventSample sample;
            sample.event_index = static_cast<int>(e);
            sample.time_enabled_s = 1.0;
            if (mux_rng.uniform01() < detail::kMultiplexFraction) {
                const double ratio =
                    mux_rng.uniform(detail::kMultiplexRatioMin, detail::kMultiplexRatioMax);
                sample.time_running_s = ratio;
                sample.raw_count = value * ratio;
            } else {
                sample.time_running_s = 1.0;
                sample.raw_count = value;
            }
            row[e] = sample;
        }
        out.event_samples.push_back(std::move(row));
    }
    return out;
}

/// Runs a whole trial under an explicit per-epoch system assignment; one
/// epoch is simulated per schedule entry, in order.
inline TrialResult run_trial(const TrialSpec& trial, std::span<const SystemConfig> schedule) {
    if (schedule.empty()) throw std::invalid_argument("run_trial: empty schedule");
    TrialResult result;
    result.epochs.reserve(schedule.size());
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const int epoch = static_cast<int>(i) + 1;
        EpochOutcome outcome = simulate_epoch(trial, schedule[i], epoch);
        EpochRecord rec;
        rec.index = epoch;
        rec.duration_s = outcome.duration_s;
        rec.accuracy_after = outcome.accuracy_after;
        rec.energy_j = integrate(outcome.power);
        rec.system = schedule[i];
        result.training_time_s += rec.duration_s;
        result.energy_j += rec.energy_j;
        result.final_accuracy = rec.accuracy_after;
        result.epochs.push_back(std::move(rec));
    }
    result.chosen_system = schedule.back();
    return result;
}

}  // namespace pipetune
