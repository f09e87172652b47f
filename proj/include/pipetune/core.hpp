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

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pipetune/calibration.hpp"
#include "pipetune/events.hpp"

namespace pipetune {

/// Training-algorithm settings fixed before a trial starts.
struct HyperParams {
    int batch_size = 32;        // [32, 1024] samples
    double dropout_rate = 0.25; // [0.0, 0.5]
    int embedding_dims = 100;   // [50, 300]
    double learning_rate = 0.01;// [0.001, 0.1]
    int num_epochs = 10;        // [10, 100]

    bool operator==(const HyperParams&) const = default;
};

/// Resource allocation of the execution platform for one trial epoch.
struct SystemConfig {
    int cores = 4;
    int memory_gb = 4;

    bool operator==(const SystemConfig&) const = default;
    auto operator<=>(const SystemConfig&) const = default;
};

inline constexpr int kCoreChoices[] = {4, 8, 16};
inline constexpr int kMemoryChoices[] = {4, 8, 16, 32};

enum class WorkloadFamily { TypeI, TypeII, TypeIII };

inline const char* to_string(WorkloadFamily f) {
    switch (f) {
        case WorkloadFamily::TypeI: return "type1";
        case WorkloadFamily::TypeII: return "type2";
        case WorkloadFamily::TypeIII: return "type3";
    }
    return "?";
}

/// A (model, dataset) pair plus the simulator constants describing it.
struct WorkloadSpec {
    std::string model_id;
    std::string dataset_id;
    long samples_per_epoch = 0;
    WorkloadFamily family = WorkloadFamily::TypeI;
    SimCalibration calibration;

    std::string name() const { return model_id + "/" + dataset_id; }
};

enum class ObjectiveKind { MaxAccuracy, MaxAccuracyPerSecond };

struct Objective {
    ObjectiveKind kind = ObjectiveKind::MaxAccuracy;
};

/// One training run with fixed hyperparameters.
struct TrialSpec {
    WorkloadSpec workload;
    HyperParams hyper;
    SystemConfig initial_system;
    std::string trial_id;
    std::uint64_t seed = 0;
};

struct EpochRecord {
    int index = 0;              // 1-based
    double duration_s = 0.0;
    double accuracy_after = 0.0;
    double energy_j = 0.0;
    SystemConfig system;
    std::optional<EpochProfile> profile;
};

struct TrialResult {
    double final_accuracy = 0.0;
    double training_time_s = 0.0;
    double energy_j = 0.0;
    std::vector<EpochRecord> epochs;
    SystemConfig chosen_system;
};

/// Full cross product of allowed cores x memory, lexicographic in
/// (cores, memory_gb). 12 entries.
inline std::vector<SystemConfig> enumerate_system_grid() {
    std::vector<SystemConfig> grid;
    grid.reserve(12);
    for (int c : kCoreChoices)
        for (int m : kMemoryChoices) grid.push_back({c, m});
    return grid;
}

/// Applies the objective function to a finished trial.
inline double score(const TrialResult& result, Objective objective) {
    switch (objective.kind) {
        case ObjectiveKind::MaxAccuracy:
            return result.final_accuracy;
        case ObjectiveKind::MaxAccuracyPerSecond:
            if (result.training_time_s <= 0.0)
                throw std::domain_error("score: accuracy/duration objective needs positive training time");
            return result.final_accuracy / result.training_time_s;
    }
    throw std::logic_error("score: unknown objective kind");
}

struct FieldViolation {
    std::string field;
    std::string message;
};

/// Range check for every hyperparameter; violations are the return value,
/// an empty list means the configuration is valid.
inline std::vector<FieldViolation> validate(const HyperParams& h) {
    std::vector<FieldViolation> v;
    auto bad = [&](const std::string& field, const std::string& msg) { v.push_back({field, msg}); };
    if (h.batch_size < 32 || h.batch_size > 1024) bad("batch_size", "must be in [32, 1024]");
    if (h.dropout_rate < 0.0 || h.dropout_rate > 0.5) bad("dropout_rate", "must be in [0.0, 0.5]");
    if (h.embedding_dims < 50 || h.embedding_dims > 300) bad("embedding_dims", "must be in [50, 300]");
    if (h.learning_rate < 0.001 || h.learning_rate > 0.1) bad("learning_rate", "must be in [0.001, 0.1]");
    if (h.num_epochs < 10 || h.num_epochs > 100) bad("num_epochs", "must be in [10, 100]");
    return v;
}

}  // namespace pipetune
