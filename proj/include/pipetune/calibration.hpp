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
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "pipetune/events.hpp"

namespace pipetune {

/// Per-workload constants of the training simulator. The values bundled with
/// the library are invented calibration data, not measurements; they are
/// chosen so the simulated workloads exhibit the documented cost/accuracy
/// trade-offs. All durations are seconds, power is watts.
struct SimCalibration {
    double kappa = 0.0016;        // per-sample compute seconds
    double sigma = 0.0048;        // per-update per-core synchronization seconds
    double a_max0 = 0.92;         // peak reachable accuracy at reference batch 32
    double beta_batch = 0.025;    // accuracy penalty per doubling of batch size
    double lr_opt = 0.01;         // learning rate with zero accuracy penalty
    double lr_penalty = 0.05;     // curvature of the (log10 lr) accuracy penalty
    double dropout_penalty = 0.08;// accuracy penalty slope below dropout 0.25
    double tau = 8.0;             // epochs to ~63% of peak accuracy
    double mem_floor_gb = 8.0;    // below this, epoch duration is multiplied
    double spill_factor = 1.5;    // duration multiplier when memory spills
    double p_idle_w = 50.0;       // idle node power
    double p_core_w = 10.0;       // additional power per active core
    double noise_scale = 0.02;    // relative sigma of per-second sample noise
    std::array<double, kEventCount> event_signature_model{};
    std::array<double, kEventCount> event_signature_dataset{};
};

namespace detail {
inline void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("calibration: " + what);
}
}  // namespace detail

inline void validate(const SimCalibration& c) {
    detail::require(c.kappa > 0, "kappa must be positive");
    detail::require(c.sigma > 0, "sigma must be positive");
    detail::require(c.a_max0 > 0 && c.a_max0 <= 1, "a_max0 must be in (0,1]");
    detail::require(c.beta_batch >= 0, "beta_batch must be nonnegative");
    detail::require(c.lr_opt > 0, "lr_opt must be positive");
    detail::require(c.lr_penalty >= 0, "lr_penalty must be nonnegative");
    detail::require(c.dropout_penalty >= 0, "dropout_penalty must be nonnegative");
    detail::require(c.tau > 0, "tau must be positive");
    detail::require(c.mem_floor_gb > 0, "mem_floor_gb must be positive");
    detail::require(c.spill_factor >= 1, "spill_factor must be >= 1");
    detail::require(c.p_idle_w > 0, "p_idle_w must be positive");
    detail::require(c.p_core_w > 0, "p_core_w must be positive");
    detail::require(c.noise_scale >= 0, "noise_scale must be nonnegative");
}

inline nlohmann::json to_json(const SimCalibration& c) {
    return nlohmann::json{
        {"kappa", c.kappa},
        {"sigma", c.sigma},
        {"a_max0", c.a_max0},
        {"beta_batch", c.beta_batch},
        {"lr_opt", c.lr_opt},
        {"lr_penalty", c.lr_penalty},
        {"dropout_penalty", c.dropout_penalty},
        {"tau", c.tau},
        {"mem_floor_gb", c.mem_floor_gb},
        {"spill_factor", c.spill_factor},
        {"p_idle_w", c.p_idle_w},
        {"p_core_w", c.p_core_w},
        {"noise_scale", c.noise_scale},
        {"event_signature_model", c.event_signature_model},
        {"event_signature_dataset", c.event_signature_dataset},
    };
}

inline SimCalibration calibration_from_json(const nlohmann::json& j) {
    SimCalibration c;
    c.kappa = j.at("kappa").get<double>();
    c.sigma = j.at("sigma").get<double>();
    c.a_max0 = j.at("a_max0").get<double>();
    c.beta_batch = j.at("beta_batch").get<double>();
    c.lr_opt = j.at("lr_opt").get<double>();
    c.lr_penalty = j.at("lr_penalty").get<double>();
    c.dropout_penalty = j.at("dropout_penalty").get<double>();
    c.tau = j.at("tau").get<double>();
    c.mem_floor_gb = j.at("mem_floor_gb").get<double>();
    c.spill_factor = j.at("spill_factor").get<double>();
    c.p_idle_w = j.at("p_idle_w").get<double>();
    c.p_core_w = j.at("p_core_w").get<double>();
    c.noise_scale = j.at("noise_scale").get<double>();
    const auto& sm = j.at("event_signature_model");
    const auto& sd = j.at("event_signature_dataset");
    if (sm.size() != kEventCount || sd.size() != kEventCount)
        throw std::invalid_argument("calibration: event signatures must have exactly 58 entries");
    for (std::size_t i = 0; i < kEventCount; ++i) {
        c.event_signature_model[i] = sm[i].get<double>();
        c.event_signature_dataset[i] = sd[i].get<double>();
    }
    validate(c);
    return c;
}

inline SimCalibration load_calibration(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open calibration file: " + path);
    nlohmann::json j;
    in >> j;
    return calibration_from_json(j);
}

inline void save_calibration(const SimCalibration& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write calibration file: " + path);
    out << to_json(c).dump(2) << '\n';
}

}  // namespace pipetune
