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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "pipetune/metric_store.hpp"
#include "pipetune/orchestrator.hpp"

namespace pipetune {

/// CSV emission. All files start with a "# pipetune-csv v1" marker followed
/// by a header row; schemas are stable within a version.

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline std::ofstream open_csv(const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "# pipetune-csv v1\n";
    return out;
}

}  // namespace detail

inline void write_summary_csv(const std::vector<JobOutcome>& outcomes,
                              const std::filesystem::path& path) {
    auto out = detail::open_csv(path);
    out << "job,mode,workload,family,accuracy,training_time_s,tuning_time_s,total_energy_j,"
           "response_time_s,best_batch_size,best_dropout_rate,best_embedding_dims,"
           "best_learning_rate,best_num_epochs,best_cores,best_memory_gb,trials\n";
    for (const JobOutcome& o : outcomes) {
        out << o.job_id << ',' << to_string(o.mode) << ',' << o.workload << ','
            << to_string(o.family) << ',' << detail::fmt(o.final_accuracy) << ','
            << detail::fmt(o.training_time_s) << ',' << detail::fmt(o.tuning_time_s) << ','
            << detail::fmt(o.total_energy_j) << ',' << detail::fmt(o.response_time_s) << ','
            << o.best_hyper.batch_size << ',' << detail::fmt(o.best_hyper.dropout_rate) << ','
            << o.best_hyper.embedding_dims << ',' << detail::fmt(o.best_hyper.learning_rate)
            << ',' << o.best_hyper.num_epochs << ',' << o.best_system.cores << ','
            << o.best_system.memory_gb << ',' << o.trials_run << '\n';
    }
}

/// Per-epoch rows of one job, joined from the epoch series in the store.
inline void write_epochs_csv(const MetricStore& store, const std::string& job_id,
                             const std::filesystem::path& path) {
    auto out = detail::open_csv(path);
    out << "t,job,mode,trial,epoch,duration_s,accuracy,energy_j\n";
    const std::map<std::string, std::string> filter{{"job", job_id}};
    const auto durations = store.query_range("trial.epoch.duration_s", filter, 0,
                                             std::numeric_limits<double>::max());
    for (const SeriesPoint& d : durations) {
        const auto acc = store.query_range("trial.epoch.accuracy", d.tags, d.t, d.t);
        const auto energy = store.query_range("trial.epoch.energy_j", d.tags, d.t, d.t);
        out << detail::fmt(d.t) << ',' << d.tags.at("job") << ',' << d.tags.at("mode") << ','
            << d.tags.at("trial") << ',' << d.tags.at("epoch") << ',' << detail::fmt(d.value)
            << ',' << detail::fmt(acc.empty() ? 0.0 : acc[0].value) << ','
            << detail::fmt(energy.empty() ? 0.0 : energy[0].value) << '\n';
    }
}

/// Best-so-far accuracy against elapsed tuning time, one series per
/// (job, mode).
inline void write_trajectory_csv(const MetricStore& store, const std::filesystem::path& path,
                                 const std::string& job_id = "") {
    auto out = detail::open_csv(path);
    out << "tuning_time_s,job,mode,best_accuracy\n";
    std::map<std::string, std::string> filter;
    if (!job_id.empty()) filter["job"] = job_id;
    for (const SeriesPoint& p : store.query_range("job.trajectory.best_accuracy", filter, 0,
                                                  std::numeric_limits<double>::max()))
        out << detail::fmt(p.t) << ',' << p.tags.at("job") << ',' << p.tags.at("mode") << ','
            << detail::fmt(p.value) << '\n';
}

/// One row per completed job with its outcome metrics (the per-mode bars).
inline void write_mode_summary_csv(const MetricStore& store, const std::filesystem::path& path) {
    auto out = detail::open_csv(path);
    out << "job,mode,workload,family,accuracy,training_time_s,tuning_time_s,total_energy_j,"
           "response_time_s\n";
    const auto acc = store.query_range("job.outcome.final_accuracy", {}, 0,
                                       std::numeric_limits<double>::max());
    for (const SeriesPoint& a : acc) {
        auto one = [&](const char* series) {
            const auto v = store.query_range(series, a.tags, a.t, a.t);
            return v.empty() ? 0.0 : v[0].value;
        };
        out << a.tags.at("job") << ',' << a.tags.at("mode") << ',' << a.tags.at("workload")
            << ',' << a.tags.at("family") << ',' << detail::fmt(a.value) << ','
            << detail::fmt(one("job.outcome.training_time_s")) << ','
            << detail::fmt(one("job.outcome.tuning_time_s")) << ','
            << detail::fmt(one("job.outcome.total_energy_j")) << ','
            << detail::fmt(one("job.outcome.response_time_s")) << '\n';
    }
}

/// Reassembles job outcomes (the fields the CSV writers need) from the
/// outcome series recorded in a store.
inline std::vector<JobOutcome> outcomes_from_store(const MetricStore& store) {
    std::vector<JobOutcome> out;
    const auto acc = store.query_range("job.outcome.final_accuracy", {}, 0,
                                       std::numeric_limits<double>::max());
    for (const SeriesPoint& a : acc) {
        auto one = [&](const char* series) {
            const auto v = store.query_range(series, a.tags, a.t, a.t);
            return v.empty() ? 0.0 : v[0].value;
        };
        JobOutcome o;
        o.job_id = a.tags.at("job");
        o.workload = a.tags.at("workload");
        o.mode = mode_from_string(a.tags.at("mode"));
        if (a.tags.at("family") == "type2") o.family = WorkloadFamily::TypeII;
        if (a.tags.at("family") == "type3") o.family = WorkloadFamily::TypeIII;
        o.final_accuracy = a.value;
        o.training_time_s = one("job.outcome.training_time_s");
        o.tuning_time_s = one("job.outcome.tuning_time_s");
        o.total_energy_j = one("job.outcome.total_energy_j");
        o.response_time_s = one("job.outcome.response_time_s");
        o.completion_time_s = a.t;
        o.arrival_time_s = a.t - o.response_time_s;
        o.start_time_s = a.t - o.tuning_time_s;
        out.push_back(std::move(o));
    }
    return out;
}

/// Per-job response times plus mean rows grouped by workload family and
/// overall, per mode.
inline void write_response_csv(const std::vector<JobOutcome>& outcomes,
                               const std::filesystem::path& path) {
    auto out = detail::open_csv(path);
    out << "row,job,mode,workload,family,arrival_time_s,start_time_s,completion_time_s,"
           "response_time_s\n";
    std::map<std::pair<std::string, std::string>, std::pair<double, int>> by_family;
    std::map<std::string, std::pair<double, int>> overall;
    for (const JobOutcome& o : outcomes) {
        out << "job," << o.job_id << ',' << to_string(o.mode) << ',' << o.workload << ','
            << to_string(o.family) << ',' << detail::fmt(o.arrival_time_s) << ','
            << detail::fmt(o.start_time_s) << ',' << detail::fmt(o.completion_time_s) << ','
            << detail::fmt(o.response_time_s) << '\n';
        auto& fam = by_family[{to_string(o.mode), to_string(o.family)}];
        fam.first += o.response_time_s;
        fam.second += 1;
        auto& all = overall[to_string(o.mode)];
        all.first += o.response_time_s;
        all.second += 1;
    }
    for (const auto& [key, sum] : by_family)
        out << "mean,," << key.first << ",," << key.second << ",,,,"
            << detail::fmt(sum.first / sum.second) << '\n';
    for (const auto& [mode, sum] : overall)
        out << "mean_overall,," << mode << ",,all,,,," << detail::fmt(sum.first / sum.second)
            << '\n';
}

}  // namespace pipetune
