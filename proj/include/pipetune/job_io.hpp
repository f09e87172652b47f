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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pipetune/orchestrator.hpp"
#include "pipetune/workloads.hpp"

namespace pipetune {

/// Job files and arrival traces. A job file is JSON with fields mirroring
/// HptJob; the workload is either the name of a bundled workload or an
/// object carrying identity fields plus a calibration (inline or by path).

inline WorkloadFamily family_from_string(const std::string& s) {
    if (s == "type1") return WorkloadFamily::TypeI;
    if (s == "type2") return WorkloadFamily::TypeII;
    if (s == "type3") return WorkloadFamily::TypeIII;
    throw std::invalid_argument("unknown workload family: " + s);
}

inline WorkloadSpec workload_from_json(const nlohmann::json& j,
                                       const std::filesystem::path& base_dir = {}) {
    if (j.is_string()) return find_workload(j.get<std::string>());
    WorkloadSpec w;
    w.model_id = j.at("model_id").get<std::string>();
    w.dataset_id = j.at("dataset_id").get<std::string>();
    w.samples_per_epoch = j.at("samples_per_epoch").get<long>();
    w.family = family_from_string(j.at("family").get<std::string>());
    const auto& cal = j.at("calibration");
    if (cal.is_string()) {
        std::filesystem::path p = cal.get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        w.calibration = load_calibration(p.string());
    } else {
        w.calibration = calibration_from_json(cal);
    }
    return w;
}

inline SearchConfig search_from_json(const nlohmann::json& j) {
    SearchConfig sc;
    const std::string algo = j.value("algorithm", "hyperband");
    if (algo == "hyperband") sc.algorithm = SearchConfig::Algorithm::HyperBand;
    else if (algo == "grid") sc.algorithm = SearchConfig::Algorithm::Grid;
    else if (algo == "random") sc.algorithm = SearchConfig::Algorithm::Random;
    else throw std::invalid_argument("unknown search algorithm: " + algo);
    sc.max_epochs_per_trial = j.value("max_epochs_per_trial", 81);
    sc.halving = j.value("halving", 3);
    sc.samples = j.value("samples", 32);
    if (j.contains("space")) {
        const auto& s = j["space"];
        auto get = [&s](const char* key, auto& out) {
            if (s.contains(key)) out = s[key].get<std::decay_t<decltype(out)>>();
        };
        get("batch_size", sc.space.batch_sizes);
        get("dropout_rate", sc.space.dropout_rates);
        get("embedding_dims", sc.space.embedding_dims);
        get("learning_rate", sc.space.learning_rates);
        get("num_epochs", sc.space.num_epochs);
        get("cores", sc.space.cores);
        get("memory_gb", sc.space.memory_gb);
    }
    return sc;
}

inline HptJob job_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    HptJob job;
    job.job_id = j.at("job_id").get<std::string>();
    job.workload = workload_from_json(j.at("workload"), base_dir);
    if (j.contains("search")) job.search = search_from_json(j["search"]);
    if (j.contains("objective")) {
        const std::string o = j["objective"].get<std::string>();
        if (o == "max_accuracy") job.objective.kind = ObjectiveKind::MaxAccuracy;
        else if (o == "max_accuracy_per_second")
            job.objective.kind = ObjectiveKind::MaxAccuracyPerSecond;
        else throw std::invalid_argument("unknown objective: " + o);
    }
    if (j.contains("mode")) job.mode = mode_from_string(j["mode"].get<std::string>());
    job.arrival_time_s = j.value("arrival_time_s", 0.0);
    job.max_parallel_trials = j.value("max_parallel_trials", 4);
    if (j.contains("initial_system")) {
        job.initial_system.cores = j["initial_system"].at("cores").get<int>();
        job.initial_system.memory_gb = j["initial_system"].at("memory_gb").get<int>();
    }
    if (job.max_parallel_trials < 1)
        throw std::invalid_argument("max_parallel_trials must be >= 1");
    return job;
}

inline HptJob load_job(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open job file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed job file " + path + ": " + e.what());
    }
    return job_from_json(j, std::filesystem::path(path).parent_path());
}

/// Default search space and sizing for multi-tenant benchmark jobs: a small
/// HyperBand budget keeps per-job work representative but bounded.
inline SearchConfig bench_search_config() {
    SearchConfig sc;
    sc.algorithm = SearchConfig::Algorithm::HyperBand;
    sc.max_epochs_per_trial = 9;
    sc.halving = 3;
    return sc;
}

struct TraceParams {
    double rate_per_s = 1.0 / 1500.0;  // exponential interarrival rate
    int jobs = 20;
    double unseen_fraction = 0.2;
    TuningMode mode = TuningMode::PipeTune;
    SearchConfig search = bench_search_config();
    int max_parallel_trials = 4;
    SystemConfig initial_system{16, 4};
};

/// Exponential arrivals, alternating family-1/family-2 jobs (50/50),
/// round-robin workloads within each family, and an exact unseen-job
/// fraction realized by held-out workload variants that recur round-robin.
inline std::vector<HptJob> generate_trace(const TraceParams& p, std::uint64_t seed) {
    if (p.jobs < 1) throw std::invalid_argument("generate_trace: need >= 1 job");
    if (p.rate_per_s <= 0) throw std::invalid_argument("generate_trace: rate must be positive");
    std::vector<const WorkloadSpec*> type1, type2;
    for (const WorkloadSpec& w : default_workloads()) {
        if (w.family == WorkloadFamily::TypeI) type1.push_back(&w);
        if (w.family == WorkloadFamily::TypeII) type2.push_back(&w);
    }
    Rng rng(hash_mix(seed, fnv1a("arrival-trace")));
    std::vector<HptJob> jobs;
    jobs.reserve(static_cast<std::size_t>(p.jobs));
    double t = 0.0;
    int seen_rr[2] = {0, 0};
    int unseen_so_far = 0;
    for (int i = 0; i < p.jobs; ++i) {
        t += -std::log(1.0 - rng.uniform01()) / p.rate_per_s;
        const int type = i % 2;  // 0 -> family 1, 1 -> family 2
        const WorkloadFamily family = type == 0 ? WorkloadFamily::TypeI : WorkloadFamily::TypeII;
        const bool unseen =
            static_cast<int>(std::floor((i + 1) * p.unseen_fraction + 1e-9)) > unseen_so_far;
        HptJob job;
        if (unseen) {
            ++unseen_so_far;
            // One recurring held-out workload per family, so later unseen
            // jobs can profit from the ground truth built by earlier ones.
            job.workload = unseen_variant(family, 1);
        } else {
            const auto& pool = type == 0 ? type1 : type2;
            job.workload = *pool[seen_rr[type]++ % pool.size()];
        }
        std::ostringstream id;
        id << "job-" << (i < 10 ? "0" : "") << i << "-" << job.workload.model_id << "-"
           << job.workload.dataset_id;
        job.job_id = id.str();
        job.search = p.search;
        job.mode = p.mode;
        job.arrival_time_s = t;
        job.max_parallel_trials = p.max_parallel_trials;
        job.initial_system = p.initial_system;
        jobs.push_back(std::move(job));
    }
    return jobs;
}

struct TraceRow {
    double arrival_time_s = 0.0;
    std::string job_ref;  // path to a job file, or "builtin:<job_id>"
};

inline void save_trace(const std::vector<HptJob>& jobs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace file: " + path);
    out << "# pipetune-trace v1: arrival_time_s,job_ref\n";
    for (const HptJob& j : jobs) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6f", j.arrival_time_s);
        out << buf << ",builtin:" << j.job_id << '\n';
    }
}

/// Reads (arrival_time_s, job_ref) rows; refs are job file paths resolved
/// relative to the trace file. "builtin:" refs cannot be resolved here and
/// are rejected (they exist for provenance of generated traces).
inline std::vector<HptJob> load_trace(const std::string& path, TuningMode mode) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace file: " + path);
    std::vector<HptJob> jobs;
    std::string line;
    double last_arrival = 0.0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("malformed trace row: " + line);
        const double arrival = std::stod(line.substr(0, comma));
        const std::string ref = line.substr(comma + 1);
        if (arrival < last_arrival)
            throw std::runtime_error("trace arrivals must be nondecreasing");
        last_arrival = arrival;
        if (ref.rfind("builtin:", 0) == 0)
            throw std::runtime_error(
                "trace row references a generated job; re-run with --rate/--jobs: " + ref);
        std::filesystem::path job_path = ref;
        if (job_path.is_relative())
            job_path = std::filesystem::path(path).parent_path() / job_path;
        HptJob job = load_job(job_path.string());
        job.arrival_time_s = arrival;
        job.mode = mode;
        jobs.push_back(std::move(job));
    }
    if (jobs.empty()) throw std::runtime_error("trace file has no jobs: " + path);
    return jobs;
}

}  // namespace pipetune
