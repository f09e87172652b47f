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

#include <catch2/catch_amalgamated.hpp>

#include "pipetune/job_io.hpp"
#include "pipetune/orchestrator.hpp"
#include "pipetune/sweep.hpp"
#include "pipetune/workloads.hpp"

using namespace pipetune;
using Catch::Matchers::WithinRel;

namespace {

SearchSpace one_point_space(int batch = 32, int epochs = 20) {
    SearchSpace s;
    s.batch_sizes = {batch};
    s.dropout_rates = {0.25};
    s.embedding_dims = {100};
    s.learning_rates = {0.01};
    s.num_epochs = {epochs};
    return s;
}

HptJob grid_job(const std::string& id, SearchSpace space, TuningMode mode) {
    HptJob job;
    job.job_id = id;
    job.workload = find_workload("lenet5/mnist");
    job.search.algorithm = SearchConfig::Algorithm::Grid;
    job.search.space = std::move(space);
    job.mode = mode;
    job.initial_system = {16, 4};
    return job;
}

}  // namespace

TEST_CASE("V1 runs every epoch at the job's default configuration") {
    MetricStore store;
    Orchestrator orch{RunConfig{}, &store};
    HptJob job = grid_job("v1-const", one_point_space(), TuningMode::V1);
    const JobOutcome out = orch.run_job(job, 3);
    CHECK(out.best_system == SystemConfig{16, 4});
    // Every epoch record carries the default config: constant duration.
    const auto durations = store.query_range("trial.epoch.duration_s", {{"job", "v1-const"}}, 0,
                                             std::numeric_limits<double>::max());
    REQUIRE(durations.size() == 20);
    const double expected = epoch_duration_s(job.workload, HyperParams{32, 0.25, 100, 0.01, 20},
                                             {16, 4});
    for (const auto& p : durations) CHECK_THAT(p.value, WithinRel(expected, 1e-12));
}

TEST_CASE("single-point search space: outcome equals that trial's result") {
    Orchestrator orch{RunConfig{}};
    HptJob job = grid_job("single", one_point_space(64, 10), TuningMode::V1);
    const JobOutcome out = orch.run_job(job, 9);
    CHECK(out.trials_run == 1);

    TrialSpec t;
    t.workload = job.workload;
    t.hyper = HyperParams{64, 0.25, 100, 0.01, 10};
    const std::vector<SystemConfig> schedule(10, job.initial_system);
    const TrialResult oracle = run_trial(t, schedule);
    CHECK_THAT(out.training_time_s, WithinRel(oracle.training_time_s, 1e-12));
    CHECK(out.final_accuracy == oracle.final_accuracy);
    CHECK(out.response_time_s == out.tuning_time_s);  // single job, no queueing
}

TEST_CASE("pipetune reuse path: known config from epoch 2 onward, no probing") {
    MetricStore store;
    GroundTruthStore gt = warm_start_store(default_workloads());
    Orchestrator orch{RunConfig{}, &store, &gt};
    HptJob job = grid_job("reuse", one_point_space(32, 12), TuningMode::PipeTune);
    const JobOutcome out = orch.run_job(job, 5);

    const auto durations = store.query_range("trial.epoch.duration_s", {{"job", "reuse"}}, 0,
                                             std::numeric_limits<double>::max());
    REQUIRE(durations.size() == 12);
    const HyperParams h{32, 0.25, 100, 0.01, 12};
    std::map<int, double> by_epoch;
    for (const auto& p : durations) by_epoch[std::stoi(p.tags.at("epoch"))] = p.value;
    // Epoch 1: initial config with profiling overhead.
    CHECK_THAT(by_epoch.at(1),
               WithinRel(1.02 * epoch_duration_s(job.workload, h, {16, 4}), 1e-12));
    // Epochs 2..12: the cluster's best config (16, 8), clean.
    for (int e = 2; e <= 12; ++e)
        CHECK_THAT(by_epoch.at(e), WithinRel(epoch_duration_s(job.workload, h, {16, 8}), 1e-12));
    CHECK(out.best_system == SystemConfig{16, 8});
}

TEST_CASE("pipetune probe path: grid on epochs 2..13, argmin afterwards") {
    MetricStore store;
    GroundTruthStore gt;  // cold store: similarity cannot hit
    Orchestrator orch{RunConfig{}, &store, &gt};
    HptJob job = grid_job("probe", one_point_space(32, 20), TuningMode::PipeTune);
    orch.run_job(job, 5);

    const auto durations = store.query_range("trial.epoch.duration_s", {{"job", "probe"}}, 0,
                                             std::numeric_limits<double>::max());
    REQUIRE(durations.size() == 20);
    const HyperParams h{32, 0.25, 100, 0.01, 20};
    const auto grid = enumerate_system_grid();
    std::map<int, double> by_epoch;
    for (const auto& p : durations) by_epoch[std::stoi(p.tags.at("epoch"))] = p.value;

    // Probe epochs 2..13 run the grid in order, profiled.
    for (int e = 2; e <= 13; ++e)
        CHECK_THAT(by_epoch.at(e),
                   WithinRel(1.02 * epoch_duration_s(job.workload, h, grid[e - 2]), 1e-12));
    // Remaining epochs run the measured argmin; for batch 32 that is (4, 8).
    for (int e = 14; e <= 20; ++e)
        CHECK_THAT(by_epoch.at(e), WithinRel(epoch_duration_s(job.workload, h, {4, 8}), 1e-12));

    // The probe outcome seeds the store: one observation with config (4, 8).
    REQUIRE(gt.history_size() == 1);
    CHECK(*gt.history()[0].config == SystemConfig{4, 8});
}

TEST_CASE("pipelined runner reproduces run_trial on the recorded schedule") {
    MetricStore store;
    GroundTruthStore gt = warm_start_store(default_workloads());
    Orchestrator orch{RunConfig{}, &store, &gt};
    HptJob job = grid_job("replay", one_point_space(256, 10), TuningMode::PipeTune);
    const JobOutcome out = orch.run_job(job, 11);

    const auto durations = store.query_range("trial.epoch.duration_s", {{"job", "replay"}}, 0,
                                             std::numeric_limits<double>::max());
    REQUIRE(durations.size() == 10);
    std::map<int, double> by_epoch;
    for (const auto& p : durations) by_epoch[std::stoi(p.tags.at("epoch"))] = p.value;

    TrialSpec t;
    t.workload = job.workload;
    t.hyper = HyperParams{256, 0.25, 100, 0.01, 10};
    std::vector<SystemConfig> schedule{job.initial_system};
    for (int e = 2; e <= 10; ++e) schedule.push_back(out.best_system);
    const TrialResult oracle = run_trial(t, schedule);
    for (int e = 1; e <= 10; ++e) {
        const double penalty = e == 1 ? 1.02 : 1.0;
        CHECK_THAT(by_epoch.at(e),
                   WithinRel(penalty * oracle.epochs[static_cast<std::size_t>(e - 1)].duration_s,
                             1e-12));
    }
    CHECK(out.final_accuracy == oracle.final_accuracy);
}

TEST_CASE("serial trials: tuning time is the sum of trial durations") {
    SearchSpace space = one_point_space();
    space.batch_sizes = {64, 256};
    space.num_epochs = {10};
    HptJob job = grid_job("serial", space, TuningMode::V1);
    job.max_parallel_trials = 1;
    Orchestrator orch{RunConfig{}};
    const JobOutcome out = orch.run_job(job, 2);
    double sum = 0.0;
    for (int batch : {64, 256})
        sum += 10.0 * epoch_duration_s(job.workload, HyperParams{batch, 0.25, 100, 0.01, 10},
                                       {16, 4});
    CHECK_THAT(out.tuning_time_s, WithinRel(sum, 1e-12));
}

TEST_CASE("two slots, four equal trials: makespan is twice one trial") {
    SearchSpace space = one_point_space(64, 10);
    space.dropout_rates = {0.25, 0.3, 0.35, 0.4};  // four identical-cost trials
    HptJob job = grid_job("slots", space, TuningMode::V1);
    job.max_parallel_trials = 2;
    Orchestrator orch{RunConfig{}};
    const JobOutcome out = orch.run_job(job, 2);
    const double one = 10.0 * epoch_duration_s(job.workload,
                                               HyperParams{64, 0.25, 100, 0.01, 10}, {16, 4});
    CHECK_THAT(out.tuning_time_s, WithinRel(2.0 * one, 1e-9));
}

TEST_CASE("makespan equals a list-schedule oracle on a mixed bracket") {
    // Trials with budgets {1, 3, 9} over 2 slots: durations d, 3d, 9d.
    // List scheduling in issue order: slot A takes d then 9d, slot B takes 3d
    // -> makespan 10d.
    SearchSpace space = one_point_space(64, 10);
    HptJob job = grid_job("bracket", space, TuningMode::V1);
    job.max_parallel_trials = 2;
    job.search.algorithm = SearchConfig::Algorithm::Grid;
    Orchestrator orch{RunConfig{}};
    // Emulate the budgets with three num_epochs values; grid order issues
    // them smallest-first.
    SearchSpace mixed = space;
    mixed.num_epochs = {10, 30, 90};
    job.search.space = mixed;
    const JobOutcome out = orch.run_job(job, 2);
    const double d =
        epoch_duration_s(job.workload, HyperParams{64, 0.25, 100, 0.01, 10}, {16, 4});
    CHECK_THAT(out.tuning_time_s, WithinRel(100.0 * d, 1e-9));
}

TEST_CASE("pipetune matches V1 proposals and accuracy, with lower tuning time") {
    HptJob job;
    job.job_id = "parity";
    job.workload = find_workload("cnn/news20");
    job.search.max_epochs_per_trial = 9;
    job.search.halving = 3;
    job.initial_system = {16, 4};

    job.mode = TuningMode::V1;
    Orchestrator v1{RunConfig{}};
    const QueueResult r1 = v1.run_queue({job}, 77);

    job.mode = TuningMode::PipeTune;
    GroundTruthStore gt = warm_start_store(default_workloads());
    Orchestrator pt{RunConfig{}, nullptr, &gt};
    const QueueResult r2 = pt.run_queue({job}, 77);

    const auto& p1 = r1.proposals.at("parity");
    const auto& p2 = r2.proposals.at("parity");
    REQUIRE(p1.size() == p2.size());
    for (std::size_t i = 0; i < p1.size(); ++i) {
        CHECK(p1[i].hyper == p2[i].hyper);
        CHECK(p1[i].epoch_budget == p2[i].epoch_budget);
    }
    CHECK(r1.outcomes[0].best_hyper == r2.outcomes[0].best_hyper);
    CHECK(r1.outcomes[0].final_accuracy == r2.outcomes[0].final_accuracy);
    CHECK(r2.outcomes[0].tuning_time_s < r1.outcomes[0].tuning_time_s);
}

TEST_CASE("tuning-time dominance holds on every bundled workload") {
    for (const WorkloadSpec& w : default_workloads()) {
        HptJob job;
        job.job_id = "dom";
        job.workload = w;
        job.search.max_epochs_per_trial = 9;
        job.search.halving = 3;
        job.initial_system = {16, 4};

        job.mode = TuningMode::V1;
        Orchestrator v1{RunConfig{}};
        const JobOutcome r1 = v1.run_job(job, 31);

        job.mode = TuningMode::PipeTune;
        GroundTruthStore gt = warm_start_store(default_workloads());
        Orchestrator pt{RunConfig{}, nullptr, &gt};
        const JobOutcome r2 = pt.run_job(job, 31);
        INFO(w.name());
        CHECK(r2.tuning_time_s <= r1.tuning_time_s);
        CHECK(r2.final_accuracy == r1.final_accuracy);
    }
}

TEST_CASE("resource safety: allocations never exceed node capacity") {
    // A small cluster forces queueing; ClusterState throws on any violation,
    // so completing the run is the assertion.
    RunConfig cfg;
    cfg.cluster = {1, 16, 32};
    SearchSpace space = one_point_space(64, 10);
    space.dropout_rates = {0.0, 0.1, 0.2, 0.3};
    HptJob job = grid_job("tight", space, TuningMode::V1);
    job.max_parallel_trials = 4;
    Orchestrator orch{cfg};
    const JobOutcome out = orch.run_job(job, 13);
    // One (16, 4) trial fits at a time: serial execution.
    const double one =
        10.0 * epoch_duration_s(job.workload, HyperParams{64, 0.25, 100, 0.01, 10}, {16, 4});
    CHECK_THAT(out.tuning_time_s, WithinRel(4.0 * one, 1e-9));
}

TEST_CASE("FIFO queue: non-overlapping jobs see no queueing delay") {
    HptJob first = grid_job("q1", one_point_space(64, 10), TuningMode::V1);
    HptJob second = grid_job("q2", one_point_space(64, 10), TuningMode::V1);
    first.arrival_time_s = 0.0;
    Orchestrator probe{RunConfig{}};
    const JobOutcome alone = probe.run_job(first, 1);
    second.arrival_time_s = alone.completion_time_s + 100.0;

    Orchestrator orch{RunConfig{}};
    const QueueResult r = orch.run_queue({first, second}, 1);
    CHECK(r.outcomes[1].start_time_s == r.outcomes[1].arrival_time_s);
    CHECK_THAT(r.outcomes[1].response_time_s, WithinRel(r.outcomes[1].tuning_time_s, 1e-12));
}

TEST_CASE("FIFO queue: saturated cluster delays the second job") {
    RunConfig cfg;
    cfg.cluster = {1, 16, 32};  // one trial at a time
    HptJob first = grid_job("busy", one_point_space(64, 20), TuningMode::V1);
    HptJob second = grid_job("waits", one_point_space(64, 10), TuningMode::V1);
    second.arrival_time_s = 1.0;
    Orchestrator orch{cfg};
    const QueueResult r = orch.run_queue({first, second}, 1);
    CHECK(r.outcomes[1].start_time_s >= r.outcomes[0].completion_time_s);
    CHECK(r.outcomes[1].response_time_s > r.outcomes[1].tuning_time_s);
}

TEST_CASE("queue rejects decreasing arrival times and empty input") {
    Orchestrator orch{RunConfig{}};
    HptJob a = grid_job("a", one_point_space(), TuningMode::V1);
    HptJob b = grid_job("b", one_point_space(), TuningMode::V1);
    a.arrival_time_s = 10.0;
    b.arrival_time_s = 5.0;
    CHECK_THROWS_AS(orch.run_queue({a, b}, 1), std::invalid_argument);
    CHECK_THROWS_AS(orch.run_queue({}, 1), std::invalid_argument);
}

TEST_CASE("generated traces: arrivals, mix, and unseen fraction") {
    TraceParams p;
    p.jobs = 20;
    p.unseen_fraction = 0.2;
    const auto jobs = generate_trace(p, 44);
    REQUIRE(jobs.size() == 20);
    int unseen = 0, type1 = 0, type2 = 0;
    double last = 0.0;
    for (const auto& j : jobs) {
        CHECK(j.arrival_time_s >= last);
        last = j.arrival_time_s;
        if (j.workload.family == WorkloadFamily::TypeI) ++type1;
        if (j.workload.family == WorkloadFamily::TypeII) ++type2;
        if (j.workload.model_id.find("-x") != std::string::npos ||
            j.workload.dataset_id.find("-x") != std::string::npos)
            ++unseen;
    }
    CHECK(type1 == 10);
    CHECK(type2 == 10);
    CHECK(unseen == 4);  // exactly 20%

    // Determinism.
    const auto again = generate_trace(p, 44);
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        CHECK(jobs[i].arrival_time_s == again[i].arrival_time_s);
        CHECK(jobs[i].workload.name() == again[i].workload.name());
    }
}

TEST_CASE("V2 trials run at their sampled system configuration") {
    SearchSpace space = one_point_space(64, 10);
    space.cores = {4};
    space.memory_gb = {32};
    HptJob job = grid_job("v2", space, TuningMode::V2);
    job.mode = TuningMode::V2;
    MetricStore store;
    Orchestrator orch{RunConfig{}, &store};
    const JobOutcome out = orch.run_job(job, 6);
    CHECK(out.best_system == SystemConfig{4, 32});
    const auto durations = store.query_range("trial.epoch.duration_s", {{"job", "v2"}}, 0,
                                             std::numeric_limits<double>::max());
    const double expected =
        epoch_duration_s(job.workload, HyperParams{64, 0.25, 100, 0.01, 10}, {4, 32});
    for (const auto& p : durations) CHECK_THAT(p.value, WithinRel(expected, 1e-12));
}

TEST_CASE("job and trace files load") {
    const std::string dir = PIPETUNE_JOBS_DIR;
    const HptJob job = load_job(dir + "/lenet5_mnist.json");
    CHECK(job.workload.name() == "lenet5/mnist");
    CHECK(job.search.algorithm == SearchConfig::Algorithm::HyperBand);
    CHECK(job.initial_system == SystemConfig{16, 4});
    CHECK_THROWS(load_job("/nonexistent/job.json"));

    // Trace files reference job files by path; arrivals override the file.
    const auto trace_path = std::filesystem::temp_directory_path() / "pipetune_trace_test.csv";
    {
        std::ofstream out(trace_path);
        out << "# comment\n";
        out << "0.5," << dir << "/jacobi_rodinia.json\n";
        out << "9.25," << dir << "/bfs_rodinia.json\n";
    }
    const auto jobs = load_trace(trace_path.string(), TuningMode::V1);
    std::filesystem::remove(trace_path);
    REQUIRE(jobs.size() == 2);
    CHECK(jobs[0].arrival_time_s == 0.5);
    CHECK(jobs[0].workload.name() == "jacobi/rodinia");
    CHECK(jobs[1].arrival_time_s == 9.25);
    CHECK(jobs[1].mode == TuningMode::V1);
}

TEST_CASE("a wider profiling window delays the similarity decision") {
    RunConfig cfg;
    cfg.profile_window_epochs = 2;
    MetricStore store;
    GroundTruthStore gt = warm_start_store(default_workloads());
    Orchestrator orch{cfg, &store, &gt};
    HptJob job = grid_job("window", one_point_space(32, 10), TuningMode::PipeTune);
    const JobOutcome out = orch.run_job(job, 5);
    CHECK(out.best_system == SystemConfig{16, 8});

    const auto durations = store.query_range("trial.epoch.duration_s", {{"job", "window"}}, 0,
                                             std::numeric_limits<double>::max());
    REQUIRE(durations.size() == 10);
    const HyperParams h{32, 0.25, 100, 0.01, 10};
    std::map<int, double> by_epoch;
    for (const auto& p : durations) by_epoch[std::stoi(p.tags.at("epoch"))] = p.value;
    // Epochs 1 and 2 profile at the initial config; reuse starts at epoch 3.
    for (int e : {1, 2})
        CHECK_THAT(by_epoch.at(e),
                   WithinRel(1.02 * epoch_duration_s(job.workload, h, {16, 4}), 1e-12));
    for (int e = 3; e <= 10; ++e)
        CHECK_THAT(by_epoch.at(e), WithinRel(epoch_duration_s(job.workload, h, {16, 8}), 1e-12));
}
