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

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "pipetune/core.hpp"
#include "pipetune/ground_truth.hpp"
#include "pipetune/hpo.hpp"
#include "pipetune/metric_store.hpp"
#include "pipetune/probing.hpp"
#include "pipetune/profiler.hpp"
#include "pipetune/simulator.hpp"

namespace pipetune {

/// Job-level tuning engine. Jobs are admitted FIFO onto a simulated cluster;
/// every reported duration comes from the training simulator through a
/// virtual clock, so multi-hour tuning runs complete in milliseconds. In
/// pipelined mode each trial profiles its first epoch while training,
/// queries the similarity store, and either reuses a known-good system
/// configuration or probes the grid one configuration per epoch.

enum class TuningMode { V1, V2, PipeTune };

inline const char* to_string(TuningMode m) {
    switch (m) {
        case TuningMode::V1: return "v1";
        case TuningMode::V2: return "v2";
        case TuningMode::PipeTune: return "pipetune";
    }
    return "?";
}

inline TuningMode mode_from_string(const std::string& s) {
    if (s == "v1") return TuningMode::V1;
    if (s == "v2") return TuningMode::V2;
    if (s == "pipetune") return TuningMode::PipeTune;
    throw std::invalid_argument("unknown mode: " + s + " (expected v1|v2|pipetune)");
}

struct SearchConfig {
    enum class Algorithm { HyperBand, Grid, Random };
    Algorithm algorithm = Algorithm::HyperBand;
    int max_epochs_per_trial = 81;  // HyperBand R
    int halving = 3;                // HyperBand eta
    int samples = 32;               // random search draw count
    SearchSpace space;
};

struct HptJob {
    std::string job_id;
    WorkloadSpec workload;
    SearchConfig search;
    Objective objective{ObjectiveKind::MaxAccuracy};
    TuningMode mode = TuningMode::PipeTune;
    double arrival_time_s = 0.0;
    int max_parallel_trials = 4;
    SystemConfig initial_system{16, 4};
};

struct JobOutcome {
    std::string job_id;
    std::string workload;
    WorkloadFamily family = WorkloadFamily::TypeI;
    TuningMode mode = TuningMode::V1;
    HyperParams best_hyper;
    SystemConfig best_system;
    double final_accuracy = 0.0;
    double training_time_s = 0.0;  // of the best trial
    double tuning_time_s = 0.0;    // job wall-clock, start to completion
    double total_energy_j = 0.0;
    double arrival_time_s = 0.0;
    double start_time_s = 0.0;
    double completion_time_s = 0.0;
    double response_time_s = 0.0;  // completion - arrival
    int trials_run = 0;
};

struct ClusterSpec {
    int nodes = 4;
    int cores_per_node = 32;
    int memory_gb_per_node = 64;
};

/// Per-node core/memory ledger; every allocation is checked against
/// capacity and double releases throw.
class ClusterState {
public:
    explicit ClusterState(ClusterSpec spec) : spec_(spec) {
        nodes_.assign(static_cast<std::size_t>(spec.nodes),
                      {spec.cores_per_node, spec.memory_gb_per_node});
    }

    std::optional<int> try_allocate(const std::string& trial_key, SystemConfig cfg) {
        for (int n = 0; n < static_cast<int>(nodes_.size()); ++n)
            if (try_allocate_on(trial_key, cfg, n)) return n;
        return std::nullopt;
    }

    bool try_allocate_on(const std::string& trial_key, SystemConfig cfg, int node) {
        if (allocations_.count(trial_key))
            throw std::logic_error("cluster: trial already allocated: " + trial_key);
        auto& nd = nodes_.at(static_cast<std::size_t>(node));
        if (cfg.cores > nd.free_cores || cfg.memory_gb > nd.free_memory_gb) return false;
        nd.free_cores -= cfg.cores;
        nd.free_memory_gb -= cfg.memory_gb;
        allocations_[trial_key] = {node, cfg};
        check(node);
        return true;
    }

    void release(const std::string& trial_key) {
        auto it = allocations_.find(trial_key);
        if (it == allocations_.end())
            throw std::logic_error("cluster: release of unallocated trial: " + trial_key);
        auto& nd = nodes_.at(static_cast<std::size_t>(it->second.first));
        nd.free_cores += it->second.second.cores;
        nd.free_memory_gb += it->second.second.memory_gb;
        check(it->second.first);
        allocations_.erase(it);
    }

    const std::map<std::string, std::pair<int, SystemConfig>>& allocations() const {
        return allocations_;
    }
    int free_cores(int node) const { return nodes_.at(static_cast<std::size_t>(node)).free_cores; }
    int free_memory_gb(int node) const {
        return nodes_.at(static_cast<std::size_t>(node)).free_memory_gb;
    }
    const ClusterSpec& spec() const { return spec_; }

private:
    struct Node {
        int free_cores;
        int free_memory_gb;
    };

    void check(int node) const {
        const auto& nd = nodes_.at(static_cast<std::size_t>(node));
        if (nd.free_cores < 0 || nd.free_cores > spec_.cores_per_node || nd.free_memory_gb < 0 ||
            nd.free_memory_gb > spec_.memory_gb_per_node)
            throw std::logic_error("cluster: capacity invariant violated");
    }

    ClusterSpec spec_;
    std::vector<Node> nodes_;
    std::map<std::string, std::pair<int, SystemConfig>> allocations_;
};

struct RunConfig {
    ClusterSpec cluster;
    double profiling_overhead = 1.02;  // duration multiplier on profiled epochs
    ProbeCriterion probe_criterion = ProbeCriterion::MinDuration;
    int profile_window_epochs = 1;  // epochs averaged into the similarity query
};

struct TrialSummary {
    TrialProposal proposal;
    TrialResult result;
    double score = 0.0;
};

struct QueueResult {
    std::vector<JobOutcome> outcomes;
    /// Hyperparameter proposals per job, in issue order.
    std::map<std::string, std::vector<TrialProposal>> proposals;
};

class Orchestrator {
public:
    explicit Orchestrator(RunConfig cfg, MetricStore* store = nullptr,
                          GroundTruthStore* ground_truth = nullptr)
        : cfg_(cfg), store_(store), ground_truth_(ground_truth) {}

    JobOutcome run_job(const HptJob& job, std::uint64_t seed) {
        QueueResult r = run_queue({job}, seed);
        return r.outcomes.at(0);
    }

    /// Runs a FIFO queue of jobs; arrival timestamps must be nondecreasing.
    QueueResult run_queue(std::vector<HptJob> jobs, std::uint64_t seed);

private:
    struct JobRuntime;

    struct TrialRuntime {
        JobRuntime* job = nullptr;
        std::size_t index = 0;  // position in trials_
        TrialProposal proposal;
        TrialSpec spec;
        std::string key;  // job_id/trial_id, unique across the queue
        int total_epochs = 0;
        int current_epoch = 0;
        SystemConfig current_system;
        EpochOutcome pending;
        std::vector<EpochRecord> records;
        std::vector<EpochProfile> window_profiles;
        std::optional<EpochProfile> query_profile;
        std::optional<ProbePlan> plan;
        std::vector<ProbeMeasurement> measurements;
        std::optional<SystemConfig> reuse_config;
        std::optional<SystemConfig> selected_config;
        int node = -1;
        // Set while waiting for capacity to switch configurations.
        std::optional<std::pair<int, SystemConfig>> blocked_epoch;
    };

    struct JobRuntime {
        HptJob job;  // mode-adjusted copy
        std::size_t arrival_index = 0;
        std::unique_ptr<TrialScheduler> scheduler;
        std::deque<TrialProposal> ready;
        std::vector<TrialProposal> proposal_log;
        int running = 0;
        bool arrived = false;
        bool complete = false;
        bool started = false;
        double start_time = 0.0;
        double completion_time = 0.0;
        double total_energy = 0.0;
        double best_accuracy_so_far = 0.0;
        int trials_run = 0;
        std::uint64_t trial_seed_base = 0;
        std::map<std::string, TrialSummary> finished;
    };

    struct Event {
        double time;
        std::uint64_t seq;
        enum Kind { Arrival, EpochEnd } kind;
        std::size_t index;  // job index for Arrival, trial index for EpochEnd

        bool operator>(const Event& other) const {
            if (time != other.time) return time > other.time;
            return seq > other.seq;
        }
    };

    static HptJob adjust_for_mode(HptJob job) {
        if (job.mode == TuningMode::V2) {
            job.objective = Objective{ObjectiveKind::MaxAccuracyPerSecond};
            if (!job.search.space.has_system_dims()) {
                job.search.space.cores.assign(std::begin(kCoreChoices), std::end(kCoreChoices));
                job.search.space.memory_gb.assign(std::begin(kMemoryChoices),
                                                  std::end(kMemoryChoices));
            }
        } else {
            job.search.space.cores.clear();
            job.search.space.memory_gb.clear();
        }
        return job;
    }

    static std::unique_ptr<TrialScheduler> make_scheduler(const SearchConfig& sc,
                                                          std::uint64_t seed) {
        switch (sc.algorithm) {
            case SearchConfig::Algorithm::HyperBand:
                return std::make_unique<HyperbandScheduler>(sc.space, sc.max_epochs_per_trial,
                                                            sc.halving, seed);
            case SearchConfig::Algorithm::Grid:
                return std::make_unique<GridScheduler>(sc.space);
            case SearchConfig::Algorithm::Random:
                return std::make_unique<RandomScheduler>(sc.space, sc.samples, seed);
        }
        throw std::logic_error("unknown search algorithm");
    }

    bool pipelined(const JobRuntime& jr) const { return jr.job.mode == TuningMode::PipeTune; }

    // --- event-loop state (valid during run_queue) ---
    RunConfig cfg_;
    MetricStore* store_;
    GroundTruthStore* ground_truth_;
    double now_ = 0.0;
    std::uint64_t event_seq_ = 0;
    std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events_;
    std::vector<std::unique_ptr<JobRuntime>> jobs_;
    std::vector<std::unique_ptr<TrialRuntime>> trials_;
    std::deque<std::size_t> resume_queue_;  // trials waiting to switch configs
    std::unique_ptr<ClusterState> cluster_;

    void push_event(double time, Event::Kind kind, std::size_t index) {
        events_.push(Event{time, event_seq_++, kind, index});
    }

    bool epoch_is_profiled(const TrialRuntime& tr, int epoch) const {
        if (!pipelined(*tr.job)) return false;
        if (epoch <= cfg_.profile_window_epochs) return true;
        return tr.plan && tr.plan->config_for_epoch(epoch) != nullptr;
    }

    SystemConfig config_for_epoch(const TrialRuntime& tr, int epoch) const {
        if (!pipelined(*tr.job)) return tr.spec.initial_system;
        if (epoch <= cfg_.profile_window_epochs) return tr.spec.initial_system;
        if (tr.reuse_config) return *tr.reuse_config;
        if (tr.plan) {
            if (const SystemConfig* probe = tr.plan->config_for_epoch(epoch)) return *probe;
            if (tr.selected_config) return *tr.selected_config;
            return tr.plan->remaining_config;
        }
        return tr.spec.initial_system;
    }

    void begin_epoch(TrialRuntime& tr, int epoch, SystemConfig cfg) {
        const double scale = epoch_is_profiled(tr, epoch) ? cfg_.profiling_overhead : 1.0;
        tr.current_epoch = epoch;
        tr.current_system = cfg;
        tr.pending = simulate_epoch(tr.spec, cfg, epoch, scale);
        push_event(now_ + tr.pending.duration_s, Event::EpochEnd, tr.index);
    }

    void handle_epoch_end(std::size_t index);
    void finish_trial(TrialRuntime& tr);
    void dispatch();
    void record_epoch_metrics(const TrialRuntime& tr, const EpochRecord& rec);
    JobOutcome make_outcome(JobRuntime& jr) const;
};

inline QueueResult Orchestrator::run_queue(std::vector<HptJob> jobs, std::uint64_t seed) {
    if (jobs.empty()) throw std::invalid_argument("run_queue: no jobs");
    for (std::size_t i = 1; i < jobs.size(); ++i)
        if (jobs[i].arrival_time_s < jobs[i - 1].arrival_time_s)
            throw std::invalid_argument("run_queue: arrival times must be nondecreasing");

    now_ = 0.0;
    event_seq_ = 0;
    events_ = {};
    jobs_.clear();
    trials_.clear();
    resume_queue_.clear();
    cluster_ = std::make_unique<ClusterState>(cfg_.cluster);

    for (std::size_t i = 0; i < jobs.size(); ++i) {
        auto jr = std::make_unique<JobRuntime>();
        jr->job = adjust_for_mode(jobs[i]);
        jr->arrival_index = i;
        const std::uint64_t job_seed = hash_mix(seed, fnv1a(jr->job.job_id), i);
        jr->scheduler = make_scheduler(jr->job.search, job_seed);
        jr->trial_seed_base = hash_mix(job_seed, fnv1a("trials"));
        jobs_.push_back(std::move(jr));
        push_event(jobs[i].arrival_time_s, Event::Arrival, i);
    }

    while (!events_.empty()) {
        const Event ev = events_.top();
        events_.pop();
        now_ = ev.time;
        if (ev.kind == Event::Arrival) {
            jobs_[ev.index]->arrived = true;
        } else {
            handle_epoch_end(ev.index);
        }
        dispatch();
    }

    QueueResult result;
    for (auto& jr : jobs_) {
        if (!jr->complete)
            throw std::logic_error("run_queue: job did not complete: " + jr->job.job_id);
        result.outcomes.push_back(make_outcome(*jr));
        result.proposals[jr->job.job_id] = jr->proposal_log;
    }
    return result;
}

inline void Orchestrator::handle_epoch_end(std::size_t index) {
    TrialRuntime& tr = *trials_[index];
    JobRuntime& jr = *tr.job;
    const int epoch = tr.current_epoch;

    EpochRecord rec;
    rec.index = epoch;
    rec.duration_s = tr.pending.duration_s;
    rec.accuracy_after = tr.pending.accuracy_after;
    rec.energy_j = integrate(tr.pending.power);
    rec.system = tr.current_system;
    if (epoch_is_profiled(tr, epoch)) {
        EpochProfile profile = build_epoch_profile(tr.pending.event_samples, epoch);
        profile.workload_hint = tr.spec.workload.name();
        if (epoch <= cfg_.profile_window_epochs) tr.window_profiles.push_back(profile);
        rec.profile = std::move(profile);
    }
    tr.pending = {};
    record_epoch_metrics(tr, rec);
    tr.records.push_back(rec);

    if (pipelined(jr) && epoch == cfg_.profile_window_epochs && epoch < tr.total_epochs) {
        tr.query_profile = average_profiles(tr.window_profiles);
        SimilarityVerdict verdict;
        if (ground_truth_) verdict = ground_truth_->query(*tr.query_profile);
        if (verdict.reuse) {
            tr.reuse_config = verdict.config;
        } else {
            const auto grid = enumerate_system_grid();
            tr.plan = make_plan(grid, epoch + 1, tr.total_epochs, tr.spec.initial_system);
        }
    }

    if (tr.plan && tr.plan->config_for_epoch(epoch)) {
        ProbeMeasurement m;
        m.config = tr.current_system;
        m.duration_s = rec.duration_s;
        m.energy_j = rec.energy_j;
        if (rec.profile) m.profile = *rec.profile;
        m.epoch_index = epoch;
        tr.measurements.push_back(std::move(m));
        if (epoch == tr.plan->last_probe_epoch())
            tr.selected_config = select_best(tr.measurements, cfg_.probe_criterion);
    }

    if (epoch >= tr.total_epochs) {
        finish_trial(tr);
        return;
    }

    const SystemConfig next = config_for_epoch(tr, epoch + 1);
    if (next == tr.current_system) {
        begin_epoch(tr, epoch + 1, next);
        return;
    }
    cluster_->release(tr.key);
    if (cluster_->try_allocate_on(tr.key, next, tr.node)) {
        begin_epoch(tr, epoch + 1, next);
    } else {
        tr.blocked_epoch = {epoch + 1, next};
        resume_queue_.push_back(index);
    }
}

inline void Orchestrator::finish_trial(TrialRuntime& tr) {
    JobRuntime& jr = *tr.job;
    cluster_->release(tr.key);
    --jr.running;
    ++jr.trials_run;

    TrialResult result;
    result.epochs = tr.records;
    for (const EpochRecord& r : result.epochs) {
        result.training_time_s += r.duration_s;
        result.energy_j += r.energy_j;
        result.final_accuracy = r.accuracy_after;
    }
    result.chosen_system = result.epochs.back().system;

    const double trial_score = score(result, jr.job.objective);
    jr.scheduler->report(tr.proposal.trial_id, trial_score);
    jr.total_energy += result.energy_j;
    jr.finished[tr.proposal.trial_id] = TrialSummary{tr.proposal, result, trial_score};

    if (result.final_accuracy > jr.best_accuracy_so_far)
        jr.best_accuracy_so_far = result.final_accuracy;
    if (store_) {
        store_->append(SeriesPoint{"job.trajectory.best_accuracy",
                                   {{"job", jr.job.job_id}, {"mode", to_string(jr.job.mode)}},
                                   now_ - jr.start_time,
                                   jr.best_accuracy_so_far});
    }

    if (pipelined(jr) && ground_truth_ && tr.query_profile) {
        SystemConfig chosen = tr.spec.initial_system;
        if (tr.selected_config) chosen = *tr.selected_config;
        else if (tr.reuse_config) chosen = *tr.reuse_config;
        double sum = 0.0;
        int count = 0;
        for (const EpochRecord& r : tr.records)
            if (r.system == chosen) {
                sum += r.duration_s;
                ++count;
            }
        ProfileRecord pr;
        pr.profile = *tr.query_profile;
        pr.config = chosen;
        pr.config_score = count > 0 ? -(sum / count) : std::optional<double>{};
        pr.family_hint = to_string(tr.spec.workload.family);
        ground_truth_->observe(std::move(pr));
    }

    if (jr.scheduler->done() && jr.running == 0 && jr.ready.empty()) {
        jr.complete = true;
        jr.completion_time = now_;
        if (store_) {
            const JobOutcome outcome = make_outcome(jr);
            const std::map<std::string, std::string> tags{
                {"job", jr.job.job_id},
                {"mode", to_string(jr.job.mode)},
                {"workload", jr.job.workload.name()},
                {"family", to_string(jr.job.workload.family)}};
            store_->append({"job.outcome.final_accuracy", tags, now_, outcome.final_accuracy});
            store_->append({"job.outcome.training_time_s", tags, now_, outcome.training_time_s});
            store_->append({"job.outcome.tuning_time_s", tags, now_, outcome.tuning_time_s});
            store_->append({"job.outcome.total_energy_j", tags, now_, outcome.total_energy_j});
            store_->append({"job.outcome.response_time_s", tags, now_, outcome.response_time_s});
        }
    }
}

inline void Orchestrator::dispatch() {
    // Blocked configuration switches resume first, each pinned to its node.
    for (auto it = resume_queue_.begin(); it != resume_queue_.end();) {
        TrialRuntime& tr = *trials_[*it];
        const auto [epoch, cfg] = *tr.blocked_epoch;
        if (cluster_->try_allocate_on(tr.key, cfg, tr.node)) {
            tr.blocked_epoch.reset();
            begin_epoch(tr, epoch, cfg);
            it = resume_queue_.erase(it);
        } else {
            ++it;
        }
    }

    for (auto& jrp : jobs_) {
        JobRuntime& jr = *jrp;
        if (!jr.arrived || jr.complete) continue;
        if (jr.ready.empty() && !jr.scheduler->exhausted()) {
            for (TrialProposal& p : jr.scheduler->next_trials()) {
                jr.proposal_log.push_back(p);
                jr.ready.push_back(std::move(p));
            }
        }
    }

    // FIFO admission: jobs in arrival order; a trial that does not fit
    // blocks all later admissions until capacity frees.
    for (auto& jrp : jobs_) {
        JobRuntime& jr = *jrp;
        if (!jr.arrived || jr.complete) continue;
        while (jr.running < jr.job.max_parallel_trials && !jr.ready.empty()) {
            const TrialProposal& next = jr.ready.front();
            const SystemConfig initial = next.system ? *next.system : jr.job.initial_system;
            const std::string key = jr.job.job_id + "/" + next.trial_id;
            const auto node = cluster_->try_allocate(key, initial);
            if (!node) return;  // strict FIFO: wait for capacity

            auto tr = std::make_unique<TrialRuntime>();
            tr->job = &jr;
            tr->proposal = next;
            tr->key = key;
            tr->spec.workload = jr.job.workload;
            tr->spec.hyper = next.hyper;
            tr->spec.initial_system = initial;
            tr->spec.trial_id = key;
            tr->spec.seed = hash_mix(jr.trial_seed_base, fnv1a(next.trial_id));
            const int budget = next.epoch_budget > 0 ? next.epoch_budget : next.hyper.num_epochs;
            tr->total_epochs = std::min(budget, next.hyper.num_epochs);
            tr->node = *node;
            tr->index = trials_.size();
            jr.ready.pop_front();
            ++jr.running;
            if (!jr.started) {
                jr.started = true;
                jr.start_time = now_;
            }
            trials_.push_back(std::move(tr));
            begin_epoch(*trials_.back(), 1, initial);
        }
    }
}

inline void Orchestrator::record_epoch_metrics(const TrialRuntime& tr, const EpochRecord& rec) {
    if (!store_) return;
    const std::map<std::string, std::string> tags{{"job", tr.job->job.job_id},
                                                  {"mode", to_string(tr.job->job.mode)},
                                                  {"trial", tr.proposal.trial_id},
                                                  {"epoch", std::to_string(rec.index)}};
    store_->append({"trial.epoch.duration_s", tags, now_, rec.duration_s});
    store_->append({"trial.epoch.accuracy", tags, now_, rec.accuracy_after});
    store_->append({"trial.epoch.energy_j", tags, now_, rec.energy_j});
}

inline JobOutcome Orchestrator::make_outcome(JobRuntime& jr) const {
    const auto best = jr.scheduler->best();
    if (!best) throw std::logic_error("job finished without a best trial: " + jr.job.job_id);
    const TrialSummary& summary = jr.finished.at(best->proposal.trial_id);

    JobOutcome out;
    out.job_id = jr.job.job_id;
    out.workload = jr.job.workload.name();
    out.family = jr.job.workload.family;
    out.mode = jr.job.mode;
    out.best_hyper = summary.proposal.hyper;
    out.best_system = summary.result.chosen_system;
    out.final_accuracy = summary.result.final_accuracy;
    out.training_time_s = summary.result.training_time_s;
    out.tuning_time_s = jr.completion_time - jr.start_time;
    out.total_energy_j = jr.total_energy;
    out.arrival_time_s = jr.job.arrival_time_s;
    out.start_time_s = jr.start_time;
    out.completion_time_s = jr.completion_time;
    out.response_time_s = jr.completion_time - jr.job.arrival_time_s;
    out.trials_run = jr.trials_run;
    return out;
}

}  // namespace pipetune
