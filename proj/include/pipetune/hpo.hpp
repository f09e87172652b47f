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
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "pipetune/core.hpp"
#include "pipetune/rng.hpp"

namespace pipetune {

/// Discrete candidate lists per hyperparameter. When the cores/memory lists
/// are nonempty, system configurations are part of the search space and each
/// proposal carries one (the "system as hyperparameters" setup).
struct SearchSpace {
    std::vector<int> batch_sizes{32, 64, 256, 1024};
    std::vector<double> dropout_rates{0.0, 0.1, 0.25, 0.4};
    std::vector<int> embedding_dims{50, 100, 200, 300};
    std::vector<double> learning_rates{0.001, 0.005, 0.01, 0.05, 0.1};
    std::vector<int> num_epochs{10, 20, 40, 80};
    std::vector<int> cores;      // empty unless system dimensions are searched
    std::vector<int> memory_gb;  // empty unless system dimensions are searched

    bool has_system_dims() const { return !cores.empty() && !memory_gb.empty(); }

    /// Every candidate combination must satisfy the hyperparameter ranges.
    void check() const {
        auto probe = [](HyperParams h) {
            auto v = validate(h);
            if (!v.empty())
                throw std::invalid_argument("search space candidate out of range: " + v[0].field);
        };
        if (batch_sizes.empty() || dropout_rates.empty() || embedding_dims.empty() ||
            learning_rates.empty() || num_epochs.empty())
            throw std::invalid_argument("search space has an empty dimension");
        HyperParams mid;  // in-range defaults
        for (int b : batch_sizes) { HyperParams h = mid; h.batch_size = b; probe(h); }
        for (double d : dropout_rates) { HyperParams h = mid; h.dropout_rate = d; probe(h); }
        for (int e : embedding_dims) { HyperParams h = mid; h.embedding_dims = e; probe(h); }
        for (double l : learning_rates) { HyperParams h = mid; h.learning_rate = l; probe(h); }
        for (int n : num_epochs) { HyperParams h = mid; h.num_epochs = n; probe(h); }
    }
};

struct Round {
    int trial_count = 0;
    int epoch_budget = 0;
};

struct BracketPlan {
    int s = 0;  // bracket index, s_max .. 0
    std::vector<Round> rounds;
};

/// Successive-halving bracket table. With s_max = floor(log_eta R) and
/// B = (s_max+1)*R, bracket s starts n = ceil((B/R) * eta^s / (s+1)) trials
/// at budget r = R * eta^-s; each round keeps floor(n/eta) survivors with
/// eta times the budget.
inline std::vector<BracketPlan> hyperband_plan(int max_epochs, int eta) {
    if (max_epochs < 1) throw std::invalid_argument("hyperband_plan: R must be >= 1");
    if (eta < 2) throw std::invalid_argument("hyperband_plan: eta must be >= 2");
    const double R = static_cast<double>(max_epochs);
    const int s_max = static_cast<int>(std::floor(std::log(R) / std::log(static_cast<double>(eta)) +
                                                  1e-9));
    const double budget = static_cast<double>(s_max + 1) * R;
    std::vector<BracketPlan> plans;
    for (int s = s_max; s >= 0; --s) {
        BracketPlan plan;
        plan.s = s;
        int n = static_cast<int>(
            std::ceil(budget / R * std::pow(eta, s) / static_cast<double>(s + 1) - 1e-9));
        int r = static_cast<int>(std::lround(R / std::pow(eta, s)));
        for (int round = 0; round <= s && n > 0; ++round) {
            plan.rounds.push_back({n, r});
            n = n / eta;  // floor(n/eta) survivors
            r = r * eta;
        }
        plans.push_back(std::move(plan));
    }
    return plans;
}

/// One unit of work handed to the orchestrator: run these hyperparameters
/// for up to `epoch_budget` epochs (0 means the trial's own num_epochs) and
/// report the score back.
struct TrialProposal {
    std::string trial_id;
    HyperParams hyper;
    int epoch_budget = 0;
    std::optional<SystemConfig> system;  // set only when the space has system dims
};

struct BestRecord {
    TrialProposal proposal;
    double score = 0.0;
};

/// Search algorithms behind one pull interface: next_trials() drains the
/// currently issuable batch, report() feeds a score back (and may unlock the
/// next round), exhausted() means no further proposals will ever be issued.
class TrialScheduler {
public:
    virtual ~TrialScheduler() = default;

    virtual std::vector<TrialProposal> next_trials() = 0;
    virtual void report(const std::string& trial_id, double score) = 0;
    virtual bool exhausted() const = 0;
    virtual int outstanding() const = 0;
    virtual std::optional<BestRecord> best() const = 0;

    bool done() const { return exhausted() && outstanding() == 0; }
};

namespace detail {

inline std::string make_trial_id(int n) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "trial-%04d", n);
    return buf;
}

}  // namespace detail

/// Shared bookkeeping of issued proposals and scores.
class SchedulerBase : public TrialScheduler {
public:
    void report(const std::string& trial_id, double score) override {
        auto it = issued_.find(trial_id);
        if (it == issued_.end())
            throw std::invalid_argument("report: unknown trial id " + trial_id);
        if (it->second.scored) throw std::invalid_argument("report: duplicate for " + trial_id);
        it->second.scored = true;
        it->second.score = score;
        --outstanding_;
        consider_best(it->second.proposal, score);
        on_report(it->second.proposal, score);
    }

    int outstanding() const override { return outstanding_; }

    std::optional<BestRecord> best() const override { return best_; }

protected:
    struct Issued {
        TrialProposal proposal;
        bool scored = false;
        double score = 0.0;
        int order = 0;
    };

    TrialProposal issue(HyperParams h, int budget, std::optional<SystemConfig> sys) {
        TrialProposal p{detail::make_trial_id(next_id_++), h, budget, sys};
        issued_[p.trial_id] = Issued{p, false, 0.0, next_id_ - 1};
        ++outstanding_;
        return p;
    }

    virtual void on_report(const TrialProposal&, double) {}

    /// Whether a scored proposal competes for the final best.
    virtual bool counts_for_best(const TrialProposal&) const { return true; }

    void consider_best(const TrialProposal& p, double score) {
        if (!counts_for_best(p)) return;
        if (!best_ || score > best_->score) best_ = BestRecord{p, score};
    }

    std::map<std::string, Issued> issued_;
    int next_id_ = 0;
    int outstanding_ = 0;
    std::optional<BestRecord> best_;
};

/// Exhaustive cross product, each point visited exactly once. Budget is the
/// point's own num_epochs.
class GridScheduler : public SchedulerBase {
public:
    explicit GridScheduler(SearchSpace space) : space_(std::move(space)) { space_.check(); }

    std::vector<TrialProposal> next_trials() override {
        std::vector<TrialProposal> out;
        if (issued_all_) return out;
        issued_all_ = true;
        for (int b : space_.batch_sizes)
            for (double d : space_.dropout_rates)
                for (int e : space_.embedding_dims)
                    for (double l : space_.learning_rates)
                        for (int n : space_.num_epochs) {
                            HyperParams h{b, d, e, l, n};
                            if (space_.has_system_dims()) {
                                for (int c : space_.cores)
                                    for (int m : space_.memory_gb)
                                        out.push_back(issue(h, 0, SystemConfig{c, m}));
                            } else {
                                out.push_back(issue(h, 0, std::nullopt));
                            }
                        }
        return out;
    }

    bool exhausted() const override { return issued_all_; }

private:
    SearchSpace space_;
    bool issued_all_ = false;
};

/// Fixed number of uniform draws from the space; deterministic under seed.
class RandomScheduler : public SchedulerBase {
public:
    RandomScheduler(SearchSpace space, int samples, std::uint64_t seed)
        : space_(std::move(space)), samples_(samples), rng_(hash_mix(seed, fnv1a("random-search"))) {
        space_.check();
        if (samples_ < 1) throw std::invalid_argument("random search needs >= 1 sample");
    }

    std::vector<TrialProposal> next_trials() override {
        std::vector<TrialProposal> out;
        if (issued_all_) return out;
        issued_all_ = true;
        out.reserve(static_cast<std::size_t>(samples_));
        for (int i = 0; i < samples_; ++i) {
            auto [h, sys] = sample_point(space_, rng_);
            out.push_back(issue(h, 0, sys));
        }
        return out;
    }

    bool exhausted() const override { return issued_all_; }

    static std::pair<HyperParams, std::optional<SystemConfig>> sample_point(const SearchSpace& s,
                                                                            Rng& rng) {
        HyperParams h;
        h.batch_size = s.batch_sizes[rng.uniform_index(s.batch_sizes.size())];
        h.dropout_rate = s.dropout_rates[rng.uniform_index(s.dropout_rates.size())];
        h.embedding_dims = s.embedding_dims[rng.uniform_index(s.embedding_dims.size())];
        h.learning_rate = s.learning_rates[rng.uniform_index(s.learning_rates.size())];
        h.num_epochs = s.num_epochs[rng.uniform_index(s.num_epochs.size())];
        std::optional<SystemConfig> sys;
        if (s.has_system_dims())
            sys = SystemConfig{s.cores[rng.uniform_index(s.cores.size())],
                               s.memory_gb[rng.uniform_index(s.memory_gb.size())]};
        return {h, sys};
    }

private:
    SearchSpace space_;
    int samples_;
    Rng rng_;
    bool issued_all_ = false;
};

/// HyperBand: brackets run in sequence; within a bracket, each round is a
/// barrier — survivors (top floor(n/eta) by score, ties to the earlier
/// trial) are re-proposed at eta times the budget. The final best is the
/// argmax over trials that ran the full budget R.
class HyperbandScheduler : public SchedulerBase {
public:
    HyperbandScheduler(SearchSpace space, int max_epochs, int eta, std::uint64_t seed)
        : space_(std::move(space)),
          max_epochs_(max_epochs),
          plans_(hyperband_plan(max_epochs, eta)),
          eta_(eta),
          rng_(hash_mix(seed, fnv1a("hyperband"))) {
        space_.check();
    }

    std::vector<TrialProposal> next_trials() override {
        std::vector<TrialProposal> out;
        if (round_open_ || bracket_ >= plans_.size()) return out;
        const Round& round = plans_[bracket_].rounds[round_idx_];
        round_members_.clear();
        if (round_idx_ == 0) {
            round_members_.reserve(static_cast<std::size_t>(round.trial_count));
            for (int i = 0; i < round.trial_count; ++i) {
                auto [h, sys] = RandomScheduler::sample_point(space_, rng_);
                round_members_.push_back({h, sys, 0.0, i});
            }
        } else {
            round_members_ = survivors_;
            for (std::size_t i = 0; i < round_members_.size(); ++i)
                round_members_[i].order = static_cast<int>(i);
        }
        out.reserve(round_members_.size());
        for (std::size_t i = 0; i < round_members_.size(); ++i) {
            TrialProposal p = issue(round_members_[i].hyper, round.epoch_budget,
                                    round_members_[i].system);
            pending_[p.trial_id] = i;
            out.push_back(std::move(p));
        }
        round_open_ = true;
        return out;
    }

    bool exhausted() const override { return bracket_ >= plans_.size(); }

private:
    struct Member {
        HyperParams hyper;
        std::optional<SystemConfig> system;
        double score = 0.0;
        int order = 0;
    };

    void on_report(const TrialProposal& p, double score) override {
        auto it = pending_.find(p.trial_id);
        if (it == pending_.end()) return;
        round_members_[it->second].score = score;
        reported_.insert(p.trial_id);
        if (reported_.size() < pending_.size()) return;

        // Round complete: pick survivors.
        std::vector<Member> ranked = round_members_;
        std::stable_sort(ranked.begin(), ranked.end(), [](const Member& a, const Member& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.order < b.order;
        });
        const std::size_t keep =
            static_cast<std::size_t>(static_cast<int>(round_members_.size()) / eta_);
        survivors_.assign(ranked.begin(),
                          ranked.begin() + static_cast<std::ptrdiff_t>(
                                               std::min(keep, ranked.size())));
        pending_.clear();
        reported_.clear();
        round_open_ = false;
        ++round_idx_;
        if (round_idx_ >= plans_[bracket_].rounds.size() || survivors_.empty()) {
            ++bracket_;
            round_idx_ = 0;
            survivors_.clear();
        }
    }

    bool counts_for_best(const TrialProposal& p) const override {
        return p.epoch_budget == max_epochs_;
    }

    SearchSpace space_;
    int max_epochs_;
    std::vector<BracketPlan> plans_;
    int eta_;
    Rng rng_;
    std::size_t bracket_ = 0;
    std::size_t round_idx_ = 0;
    bool round_open_ = false;
    std::vector<Member> round_members_;
    std::vector<Member> survivors_;
    std::map<std::string, std::size_t> pending_;
    std::set<std::string> reported_;
};

}  // namespace pipetune
