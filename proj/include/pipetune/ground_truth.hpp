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
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pipetune/core.hpp"
#include "pipetune/events.hpp"
#include "pipetune/rng.hpp"

namespace pipetune {

/// Similarity store: k-means over historical epoch profiles, with a
/// per-cluster best-known system configuration. A new profile close enough
/// to a centroid reuses that cluster's configuration; accumulated novelty
/// triggers re-clustering over the full history.

struct ProfileRecord {
    EpochProfile profile;
    std::optional<SystemConfig> config;
    std::optional<double> config_score;  // higher is better; callers use -duration
    std::string family_hint;             // evaluation-only label
};

struct ClusterStats {
    long count = 0;
    double mean_sq_dist = 0.0;
    std::optional<SystemConfig> best_config;
    std::optional<double> best_score;
};

struct ClusterModel {
    int k = 2;
    std::uint64_t seed = 42;
    double theta = 2.0;  // threshold = theta * sqrt(inertia / trained_on)
    std::array<double, kEventCount> feature_mean{};
    std::array<double, kEventCount> feature_std{};
    std::vector<std::array<double, kEventCount>> centroids;  // standardized space
    std::vector<ClusterStats> per_cluster;
    double inertia = 0.0;
    long trained_on = 0;

    // Novelty bookkeeping since the last fit.
    int novelty_count = 0;
    std::deque<bool> recent_failures;  // rolling window of threshold misses

    bool fitted() const { return !centroids.empty(); }
};

inline constexpr int kReclusterNoveltyLimit = 10;
inline constexpr std::size_t kReclusterWindow = 20;
inline constexpr double kReclusterFailureFraction = 0.5;

struct SimilarityVerdict {
    int cluster_id = -1;
    double distance = std::numeric_limits<double>::infinity();
    double threshold = 0.0;
    bool reuse = false;
    std::optional<SystemConfig> config;
};

namespace detail {

inline std::array<double, kEventCount> standardize(const std::array<double, kEventCount>& v,
                                                   const ClusterModel& m) {
    std::array<double, kEventCount> z{};
    for (std::size_t i = 0; i < kEventCount; ++i)
        z[i] = (v[i] - m.feature_mean[i]) / m.feature_std[i];
    return z;
}

inline double sq_distance(const std::array<double, kEventCount>& a,
                          const std::array<double, kEventCount>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < kEventCount; ++i) {
        const double t = a[i] - b[i];
        d += t * t;
    }
    return d;
}

inline int nearest_centroid(const std::array<double, kEventCount>& z, const ClusterModel& m,
                            double* sq_dist_out = nullptr) {
    int best = 0;
    double best_d = std::numeric_limits<double>::max();
    for (std::size_t c = 0; c < m.centroids.size(); ++c) {
        const double d = sq_distance(z, m.centroids[c]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    if (sq_dist_out) *sq_dist_out = best_d;
    return best;
}

}  // namespace detail

/// Standard k-means with k-means++ seeding from a fixed seed, Euclidean
/// distance on z-scored features, at most 300 iterations, centroid-movement
/// tolerance 1e-4. Raw event counts span orders of magnitude, so distances
/// are computed on per-feature z-scores stored in the model.
inline ClusterModel fit(const std::vector<ProfileRecord>& records, int k,
                        std::uint64_t seed = 42, double theta = 2.0) {
    if (k < 1) throw std::invalid_argument("fit: k must be >= 1");
    const std::size_t n = records.size();
    if (n < static_cast<std::size_t>(k))
        throw std::invalid_argument("fit: need at least k profiles");

    ClusterModel model;
    model.k = k;
    model.seed = seed;
    model.theta = theta;
    model.trained_on = static_cast<long>(n);

    for (std::size_t i = 0; i < kEventCount; ++i) {
        double mean = 0.0;
        for (const auto& r : records) mean += r.profile.values[i];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (const auto& r : records) {
            const double d = r.profile.values[i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        model.feature_mean[i] = mean;
        model.feature_std[i] = var > 1e-24 ? std::sqrt(var) : 1.0;
    }

    std::vector<std::array<double, kEventCount>> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = detail::standardize(records[i].profile.values, model);

    // k-means++ seeding.
    Rng rng(seed);
    std::vector<std::array<double, kEventCount>> centroids;
    centroids.push_back(z[rng.uniform_index(n)]);
    std::vector<double> min_sq(n, 0.0);
    while (centroids.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double d = std::numeric_limits<double>::max();
            for (const auto& c : centroids) d = std::min(d, detail::sq_distance(z[i], c));
            min_sq[i] = d;
            total += d;
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            const double target = rng.uniform01() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += min_sq[i];
                if (acc >= target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.uniform_index(n);
        }
        centroids.push_back(z[pick]);
    }

    // Lloyd iterations.
    std::vector<int> assignment(n, 0);
    for (int iter = 0; iter < 300; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::max();
            for (std::size_t c = 0; c < centroids.size(); ++c) {
                const double d = detail::sq_distance(z[i], centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(c);
                }
            }
            assignment[i] = best;
        }
        std::vector<std::array<double, kEventCount>> next(centroids.size());
        std::vector<long> counts(centroids.size(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[assignment[i]];
            for (std::size_t d = 0; d < kEventCount; ++d) next[assignment[i]][d] += z[i][d];
        }
        for (std::size_t c = 0; c < next.size(); ++c) {
            if (counts[c] == 0) {
                // Re-seed an empty cluster with the point farthest from its
                // current centroid.
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = detail::sq_distance(z[i], centroids[assignment[i]]);
                    if (d > far_d) {
                        far_d = d;
                        far = i;
                    }
                }
                next[c] = z[far];
                counts[c] = 1;
                assignment[far] = static_cast<int>(c);
            } else {
                for (std::size_t d = 0; d < kEventCount; ++d)
                    next[c][d] /= static_cast<double>(counts[c]);
            }
        }
        double movement = 0.0;
        for (std::size_t c = 0; c < centroids.size(); ++c)
            movement = std::max(movement, std::sqrt(detail::sq_distance(centroids[c], next[c])));
        centroids = std::move(next);
        if (movement < 1e-4) break;
    }

    model.centroids = centroids;
    model.per_cluster.assign(static_cast<std::size_t>(k), {});
    for (std::size_t i = 0; i < n; ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::max();
        for (std::size_t c = 0; c < centroids.size(); ++c) {
            const double d = detail::sq_distance(z[i], centroids[c]);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        assignment[i] = best;
        auto& stats = model.per_cluster[best];
        ++stats.count;
        stats.mean_sq_dist += best_d;
        model.inertia += best_d;
        if (records[i].config && records[i].config_score) {
            if (!stats.best_score || *records[i].config_score > *stats.best_score) {
                stats.best_score = *records[i].config_score;
                stats.best_config = *records[i].config;
            }
        }
    }
    for (auto& stats : model.per_cluster)
        if (stats.count > 0) stats.mean_sq_dist /= static_cast<double>(stats.count);
    return model;
}

/// Cluster assignments of arbitrary profiles under a fitted model.
inline std::vector<int> assign_clusters(const ClusterModel& model,
                                        const std::vector<ProfileRecord>& records) {
    if (!model.fitted()) throw std::logic_error("assign_clusters: model not fitted");
    std::vector<int> out;
    out.reserve(records.size());
    for (const auto& r : records)
        out.push_back(detail::nearest_centroid(detail::standardize(r.profile.values, model), model));
    return out;
}

/// Distance of a profile to the nearest centroid, compared against the
/// per-point RMS distance of the training set (theta * sqrt(inertia/n)).
inline SimilarityVerdict similarity(const EpochProfile& profile, const ClusterModel& model) {
    if (!model.fitted()) throw std::logic_error("similarity: model not fitted");
    SimilarityVerdict v;
    double sq = 0.0;
    v.cluster_id = detail::nearest_centroid(detail::standardize(profile.values, model), model, &sq);
    v.distance = std::sqrt(sq);
    v.threshold = model.theta * std::sqrt(model.inertia / static_cast<double>(model.trained_on));
    const auto& best = model.per_cluster[static_cast<std::size_t>(v.cluster_id)].best_config;
    v.reuse = v.distance <= v.threshold && best.has_value();
    if (v.reuse) v.config = best;
    return v;
}

/// True when enough novelty accumulated since the last fit: either the
/// novelty counter reached its limit or more than half of the last 20
/// queries missed the threshold.
inline bool should_recluster(const ClusterModel& model) {
    if (!model.fitted()) return false;
    if (model.novelty_count >= kReclusterNoveltyLimit) return true;
    if (model.recent_failures.size() >= kReclusterWindow) {
        long failures = 0;
        for (bool f : model.recent_failures) failures += f ? 1 : 0;
        return static_cast<double>(failures) / static_cast<double>(model.recent_failures.size()) >
               kReclusterFailureFraction;
    }
    return false;
}

/// Folds one observation into the model: the profile joins the history, the
/// assigned cluster's best configuration is replaced when the score improves,
/// and a threshold miss counts toward re-clustering. Returns the possibly
/// re-fitted model; `history` must already contain the appended record.
inline ClusterModel update(ClusterModel model, const std::vector<ProfileRecord>& history,
                           const ProfileRecord& added) {
    if (!model.fitted()) throw std::logic_error("update: model not fitted");
    const SimilarityVerdict v = similarity(added.profile, model);
    const bool failed = v.distance > v.threshold;
    if (failed) ++model.novelty_count;
    model.recent_failures.push_back(failed);
    while (model.recent_failures.size() > kReclusterWindow) model.recent_failures.pop_front();

    if (added.config && added.config_score) {
        auto& stats = model.per_cluster[static_cast<std::size_t>(v.cluster_id)];
        if (!stats.best_score || *added.config_score > *stats.best_score) {
            stats.best_score = *added.config_score;
            stats.best_config = *added.config;
        }
    }
    if (should_recluster(model)) return fit(history, model.k, model.seed, model.theta);
    return model;
}

/// Purity of the clustering against family-1/family-2 workload labels:
/// points hinted with family 3 stay in the contingency table but do not
/// enter the purity ratio.
struct PurityReport {
    std::map<std::pair<int, std::string>, long> contingency;  // (cluster, family) -> count
    double purity = 0.0;
    long labeled_points = 0;
};

inline PurityReport family_purity(const ClusterModel& model,
                                  const std::vector<ProfileRecord>& records) {
    PurityReport report;
    const std::vector<int> assignment = assign_clusters(model, records);
    std::map<int, std::map<std::string, long>> by_cluster;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const std::string& fam = records[i].family_hint;
        if (fam.empty()) continue;
        ++report.contingency[{assignment[i], fam}];
        ++by_cluster[assignment[i]][fam];
    }
    long majority = 0;
    for (const auto& [cluster, fams] : by_cluster) {
        long best = 0;
        for (const auto& [fam, count] : fams)
            if (fam == "type1" || fam == "type2") best = std::max(best, count);
        majority += best;
    }
    for (const auto& [key, count] : report.contingency)
        if (key.second == "type1" || key.second == "type2") report.labeled_points += count;
    report.purity = report.labeled_points > 0
                        ? static_cast<double>(majority) / static_cast<double>(report.labeled_points)
                        : 0.0;
    return report;
}

/// Serialized authority over the cluster model and its history. Queries can
/// run from any thread; writes are serialized and swap the model atomically,
/// so readers never observe a partially refitted model.
class GroundTruthStore {
public:
    explicit GroundTruthStore(int k = 2, std::uint64_t seed = 42, double theta = 2.0)
        : k_(k), seed_(seed), theta_(theta) {}

    GroundTruthStore(GroundTruthStore&& other) noexcept {
        std::lock_guard lock(other.mutex_);
        k_ = other.k_;
        seed_ = other.seed_;
        theta_ = other.theta_;
        model_ = std::move(other.model_);
        history_ = std::move(other.history_);
    }

    GroundTruthStore& operator=(GroundTruthStore&& other) noexcept {
        if (this != &other) {
            std::scoped_lock lock(mutex_, other.mutex_);
            k_ = other.k_;
            seed_ = other.seed_;
            theta_ = other.theta_;
            model_ = std::move(other.model_);
            history_ = std::move(other.history_);
        }
        return *this;
    }

    GroundTruthStore(const GroundTruthStore&) = delete;
    GroundTruthStore& operator=(const GroundTruthStore&) = delete;

    bool fitted() const {
        std::lock_guard lock(mutex_);
        return model_.fitted();
    }

    ClusterModel model() const {
        std::lock_guard lock(mutex_);
        return model_;
    }

    std::vector<ProfileRecord> history() const {
        std::lock_guard lock(mutex_);
        return history_;
    }

    std::size_t history_size() const {
        std::lock_guard lock(mutex_);
        return history_.size();
    }

    /// No-reuse verdict while the model is unfitted.
    SimilarityVerdict query(const EpochProfile& profile) const {
        std::lock_guard lock(mutex_);
        if (!model_.fitted()) return SimilarityVerdict{};
        return similarity(profile, model_);
    }

    /// Appends a record; fits the first model as soon as k profiles exist,
    /// afterwards delegates to update() (which may re-cluster).
    void observe(ProfileRecord record) {
        std::lock_guard lock(mutex_);
        history_.push_back(std::move(record));
        if (!model_.fitted()) {
            if (history_.size() >= static_cast<std::size_t>(k_))
                model_ = fit(history_, k_, seed_, theta_);
            return;
        }
        model_ = update(std::move(model_), history_, history_.back());
    }

    void refit() {
        std::lock_guard lock(mutex_);
        model_ = fit(history_, k_, seed_, theta_);
    }

    void replace_history(std::vector<ProfileRecord> records, bool refit_now = true) {
        std::lock_guard lock(mutex_);
        history_ = std::move(records);
        if (refit_now && history_.size() >= static_cast<std::size_t>(k_))
            model_ = fit(history_, k_, seed_, theta_);
    }

    void save(const std::string& path) const;
    static GroundTruthStore load(const std::string& path);

    int k() const { return k_; }
    std::uint64_t seed() const { return seed_; }
    double theta() const { return theta_; }

private:
    int k_;
    std::uint64_t seed_;
    double theta_;
    ClusterModel model_;
    std::vector<ProfileRecord> history_;
    mutable std::mutex mutex_;
};

namespace detail {

inline nlohmann::json config_to_json(const SystemConfig& s) {
    return nlohmann::json{{"cores", s.cores}, {"memory_gb", s.memory_gb}};
}

inline SystemConfig config_from_json(const nlohmann::json& j) {
    return SystemConfig{j.at("cores").get<int>(), j.at("memory_gb").get<int>()};
}

}  // namespace detail

inline void GroundTruthStore::save(const std::string& path) const {
    std::lock_guard lock(mutex_);
    nlohmann::json j;
    j["format"] = "pipetune-groundtruth";
    j["version"] = 1;
    j["k"] = k_;
    j["seed"] = seed_;
    j["theta"] = theta_;
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& r : history_) {
        nlohmann::json e;
        e["values"] = r.profile.values;
        e["epoch_index"] = r.profile.epoch_index;
        if (!r.profile.workload_hint.empty()) e["workload_hint"] = r.profile.workload_hint;
        if (r.config) e["config"] = detail::config_to_json(*r.config);
        if (r.config_score) e["config_score"] = *r.config_score;
        if (!r.family_hint.empty()) e["family_hint"] = r.family_hint;
        hist.push_back(std::move(e));
    }
    j["history"] = std::move(hist);
    if (model_.fitted()) {
        nlohmann::json m;
        m["feature_mean"] = model_.feature_mean;
        m["feature_std"] = model_.feature_std;
        m["centroids"] = model_.centroids;
        m["inertia"] = model_.inertia;
        m["trained_on"] = model_.trained_on;
        m["novelty_count"] = model_.novelty_count;
        m["recent_failures"] = std::vector<bool>(model_.recent_failures.begin(),
                                                 model_.recent_failures.end());
        nlohmann::json clusters = nlohmann::json::array();
        for (const auto& s : model_.per_cluster) {
            nlohmann::json c;
            c["count"] = s.count;
            c["mean_sq_dist"] = s.mean_sq_dist;
            if (s.best_config) c["best_config"] = detail::config_to_json(*s.best_config);
            if (s.best_score) c["best_score"] = *s.best_score;
            clusters.push_back(std::move(c));
        }
        m["per_cluster"] = std::move(clusters);
        j["model"] = std::move(m);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write ground-truth file: " + path);
    out << j.dump() << '\n';
}

inline GroundTruthStore GroundTruthStore::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open ground-truth file: " + path);
    nlohmann::json j;
    in >> j;
    if (j.value("format", "") != "pipetune-groundtruth")
        throw std::runtime_error("not a ground-truth file: " + path);
    GroundTruthStore store(j.at("k").get<int>(), j.at("seed").get<std::uint64_t>(),
                           j.at("theta").get<double>());
    for (const auto& e : j.at("history")) {
        ProfileRecord r;
        const auto& vals = e.at("values");
        for (std::size_t i = 0; i < kEventCount; ++i) r.profile.values[i] = vals[i].get<double>();
        r.profile.epoch_index = e.value("epoch_index", 0);
        r.profile.workload_hint = e.value("workload_hint", "");
        if (e.contains("config")) r.config = detail::config_from_json(e["config"]);
        if (e.contains("config_score")) r.config_score = e["config_score"].get<double>();
        r.family_hint = e.value("family_hint", "");
        store.history_.push_back(std::move(r));
    }
    if (j.contains("model")) {
        const auto& m = j["model"];
        ClusterModel model;
        model.k = store.k_;
        model.seed = store.seed_;
        model.theta = store.theta_;
        for (std::size_t i = 0; i < kEventCount; ++i) {
            model.feature_mean[i] = m.at("feature_mean")[i].get<double>();
            model.feature_std[i] = m.at("feature_std")[i].get<double>();
        }
        for (const auto& c : m.at("centroids")) {
            std::array<double, kEventCount> row{};
            for (std::size_t i = 0; i < kEventCount; ++i) row[i] = c[i].get<double>();
            model.centroids.push_back(row);
        }
        model.inertia = m.at("inertia").get<double>();
        model.trained_on = m.at("trained_on").get<long>();
        model.novelty_count = m.value("novelty_count", 0);
        for (bool f : m.value("recent_failures", std::vector<bool>{}))
            model.recent_failures.push_back(f);
        for (const auto& c : m.at("per_cluster")) {
            ClusterStats s;
            s.count = c.at("count").get<long>();
            s.mean_sq_dist = c.at("mean_sq_dist").get<double>();
            if (c.contains("best_config")) s.best_config = detail::config_from_json(c["best_config"]);
            if (c.contains("best_score")) s.best_score = c["best_score"].get<double>();
            model.per_cluster.push_back(std::move(s));
        }
        store.model_ = std::move(model);
    }
    return store;
}

}  // namespace pipetune
