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

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pipetune/core.hpp"

namespace pipetune {

/// One value of one named series at one virtual timestamp. (series, tags, t)
/// identifies the point; appending the identical point again is a no-op,
/// appending the same key with a new value replaces it.
struct SeriesPoint {
    std::string series;
    std::map<std::string, std::string> tags;
    double t = 0.0;
    double value = 0.0;
};

/// Embedded time-series store backing reports and ground-truth history.
/// In-memory index over an append-only JSON-lines log (one object per line);
/// flush() is the durability point, close()/destruction compacts the log
/// when replaced points have made it redundant. Concurrent appenders and
/// readers are serialized on one mutex; query results depend only on the
/// set of appended points, never on interleaving.
class MetricStore {
public:
    MetricStore() = default;

    /// File-backed store rooted at `dir`; replays dir/points.log if present.
    explicit MetricStore(const std::filesystem::path& dir) : dir_(dir) {
        std::filesystem::create_directories(dir);
        log_path_ = dir / "points.log";
        if (std::filesystem::exists(log_path_)) replay();
    }

    ~MetricStore() {
        try {
            close();
        } catch (...) {
        }
    }

    MetricStore(const MetricStore&) = delete;
    MetricStore& operator=(const MetricStore&) = delete;

    void append(const SeriesPoint& p) {
        std::lock_guard lock(mutex_);
        append_locked(p);
    }

    void append_batch(std::span<const SeriesPoint> points) {
        std::lock_guard lock(mutex_);
        for (const SeriesPoint& p : points) append_locked(p);
    }

    /// All points of `series` whose tags include `tag_filter` and whose time
    /// is within [t0, t1], in ascending time order.
    std::vector<SeriesPoint> query_range(const std::string& series,
                                         const std::map<std::string, std::string>& tag_filter,
                                         double t0, double t1) const {
        if (t0 > t1) throw std::invalid_argument("query_range: t0 > t1");
        std::lock_guard lock(mutex_);
        std::vector<SeriesPoint> out;
        auto it = data_.find(series);
        if (it == data_.end()) return out;
        for (const auto& [key, value] : it->second) {
            if (key.first < t0) continue;
            if (key.first > t1) break;
            if (!matches(key.second, tag_filter)) continue;
            out.push_back(SeriesPoint{series, parse_tags(key.second), key.first, value});
        }
        return out;
    }

    std::vector<std::string> series_names() const {
        std::lock_guard lock(mutex_);
        std::vector<std::string> names;
        names.reserve(data_.size());
        for (const auto& [name, _] : data_) names.push_back(name);
        return names;
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        std::size_t n = 0;
        for (const auto& [_, series] : data_) n += series.size();
        return n;
    }

    /// Writes everything appended since the last flush to the log.
    void flush() {
        std::lock_guard lock(mutex_);
        flush_locked();
    }

    /// Flush plus log compaction when overwrites made lines redundant.
    void close() {
        std::lock_guard lock(mutex_);
        if (dir_.empty()) return;
        flush_locked();
        if (dirty_log_) compact_locked();
    }

private:
    using SeriesKey = std::pair<double, std::string>;  // (t, serialized tags)
    using SeriesMap = std::map<SeriesKey, double>;

    static std::string serialize_tags(const std::map<std::string, std::string>& tags) {
        std::string out;
        for (const auto& [k, v] : tags) {
            if (!out.empty()) out += ',';
            out += k;
            out += '=';
            out += v;
        }
        return out;
    }

    static std::map<std::string, std::string> parse_tags(const std::string& s) {
        std::map<std::string, std::string> tags;
        std::size_t pos = 0;
        while (pos < s.size()) {
            const std::size_t comma = s.find(',', pos);
            const std::string item = s.substr(pos, comma == std::string::npos ? comma : comma - pos);
            const std::size_t eq = item.find('=');
            if (eq != std::string::npos) tags[item.substr(0, eq)] = item.substr(eq + 1);
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        return tags;
    }

    static bool matches(const std::string& serialized,
                        const std::map<std::string, std::string>& filter) {
        if (filter.empty()) return true;
        const auto tags = parse_tags(serialized);
        for (const auto& [k, v] : filter) {
            auto it = tags.find(k);
            if (it == tags.end() || it->second != v) return false;
        }
        return true;
    }

    static void check_series_name(const std::string& name) {
        if (name.empty()) throw std::invalid_argument("metric store: empty series name");
        for (char c : name) {
            const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                            (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
            if (!ok) throw std::invalid_argument("metric store: malformed series name: " + name);
        }
    }

    void append_locked(const SeriesPoint& p) {
        check_series_name(p.series);
        const SeriesKey key{p.t, serialize_tags(p.tags)};
        auto& series = data_[p.series];
        auto it = series.find(key);
        if (it != series.end()) {
            if (it->second == p.value) return;  // exact duplicate
            it->second = p.value;               // same key, new value
            dirty_log_ = true;
        } else {
            series.emplace(key, p.value);
        }
        pending_.push_back(p);
    }

    void flush_locked() {
        if (dir_.empty() || pending_.empty()) {
            pending_.clear();
            return;
        }
        std::ofstream out(log_path_, std::ios::app);
        if (!out) throw std::runtime_error("metric store: cannot write " + log_path_.string());
        for (const SeriesPoint& p : pending_) out << to_line(p) << '\n';
        pending_.clear();
    }

    void compact_locked() {
        std::ofstream out(log_path_, std::ios::trunc);
        if (!out) throw std::runtime_error("metric store: cannot rewrite " + log_path_.string());
        for (const auto& [name, series] : data_)
            for (const auto& [key, value] : series)
                out << to_line(SeriesPoint{name, parse_tags(key.second), key.first, value}) << '\n';
        dirty_log_ = false;
    }

    static std::string to_line(const SeriesPoint& p) {
        nlohmann::json j;
        j["s"] = p.series;
        j["g"] = p.tags;
        j["t"] = p.t;
        j["v"] = p.value;
        return j.dump();
    }

    void replay() {
        std::ifstream in(log_path_);
        std::string line;
        std::size_t lines = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            ++lines;
            const nlohmann::json j = nlohmann::json::parse(line);
            SeriesPoint p;
            p.series = j.at("s").get<std::string>();
            p.tags = j.at("g").get<std::map<std::string, std::string>>();
            p.t = j.at("t").get<double>();
            p.value = j.at("v").get<double>();
            const SeriesKey key{p.t, serialize_tags(p.tags)};
            data_[p.series][key] = p.value;
        }
        std::size_t points = 0;
        for (const auto& [_, series] : data_) points += series.size();
        dirty_log_ = lines != points;
    }

    std::filesystem::path dir_;
    std::filesystem::path log_path_;
    std::map<std::string, SeriesMap> data_;
    std::vector<SeriesPoint> pending_;
    bool dirty_log_ = false;
    mutable std::mutex mutex_;
};

}  // namespace pipetune
