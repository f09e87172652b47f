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

#include <set>

#include "pipetune/core.hpp"
#include "pipetune/rng.hpp"

using namespace pipetune;

TEST_CASE("system grid enumerates the 3x4 cross product in order") {
    const auto grid = enumerate_system_grid();
    REQUIRE(grid.size() == 12);
    CHECK(grid.front() == SystemConfig{4, 4});
    CHECK(grid.back() == SystemConfig{16, 32});
    CHECK(std::count(grid.begin(), grid.end(), SystemConfig{16, 32}) == 1);

    std::set<std::pair<int, int>> seen;
    for (const auto& s : grid) seen.insert({s.cores, s.memory_gb});
    CHECK(seen.size() == 12);  // duplicate-free
    CHECK(std::is_sorted(grid.begin(), grid.end()));
}

TEST_CASE("grid enumeration is deterministic") {
    CHECK(enumerate_system_grid() == enumerate_system_grid());
}

TEST_CASE("score applies the objective") {
    TrialResult r;
    r.final_accuracy = 0.5;
    r.training_time_s = 100.0;
    CHECK(score(r, {ObjectiveKind::MaxAccuracy}) == 0.5);

    r.final_accuracy = 0.0;
    CHECK(score(r, {ObjectiveKind::MaxAccuracyPerSecond}) == 0.0);

    r.final_accuracy = 0.9147;
    r.training_time_s = 272.0;
    CHECK_THAT(score(r, {ObjectiveKind::MaxAccuracyPerSecond}),
               Catch::Matchers::WithinAbs(0.003363, 1.0e-6));
    CHECK(score(r, {ObjectiveKind::MaxAccuracyPerSecond}) == 0.9147 / 272.0);
}

TEST_CASE("score rejects zero training time under the ratio objective") {
    TrialResult r;
    r.final_accuracy = 0.9;
    r.training_time_s = 0.0;
    CHECK_THROWS_AS(score(r, {ObjectiveKind::MaxAccuracyPerSecond}), std::domain_error);
}

TEST_CASE("score monotonicity in accuracy and time") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        TrialResult lo, hi;
        lo.training_time_s = hi.training_time_s = rng.uniform(1.0, 1000.0);
        lo.final_accuracy = rng.uniform(0.0, 0.5);
        hi.final_accuracy = lo.final_accuracy + rng.uniform(0.01, 0.5);
        CHECK(score(hi, {ObjectiveKind::MaxAccuracy}) > score(lo, {ObjectiveKind::MaxAccuracy}));
        CHECK(score(hi, {ObjectiveKind::MaxAccuracyPerSecond}) >
              score(lo, {ObjectiveKind::MaxAccuracyPerSecond}));

        TrialResult slow = hi;
        slow.training_time_s = hi.training_time_s + rng.uniform(1.0, 100.0);
        CHECK(score(slow, {ObjectiveKind::MaxAccuracyPerSecond}) <
              score(hi, {ObjectiveKind::MaxAccuracyPerSecond}));
    }
}

TEST_CASE("validate reports every out-of-range field") {
    HyperParams ok{32, 0.0, 50, 0.001, 10};
    CHECK(validate(ok).empty());

    HyperParams upper{1024, 0.5, 300, 0.1, 100};
    CHECK(validate(upper).empty());

    HyperParams big = ok;
    big.batch_size = 2048;
    auto v = validate(big);
    REQUIRE(v.size() == 1);
    CHECK(v[0].field == "batch_size");

    HyperParams drop = ok;
    drop.dropout_rate = 0.6;
    v = validate(drop);
    REQUIRE(v.size() == 1);
    CHECK(v[0].field == "dropout_rate");

    HyperParams all_bad{1, -0.1, 10, 0.5, 500};
    CHECK(validate(all_bad).size() == 5);
}
