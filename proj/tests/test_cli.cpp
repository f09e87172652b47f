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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using Catch::Matchers::ContainsSubstring;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() /
                     ("pipetune_cli_" + std::to_string(std::random_device{}()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& sub) const { return (path / sub).string(); }
};

struct RunResult {
    int exit_code;
    std::string output;
};

/// Runs the CLI with stdout+stderr captured.
RunResult run_cli(const std::string& args, const TempDir& dir) {
    const std::string log = dir.str("cli_output_" + std::to_string(std::rand()) + ".txt");
    const std::string cmd = std::string(PIPETUNE_CLI_PATH) + " " + args + " > " + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream buf;
    buf << in.rdbuf();
    return {WEXITSTATUS(status), buf.str()};
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

const std::string kJobsDir = PIPETUNE_JOBS_DIR;

/// A reduced copy of a bundled job so CLI tests stay fast.
std::string write_small_job(const TempDir& dir, const std::string& name = "small.json") {
    const std::string path = dir.str(name);
    std::ofstream out(path);
    out << R"({
      "job_id": "cli-small",
      "workload": "jacobi/rodinia",
      "initial_system": { "cores": 16, "memory_gb": 4 },
      "search": {
        "algorithm": "hyperband",
        "max_epochs_per_trial": 9,
        "halving": 3,
        "space": {
          "batch_size": [32, 64, 256, 1024],
          "dropout_rate": [0.0, 0.25],
          "embedding_dims": [100],
          "learning_rate": [0.005, 0.01, 0.05],
          "num_epochs": [10, 20]
        }
      }
    })";
    return path;
}

}  // namespace

TEST_CASE("run: missing job file exits 2 and names the path") {
    TempDir dir;
    const RunResult r = run_cli("run --job /no/such/job.json --out " + dir.str("out"), dir);
    CHECK(r.exit_code == 2);
    CHECK_THAT(r.output, ContainsSubstring("/no/such/job.json"));
}

TEST_CASE("usage errors exit 2") {
    TempDir dir;
    CHECK(run_cli("run", dir).exit_code == 2);              // missing --job
    CHECK(run_cli("frobnicate", dir).exit_code == 2);       // unknown subcommand
    CHECK(run_cli("", dir).exit_code == 2);                 // no subcommand
    CHECK(run_cli("--help", dir).exit_code == 0);
}

TEST_CASE("run is deterministic under a fixed seed") {
    TempDir dir;
    const std::string job = write_small_job(dir);
    const std::string base = "run --job " + job + " --mode pipetune --seed 7 --data ";
    const RunResult r1 =
        run_cli(base + dir.str("d1") + " --out " + dir.str("o1"), dir);
    const RunResult r2 =
        run_cli(base + dir.str("d2") + " --out " + dir.str("o2"), dir);
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);
    for (const char* f : {"summary.csv", "epochs.csv", "trajectory.csv"}) {
        INFO(f);
        CHECK(read_file(dir.path / "o1" / f) == read_file(dir.path / "o2" / f));
        CHECK_FALSE(read_file(dir.path / "o1" / f).empty());
    }
}

TEST_CASE("csv outputs carry the schema marker and headers") {
    TempDir dir;
    const std::string job = write_small_job(dir);
    const RunResult r = run_cli("run --job " + job + " --mode v1 --seed 1 --data " +
                                    dir.str("data") + " --out " + dir.str("out"),
                               dir);
    REQUIRE(r.exit_code == 0);
    CHECK(first_line(dir.path / "out" / "summary.csv") == "# pipetune-csv v1");
    CHECK_THAT(read_file(dir.path / "out" / "summary.csv"),
               ContainsSubstring("job,mode,workload"));
    CHECK_THAT(read_file(dir.path / "out" / "epochs.csv"),
               ContainsSubstring("t,job,mode,trial,epoch,duration_s,accuracy,energy_j"));
}

TEST_CASE("trajectory best-accuracy column is nondecreasing") {
    TempDir dir;
    const std::string job = write_small_job(dir);
    const RunResult r = run_cli("run --job " + job + " --mode v1 --seed 3 --data " +
                                    dir.str("data") + " --out " + dir.str("out"),
                               dir);
    REQUIRE(r.exit_code == 0);
    std::ifstream in(dir.path / "out" / "trajectory.csv");
    std::string line;
    std::getline(in, line);  // marker
    std::getline(in, line);  // header
    double prev = -1.0;
    int rows = 0;
    while (std::getline(in, line)) {
        const auto last_comma = line.rfind(',');
        const double v = std::stod(line.substr(last_comma + 1));
        CHECK(v >= prev);
        prev = v;
        ++rows;
    }
    CHECK(rows > 0);
}

TEST_CASE("groundtruth fit/inspect/purity") {
    TempDir dir;
    const std::string model = dir.str("model.json");
    const RunResult fit = run_cli("groundtruth fit --sweep --reps 1 --out " + model, dir);
    REQUIRE(fit.exit_code == 0);
    CHECK_THAT(fit.output, ContainsSubstring("288 sweep profiles"));

    const RunResult inspect = run_cli("groundtruth inspect --model " + model, dir);
    CHECK(inspect.exit_code == 0);
    CHECK_THAT(inspect.output, ContainsSubstring("k=2"));
    CHECK_THAT(inspect.output, ContainsSubstring("best_config"));

    const RunResult purity = run_cli("groundtruth purity --model " + model, dir);
    CHECK(purity.exit_code == 0);
    CHECK_THAT(purity.output, ContainsSubstring("purity"));
    CHECK_THAT(purity.output, ContainsSubstring("cluster,family,count"));

    const RunResult missing = run_cli("groundtruth inspect --model /no/model.json", dir);
    CHECK(missing.exit_code == 1);
}

TEST_CASE("bench with one job: mean response equals its tuning time") {
    TempDir dir;
    const RunResult r = run_cli("bench --jobs 1 --rate 0.001 --mode v1 --seed 5 --data " +
                                    dir.str("data") + " --out " + dir.str("out"),
                               dir);
    REQUIRE(r.exit_code == 0);
    CHECK_THAT(r.output, ContainsSubstring("mean response time over 1 jobs"));
    const std::string csv = read_file(dir.path / "out" / "response_times.csv");
    CHECK_THAT(csv, ContainsSubstring("mean_overall"));
    CHECK(fs::exists(dir.path / "out" / "trace.csv"));

    // The single job never queues: response == tuning time in the summary.
    std::istringstream in(read_file(dir.path / "out" / "summary.csv"));
    std::string line, header;
    std::getline(in, line);    // marker
    std::getline(in, header);  // header
    std::getline(in, line);
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) cols.push_back(item);
    const double tuning = std::stod(cols[6]);
    const double response = std::stod(cols[8]);
    CHECK(tuning == response);
}

TEST_CASE("report emits CSVs; empty store gives headers only") {
    TempDir dir;
    const RunResult empty = run_cli("report --data " + dir.str("nodata") + " --out " +
                                        dir.str("empty_report"),
                                    dir);
    REQUIRE(empty.exit_code == 0);
    const std::string traj = read_file(dir.path / "empty_report" / "trajectory.csv");
    CHECK(traj == "# pipetune-csv v1\ntuning_time_s,job,mode,best_accuracy\n");

    const std::string job = write_small_job(dir);
    REQUIRE(run_cli("run --job " + job + " --mode v1 --seed 2 --data " + dir.str("data") +
                        " --out " + dir.str("o"),
                    dir)
                .exit_code == 0);
    REQUIRE(run_cli("run --job " + job + " --mode pipetune --seed 2 --data " + dir.str("data") +
                        " --out " + dir.str("o2"),
                    dir)
                .exit_code == 0);
    const RunResult rep =
        run_cli("report --data " + dir.str("data") + " --out " + dir.str("report"), dir);
    REQUIRE(rep.exit_code == 0);
    const std::string summary = read_file(dir.path / "report" / "mode_summary.csv");
    CHECK_THAT(summary, ContainsSubstring(",v1,"));
    CHECK_THAT(summary, ContainsSubstring(",pipetune,"));
    const std::string traj2 = read_file(dir.path / "report" / "trajectory.csv");
    CHECK_THAT(traj2, ContainsSubstring("cli-small"));
}

TEST_CASE("workloads list and export") {
    TempDir dir;
    const RunResult list = run_cli("workloads list", dir);
    REQUIRE(list.exit_code == 0);
    CHECK_THAT(list.output, ContainsSubstring("lenet5/mnist"));
    CHECK_THAT(list.output, ContainsSubstring("family=type3"));

    const RunResult exp = run_cli("workloads export --out " + dir.str("cal"), dir);
    REQUIRE(exp.exit_code == 0);
    CHECK(fs::exists(dir.path / "cal" / "lenet5_mnist.json"));
    CHECK(fs::exists(dir.path / "cal" / "bfs_rodinia.json"));
}

TEST_CASE("job referencing a calibration file by path") {
    TempDir dir;
    REQUIRE(run_cli("workloads export --out " + dir.str("cal"), dir).exit_code == 0);
    const std::string path = dir.str("custom.json");
    {
        std::ofstream out(path);
        out << R"({
          "job_id": "custom",
          "workload": {
            "model_id": "lenet5", "dataset_id": "mnist",
            "samples_per_epoch": 60000, "family": "type1",
            "calibration": "cal/lenet5_mnist.json"
          },
          "search": {
            "algorithm": "grid",
            "space": {
              "batch_size": [64], "dropout_rate": [0.25], "embedding_dims": [100],
              "learning_rate": [0.01], "num_epochs": [10]
            }
          }
        })";
    }
    const RunResult r = run_cli("run --job " + path + " --mode v1 --seed 1 --data " +
                                    dir.str("data") + " --out " + dir.str("out"),
                               dir);
    REQUIRE(r.exit_code == 0);
    CHECK_THAT(r.output, ContainsSubstring("custom"));
}
