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

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pipetune/pipetune.hpp"
#include "pipetune/sweep.hpp"

namespace {

namespace fs = std::filesystem;
using namespace pipetune;

std::string data_dir_default() {
    if (const char* env = std::getenv("PIPETUNE_DATA_DIR")) return env;
    return "pipetune-data";
}

void print_outcome(const JobOutcome& o) {
    std::printf("%-28s mode=%-8s acc=%6.2f%%  train=%9.1fs  tuning=%10.1fs  energy=%12.0fJ\n",
                o.job_id.c_str(), to_string(o.mode), o.final_accuracy * 100.0,
                o.training_time_s, o.tuning_time_s, o.total_energy_j);
}

int cmd_run(const std::string& job_path, const std::string& mode, std::uint64_t seed,
            const std::string& out_dir, const std::string& data_dir,
            const std::string& groundtruth_path, const std::string& save_groundtruth) {
    if (!fs::exists(job_path)) {
        std::cerr << "error: job file not found: " << job_path << "\n";
        return 2;
    }
    HptJob job = load_job(job_path);
    if (!mode.empty()) job.mode = mode_from_string(mode);

    MetricStore store{fs::path(data_dir)};
    GroundTruthStore gt = groundtruth_path.empty()
                              ? GroundTruthStore{}
                              : GroundTruthStore::load(groundtruth_path);
    Orchestrator orch{RunConfig{}, &store, &gt};
    const JobOutcome outcome = orch.run_job(job, seed);

    fs::create_directories(out_dir);
    write_summary_csv({outcome}, fs::path(out_dir) / "summary.csv");
    write_epochs_csv(store, job.job_id, fs::path(out_dir) / "epochs.csv");
    write_trajectory_csv(store, fs::path(out_dir) / "trajectory.csv", job.job_id);
    store.close();
    if (!save_groundtruth.empty()) gt.save(save_groundtruth);
    print_outcome(outcome);
    std::printf("wrote %s/{summary,epochs,trajectory}.csv\n", out_dir.c_str());
    return 0;
}

int cmd_bench(const std::string& trace_path, double rate, int jobs, double unseen,
              const std::string& mode, std::uint64_t seed, const std::string& out_dir,
              const std::string& data_dir, const std::string& groundtruth_path, bool cold) {
    const TuningMode m = mode_from_string(mode.empty() ? "pipetune" : mode);
    std::vector<HptJob> queue;
    if (!trace_path.empty()) {
        queue = load_trace(trace_path, m);
    } else {
        TraceParams params;
        params.rate_per_s = rate;
        params.jobs = jobs;
        params.unseen_fraction = unseen;
        params.mode = m;
        queue = generate_trace(params, seed);
    }

    MetricStore store{fs::path(data_dir)};
    GroundTruthStore gt;
    if (!groundtruth_path.empty()) {
        gt = GroundTruthStore::load(groundtruth_path);
    } else if (m == TuningMode::PipeTune && !cold) {
        // Warm start over the bundled workloads; trace jobs marked unseen use
        // held-out variants that this sweep does not cover.
        gt = warm_start_store(default_workloads());
    }
    Orchestrator orch{RunConfig{}, &store, &gt};
    const QueueResult result = orch.run_queue(queue, seed);

    fs::create_directories(out_dir);
    write_response_csv(result.outcomes, fs::path(out_dir) / "response_times.csv");
    write_summary_csv(result.outcomes, fs::path(out_dir) / "summary.csv");
    if (trace_path.empty()) save_trace(queue, (fs::path(out_dir) / "trace.csv").string());
    store.close();

    double mean = 0.0;
    for (const JobOutcome& o : result.outcomes) {
        print_outcome(o);
        mean += o.response_time_s;
    }
    mean /= static_cast<double>(result.outcomes.size());
    std::printf("mean response time over %zu jobs: %.1f s\n", result.outcomes.size(), mean);
    std::printf("wrote %s/{response_times,summary}.csv\n", out_dir.c_str());
    return 0;
}

int cmd_groundtruth_fit(bool sweep, const std::string& in_model, const std::string& out_model,
                        int k, std::uint64_t seed, double theta, int reps) {
    if (sweep) {
        SweepOptions opt;
        opt.repetitions = reps;
        GroundTruthStore gt = warm_start_store(default_workloads(), k, seed, theta, opt);
        gt.save(out_model);
        std::printf("fitted k=%d over %zu sweep profiles -> %s\n", k, gt.history_size(),
                    out_model.c_str());
        return 0;
    }
    if (in_model.empty()) {
        std::cerr << "error: need --sweep or --model with recorded history\n";
        return 2;
    }
    GroundTruthStore gt = GroundTruthStore::load(in_model);
    if (gt.history_size() < static_cast<std::size_t>(k)) {
        std::cerr << "error: insufficient history (" << gt.history_size() << " profiles, k=" << k
                  << ")\n";
        return 1;
    }
    gt.refit();
    gt.save(out_model);
    std::printf("refitted %zu profiles -> %s\n", gt.history_size(), out_model.c_str());
    return 0;
}

int cmd_groundtruth_inspect(const std::string& model_path) {
    GroundTruthStore gt = GroundTruthStore::load(model_path);
    if (!gt.fitted()) {
        std::cerr << "error: " << model_path << " holds no fitted model\n";
        return 1;
    }
    const ClusterModel m = gt.model();
    std::printf("k=%d  trained_on=%ld  inertia=%.4f  threshold=%.4f\n", m.k, m.trained_on,
                m.inertia, m.theta * std::sqrt(m.inertia / static_cast<double>(m.trained_on)));
    for (std::size_t c = 0; c < m.per_cluster.size(); ++c) {
        const ClusterStats& s = m.per_cluster[c];
        std::printf("cluster %zu: count=%ld mean_sq_dist=%.4f", c, s.count, s.mean_sq_dist);
        if (s.best_config)
            std::printf(" best_config=(%d cores, %d GB) best_score=%.4f", s.best_config->cores,
                        s.best_config->memory_gb, s.best_score.value_or(0.0));
        std::printf("\n  centroid:");
        for (double v : m.centroids[c]) std::printf(" %.3f", v);
        std::printf("\n");
    }
    return 0;
}

int cmd_groundtruth_purity(const std::string& model_path) {
    GroundTruthStore gt = GroundTruthStore::load(model_path);
    if (!gt.fitted()) {
        std::cerr << "error: " << model_path << " holds no fitted model\n";
        return 1;
    }
    const auto report = family_purity(gt.model(), gt.history());
    std::printf("cluster,family,count\n");
    for (const auto& [key, count] : report.contingency)
        std::printf("%d,%s,%ld\n", key.first, key.second.c_str(), count);
    std::printf("purity (family 1/2 labels): %.4f over %ld labeled profiles\n", report.purity,
                report.labeled_points);
    return 0;
}

int cmd_workloads_export(const std::string& out_dir) {
    fs::create_directories(out_dir);
    for (const WorkloadSpec& w : default_workloads()) {
        const std::string file = w.model_id + "_" + w.dataset_id + ".json";
        save_calibration(w.calibration, (fs::path(out_dir) / file).string());
        std::printf("wrote %s (%s, %s)\n", file.c_str(), w.name().c_str(),
                    to_string(w.family));
    }
    return 0;
}

int cmd_report(const std::string& out_dir, const std::string& data_dir,
               const std::string& job_id) {
    MetricStore store{fs::path(data_dir)};
    fs::create_directories(out_dir);
    write_trajectory_csv(store, fs::path(out_dir) / "trajectory.csv", job_id);
    write_mode_summary_csv(store, fs::path(out_dir) / "mode_summary.csv");
    write_response_csv(outcomes_from_store(store), fs::path(out_dir) / "response_times.csv");
    std::printf("wrote %s/{trajectory,mode_summary,response_times}.csv\n", out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pipetune: pipelined hyper/system parameter tuning on a simulated cluster"};
    app.require_subcommand(1);
    std::string data_dir = data_dir_default();

    // run
    auto* run = app.add_subcommand("run", "run one tuning job");
    std::string run_job, run_mode, run_out = "out", run_gt, run_save_gt;
    std::uint64_t run_seed = 1;
    run->add_option("--job", run_job, "job file (JSON)")->required();
    run->add_option("--mode", run_mode, "v1|v2|pipetune (overrides job file)");
    run->add_option("--seed", run_seed, "random seed");
    run->add_option("--out", run_out, "output directory");
    run->add_option("--groundtruth", run_gt, "warm-start similarity model file");
    run->add_option("--save-groundtruth", run_save_gt, "write updated model here");
    run->add_option("--data", data_dir, "metric store directory (env PIPETUNE_DATA_DIR)");

    // bench
    auto* bench = app.add_subcommand("bench", "run a multi-tenant arrival trace");
    std::string bench_trace, bench_mode = "pipetune", bench_out = "out", bench_gt;
    double bench_rate = 1.0 / 1500.0, bench_unseen = 0.2;
    int bench_jobs = 20;
    std::uint64_t bench_seed = 1;
    bool bench_cold = false;
    bench->add_option("--trace", bench_trace, "arrival trace file (arrival_time_s,job_ref)");
    bench->add_option("--rate", bench_rate, "exponential arrival rate (jobs per second)");
    bench->add_option("--jobs", bench_jobs, "number of generated jobs");
    bench->add_option("--unseen", bench_unseen, "fraction of jobs on held-out workloads");
    bench->add_option("--mode", bench_mode, "v1|v2|pipetune");
    bench->add_option("--seed", bench_seed, "random seed");
    bench->add_option("--out", bench_out, "output directory");
    bench->add_option("--groundtruth", bench_gt, "warm-start similarity model file");
    bench->add_flag("--cold", bench_cold, "skip the default warm-start sweep");
    bench->add_option("--data", data_dir, "metric store directory (env PIPETUNE_DATA_DIR)");

    // groundtruth
    auto* gt = app.add_subcommand("groundtruth", "fit or inspect the similarity store");
    gt->require_subcommand(1);
    auto* gt_fit = gt->add_subcommand("fit", "fit a model (from --sweep or stored history)");
    bool fit_sweep = false;
    std::string fit_in, fit_out = "groundtruth.json";
    int fit_k = 2, fit_reps = 2;
    std::uint64_t fit_seed = 42;
    double fit_theta = 2.0;
    gt_fit->add_flag("--sweep", fit_sweep, "profile the bundled workloads (48 configs x 2 reps)");
    gt_fit->add_option("--model", fit_in, "existing store to refit");
    gt_fit->add_option("--out", fit_out, "output model file");
    gt_fit->add_option("--k", fit_k, "cluster count");
    gt_fit->add_option("--seed", fit_seed, "clustering seed");
    gt_fit->add_option("--theta", fit_theta, "similarity threshold scale");
    gt_fit->add_option("--reps", fit_reps, "sweep repetitions");
    auto* gt_inspect = gt->add_subcommand("inspect", "print centroids, inertia, best configs");
    std::string inspect_model;
    gt_inspect->add_option("--model", inspect_model, "model file")->required();
    auto* gt_purity = gt->add_subcommand("purity", "cluster-vs-family contingency table");
    std::string purity_model;
    gt_purity->add_option("--model", purity_model, "model file")->required();

    // workloads
    auto* wl = app.add_subcommand("workloads", "bundled workload utilities");
    wl->require_subcommand(1);
    auto* wl_list = wl->add_subcommand("list", "list bundled workloads");
    auto* wl_export = wl->add_subcommand("export", "write calibration files");
    std::string wl_out = "calibrations";
    wl_export->add_option("--out", wl_out, "output directory");

    // report
    auto* report = app.add_subcommand("report", "export CSV tables from the metric store");
    std::string report_out = "report", report_job;
    report->add_option("--out", report_out, "output directory");
    report->add_option("--job", report_job, "restrict trajectory to one job id");
    std::string report_format = "csv";
    report->add_option("--format", report_format, "output format (csv)");
    report->add_option("--data", data_dir, "metric store directory (env PIPETUNE_DATA_DIR)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage errors exit 2, help exits 0
    }

    try {
        if (run->parsed())
            return cmd_run(run_job, run_mode, run_seed, run_out, data_dir, run_gt, run_save_gt);
        if (bench->parsed())
            return cmd_bench(bench_trace, bench_rate, bench_jobs, bench_unseen, bench_mode,
                             bench_seed, bench_out, data_dir, bench_gt, bench_cold);
        if (gt->parsed()) {
            if (gt_fit->parsed())
                return cmd_groundtruth_fit(fit_sweep, fit_in, fit_out, fit_k, fit_seed, fit_theta,
                                           fit_reps);
            if (gt_inspect->parsed()) return cmd_groundtruth_inspect(inspect_model);
            if (gt_purity->parsed()) return cmd_groundtruth_purity(purity_model);
        }
        if (wl->parsed()) {
            if (wl_list->parsed()) {
                for (const WorkloadSpec& w : default_workloads())
                    std::printf("%-24s family=%s samples_per_epoch=%ld\n", w.name().c_str(),
                                to_string(w.family), w.samples_per_epoch);
                return 0;
            }
            if (wl_export->parsed()) return cmd_workloads_export(wl_out);
        }
        if (report->parsed()) {
            if (report_format != "csv") {
                std::cerr << "error: unsupported format: " << report_format << "\n";
                return 2;
            }
            return cmd_report(report_out, data_dir, report_job);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
