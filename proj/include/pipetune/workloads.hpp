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

#include <stdexcept>
#include <string>
#include <vector>

#include "pipetune/simulator.hpp"

namespace pipetune {

/// Bundled workload catalog. Six invented workloads cover the three job
/// families: two image-classification jobs sharing a model (family 1), two
/// text jobs sharing a dataset (family 2), and two short-epoch single-node
/// kernels (family 3, roughly 10x shorter epochs).
///
/// Event signatures are generated, not measured: every signature is
///   magnitude_i * (1 + 0.6 * family_dir_i + 0.3 * amplitude * own_dir_i)
/// where family_dir is a per-family +-1 pattern and own_dir is a per-model
/// (or per-dataset) direction in [-1, 1]. Sharing a model id means sharing
/// the model signature exactly. Family 3's pattern reuses 70% of family 2's
/// events so that a k=2 clustering splits family 1 from families 2+3.

namespace detail {

inline double family_direction(WorkloadFamily f, std::size_t event) {
    auto rademacher = [](std::uint64_t seed) {
        Rng rng(seed);
        return rng.uniform01() < 0.5 ? -1.0 : 1.0;
    };
    switch (f) {
        case WorkloadFamily::TypeI:
            return rademacher(hash_mix(fnv1a("family-one"), event));
        case WorkloadFamily::TypeII:
            return rademacher(hash_mix(fnv1a("family-two"), event));
        case WorkloadFamily::TypeIII: {
            Rng pick(hash_mix(fnv1a("family-three-pick"), event));
            if (pick.uniform01() < 0.7) return rademacher(hash_mix(fnv1a("family-two"), event));
            return rademacher(hash_mix(fnv1a("family-three"), event));
        }
    }
    return 1.0;
}

inline std::array<double, kEventCount> make_signature(const std::string& id, WorkloadFamily f,
                                                      const char* kind, double amplitude) {
    std::array<double, kEventCount> sig{};
    for (std::size_t e = 0; e < kEventCount; ++e) {
        const double m = event_magnitude(e);
        const double fam = family_direction(f, e);
        const double own = signed_unit(hash_mix(fnv1a(id), fnv1a(kind), e));
        sig[e] = std::max(0.0, m * (1.0 + 0.6 * fam + 0.3 * amplitude * own));
    }
    return sig;
}

}  // namespace detail

inline std::array<double, kEventCount> model_signature(const std::string& model_id,
                                                       WorkloadFamily family,
                                                       double amplitude = 1.0) {
    return detail::make_signature(model_id, family, "model-dir", amplitude);
}

inline std::array<double, kEventCount> dataset_signature(const std::string& dataset_id,
                                                         WorkloadFamily family,
                                                         double amplitude = 1.0) {
    return detail::make_signature(dataset_id, family, "dataset-dir", amplitude);
}

namespace detail {

struct WorkloadParams {
    const char* model;
    const char* dataset;
    long samples;
    WorkloadFamily family;
    double kappa, a_max0, beta_batch, lr_opt, tau, spill, p_idle, p_core, noise;
};

inline WorkloadSpec build_workload(const WorkloadParams& p, double model_amp = 1.0,
                                   double dataset_amp = 1.0) {
    WorkloadSpec w;
    w.model_id = p.model;
    w.dataset_id = p.dataset;
    w.samples_per_epoch = p.samples;
    w.family = p.family;
    SimCalibration& c = w.calibration;
    c.kappa = p.kappa;
    c.sigma = 3.0 * p.kappa;  // sync-bound at small batches, compute-bound at large
    c.a_max0 = p.a_max0;
    c.beta_batch = p.beta_batch;
    c.lr_opt = p.lr_opt;
    c.lr_penalty = 0.05;
    c.dropout_penalty = 0.08;
    c.tau = p.tau;
    c.mem_floor_gb = 8.0;
    c.spill_factor = p.spill;
    c.p_idle_w = p.p_idle;
    c.p_core_w = p.p_core;
    c.noise_scale = p.noise;
    c.event_signature_model = model_signature(p.model, p.family, model_amp);
    c.event_signature_dataset = dataset_signature(p.dataset, p.family, dataset_amp);
    validate(c);
    return w;
}

}  // namespace detail

inline const std::vector<WorkloadSpec>& default_workloads() {
    static const std::vector<WorkloadSpec> all = [] {
        using F = WorkloadFamily;
        std::vector<detail::WorkloadParams> params = {
            // model, dataset, samples, family, kappa, a_max0, beta, lr_opt, tau, spill, p_idle, p_core, noise
            {"lenet5", "mnist", 60000, F::TypeI, 0.0016, 0.92, 0.025, 0.01, 8.0, 1.50, 50.0, 10.0, 0.020},
            {"lenet5", "fashion-mnist", 60000, F::TypeI, 0.0019, 0.90, 0.022, 0.01, 9.0, 1.45, 50.0, 10.0, 0.020},
            {"cnn", "news20", 11307, F::TypeII, 0.0072, 0.72, 0.020, 0.005, 10.0, 1.50, 50.0, 10.0, 0.025},
            {"lstm", "news20", 11307, F::TypeII, 0.0110, 0.70, 0.018, 0.005, 12.0, 1.40, 50.0, 10.0, 0.025},
            {"jacobi", "rodinia", 1650, F::TypeIII, 0.0055, 0.85, 0.020, 0.02, 6.0, 1.50, 60.0, 8.0, 0.030},
            {"bfs", "rodinia", 1650, F::TypeIII, 0.0042, 0.83, 0.020, 0.02, 6.0, 1.45, 60.0, 8.0, 0.030},
        };
        std::vector<WorkloadSpec> out;
        out.reserve(params.size());
        for (const auto& p : params) out.push_back(detail::build_workload(p));
        return out;
    }();
    return all;
}

/// Looks up a bundled workload by "model/dataset" name or by model id.
inline const WorkloadSpec& find_workload(const std::string& name) {
    for (const WorkloadSpec& w : default_workloads())
        if (w.name() == name || w.model_id + "_" + w.dataset_id == name) return w;
    throw std::invalid_argument("unknown bundled workload: " + name);
}

/// A workload of the given family that is absent from the bundled set and
/// deliberately far from its family's bundled members (own-direction
/// amplitude 4 instead of 1), so a model trained on the defaults does not
/// recognize it.
inline WorkloadSpec unseen_variant(WorkloadFamily family, int index) {
    using F = WorkloadFamily;
    const std::string tag = "x" + std::to_string(index);
    switch (family) {
        case F::TypeI: {
            detail::WorkloadParams p{"lenet5", "", 60000, F::TypeI, 0.0018,
                                     0.91, 0.024, 0.01, 8.5, 1.48, 50.0, 10.0, 0.020};
            std::string ds = "digits-" + tag;
            p.dataset = ds.c_str();
            return detail::build_workload(p, 1.0, 4.0);
        }
        case F::TypeII: {
            detail::WorkloadParams p{"", "news20", 11307, F::TypeII, 0.0090,
                                     0.71, 0.019, 0.005, 11.0, 1.45, 50.0, 10.0, 0.025};
            std::string model = "gru-" + tag;
            p.model = model.c_str();
            return detail::build_workload(p, 4.0, 1.0);
        }
        case F::TypeIII: {
            detail::WorkloadParams p{"", "rodinia", 1650, F::TypeIII, 0.0050,
                                     0.84, 0.020, 0.02, 6.0, 1.48, 60.0, 8.0, 0.030};
            std::string model = "sprint-" + tag;
            p.model = model.c_str();
            return detail::build_workload(p, 4.0, 1.0);
        }
    }
    throw std::logic_error("unseen_variant: bad family");
}

}  // namespace pipetune
