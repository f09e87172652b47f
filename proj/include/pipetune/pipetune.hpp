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

#include "pipetune/calibration.hpp"
#include "pipetune/core.hpp"
#include "pipetune/energy.hpp"
#include "pipetune/events.hpp"
#include "pipetune/ground_truth.hpp"
#include "pipetune/hpo.hpp"
#include "pipetune/job_io.hpp"
#include "pipetune/metric_store.hpp"
#include "pipetune/orchestrator.hpp"
#include "pipetune/probing.hpp"
#include "pipetune/profiler.hpp"
#include "pipetune/report.hpp"
#include "pipetune/rng.hpp"
#include "pipetune/simulator.hpp"
#include "pipetune/workloads.hpp"
