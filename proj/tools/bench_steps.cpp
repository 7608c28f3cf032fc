// Copyright 2026 The coalsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Times the OpenMP step loop against the serial reference path on one
// scenario and checks that the two produce identical records.

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "coalsim/harness.hpp"

using namespace coalsim;

namespace {

ScenarioConfig bench_config(double horizon_hours) {
    ScenarioConfig cfg;
    cfg.user_mix = {
        {"base", 0.0122, 0.0175, 0.2},
        {"standard", 0.384, 0.035, 0.6},
        {"premium", 10.0, 0.07, 0.2},
    };
    const double means[5] = {0.316, 0.221, 0.143, 0.240, 0.218};
    for (int i = 0; i < 5; ++i) {
        NetworkOperator op;
        op.id = "NO" + std::to_string(i + 1);
        op.bs = {op.id + "-bs", 100.0, 0.551, 0.00146, 0.12};
        op.user_mix = cfg.user_mix;
        op.coalition_cost_rate = 0.01;
        cfg.operators.push_back(op);
        cfg.profiles.push_back(synthesize_profile(means[i], 1000 + i));
    }
    cfg.step_hours = 1.0;
    cfg.horizon_hours = horizon_hours;
    cfg.seed = 7;
    return cfg;
}

double run_timed(const ScenarioConfig& cfg, bool parallel, ScenarioResult& out) {
    auto t0 = std::chrono::steady_clock::now();
    out = run_scenario(cfg, parallel);
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

bool same_results(const ScenarioResult& a, const ScenarioResult& b) {
    return steps_jsonl(a) == steps_jsonl(b) && shifts_jsonl(a) == shifts_jsonl(b);
}

} // namespace

int main(int argc, char** argv) {
    double horizon = argc > 1 ? std::atof(argv[1]) : 24.0;
    ScenarioConfig cfg = bench_config(horizon);

    ScenarioResult serial, parallel;
    double t_serial = run_timed(cfg, false, serial);
    double t_parallel = run_timed(cfg, true, parallel);

    std::printf("steps: %d\n", cfg.executions());
    std::printf("serial reference: %8.3f s\n", t_serial);
    std::printf("parallel:         %8.3f s  (speedup %.2fx)\n", t_parallel,
                t_serial / t_parallel);

    if (!same_results(serial, parallel)) {
        std::printf("FAIL: parallel results differ from the serial reference\n");
        return 1;
    }
    std::printf("parallel results match the serial reference\n");
    return 0;
}
