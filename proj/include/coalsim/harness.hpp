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

#ifndef COALSIM_HARNESS_HPP
#define COALSIM_HARNESS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "coalsim/game.hpp"
#include "coalsim/trace.hpp"

namespace coalsim {

enum class RpMetric { ratio_of_sums, literal };
enum class StableSetStrategy { schedules, exhaustive };

struct ScenarioConfig {
    std::vector<NetworkOperator> operators;
    std::vector<LoadProfile> profiles; // parallel to operators
    std::vector<UserClass> user_mix;   // shared mix (probabilities sum to 1)
    double step_hours = 1.0;
    double horizon_hours = 168.0;
    std::uint64_t seed = 1;
    RpMetric rp_metric = RpMetric::ratio_of_sums;
    StableSetStrategy stable_set = StableSetStrategy::schedules;

    int executions() const; // A = ceil(horizon / step)
    void check() const;
};

/// Per-step ledger entry; everything the metrics aggregate from, plus
/// what an offline stability check needs to rebuild the step.
struct StepRecord {
    int step = 0;
    std::vector<std::vector<int>> class_counts; // [operator][mix class]
    std::vector<double> baseline;               // standalone optimum per operator
    std::vector<std::uint8_t> baseline_on;      // standalone BS on flag
    std::vector<int> baseline_served;           // standalone served users (rate > 0)
    std::vector<Partition> stable_partitions;   // deduplicated outcomes
    Partition canonical;                        // identity-schedule outcome
    std::vector<double> payoff;                 // averaged over stable_partitions
    std::vector<std::uint8_t> on_flag;          // from the canonical outcome
    std::vector<int> served;                    // users served by each BS, canonical
    std::vector<ShiftRecord> shifts;            // canonical run's shift log
    bool nash_stable = true;                    // history-aware certificate
    bool nash_stable_history_free = true;       // diagnostic only
    std::vector<Partition> exhaustive_stable;   // only under the exhaustive strategy
};

struct OperatorMetrics {
    double rp = 0.0;
    double on_ratio = 0.0;
    double load_deviation = 0.0;
};

struct ScenarioResult {
    std::vector<OperatorMetrics> metrics;
    std::vector<StepRecord> steps;
};

/// Users present at one subinterval: peak load -> head count per
/// operator, classes dealt round-robin from a seeded starting class.
StepContext populate_step(const ScenarioConfig& cfg,
                          const std::vector<StepLoad>& step_loads,
                          int step_index);

/// Runs the whole horizon. Steps are independent; with parallel = true
/// they run under OpenMP, and the result is identical to the serial
/// reference path.
ScenarioResult run_scenario(const ScenarioConfig& cfg, bool parallel = false);

/// RP as the ratio of summed payoffs to summed baselines, minus 1.
/// Zero-baseline steps contribute zero to both sums; if both totals are
/// zero the increment is zero.
double metric_rp_ratio_of_sums(const std::vector<double>& payoffs,
                               const std::vector<double>& baselines);

/// RP as the per-step ratio sum minus 1 (the literal formula). Throws
/// naming the step if any baseline is zero.
double metric_rp_literal(const std::vector<double>& payoffs,
                         const std::vector<double>& baselines);

/// Fraction of executions after which the BS is on.
double metric_on(const std::vector<std::uint8_t>& on_flags);

/// Total served over total standalone-served, minus 1.
double metric_xl(const std::vector<int>& served,
                 const std::vector<int>& baseline_served);

/// Distinct Nash-stable outcomes of one step. "schedules" runs the
/// formation under every first-round activation order (n! of them,
/// n <= 6) and deduplicates the final partitions; "exhaustive" tests
/// every partition with the history-free stability check.
std::vector<Partition> enumerate_stable_outcomes(StepContext& ctx,
                                                 StableSetStrategy strategy);

// ---- configuration and output files ----

/// Parses the JSON scenario document (see README for the schema).
/// Relative trace paths resolve against base_dir.
ScenarioConfig load_config(const std::string& json_text, const std::string& base_dir);

/// Writes metrics.csv, steps.jsonl, shifts.jsonl and a resolved
/// config.json into out_dir (created if missing).
void write_outputs(const std::string& out_dir, const ScenarioConfig& cfg,
                   const std::string& config_json, const ScenarioResult& result);

std::string metrics_csv(const ScenarioConfig& cfg, const ScenarioResult& result);
std::string steps_jsonl(const ScenarioResult& result);
std::string shifts_jsonl(const ScenarioResult& result);

} // namespace coalsim

#endif
