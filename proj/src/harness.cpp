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

#include "coalsim/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace coalsim {

namespace {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Partition normalized(Partition pi) {
    std::sort(pi.begin(), pi.end(), [](Coalition a, Coalition b) {
        return std::countr_zero(a) < std::countr_zero(b);
    });
    return pi;
}

nlohmann::json partition_json(const Partition& pi) {
    nlohmann::json out = nlohmann::json::array();
    for (Coalition s : normalized(pi)) out.push_back(coalition_members(s));
    return out;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::string(buf);
}

} // namespace

int ScenarioConfig::executions() const {
    return static_cast<int>(std::ceil(horizon_hours / step_hours - 1e-9));
}

void ScenarioConfig::check() const {
    if (operators.empty()) throw std::invalid_argument("scenario: no operators");
    if (profiles.size() != operators.size())
        throw std::invalid_argument("scenario: one load profile per operator required");
    if (user_mix.empty()) throw std::invalid_argument("scenario: empty user mix");
    if (!(step_hours > 0.0) || !(horizon_hours > 0.0))
        throw std::invalid_argument("scenario: step and horizon must be > 0");
    double p = 0.0;
    for (const auto& c : user_mix) p += c.mix_probability;
    if (std::abs(p - 1.0) > 1e-9)
        throw std::invalid_argument("scenario: mix probabilities must sum to 1");
    for (const auto& op : operators) op.check();
    for (const auto& prof : profiles)
        if (horizon_hours > prof.period() + 1e-9)
            throw std::invalid_argument("scenario: horizon exceeds profile period");
}

StepContext populate_step(const ScenarioConfig& cfg,
                          const std::vector<StepLoad>& step_loads,
                          int step_index) {
    const int n = static_cast<int>(cfg.operators.size());
    const int n_classes = static_cast<int>(cfg.user_mix.size());
    if (step_index < 0 || step_index >= cfg.executions())
        throw std::invalid_argument("populate_step: step index out of range");

    std::vector<std::vector<UserDemand>> users(n);
    for (int i = 0; i < n; ++i) {
        int m = max_users(cfg.operators[i].bs, cfg.user_mix);
        double peak = step_loads[i].peaks.at(step_index);
        int count = users_at(peak, m);
        int offset = static_cast<int>(
            mix64(cfg.seed ^ mix64(static_cast<std::uint64_t>(step_index) * 1000003ULL +
                                   static_cast<std::uint64_t>(i))) %
            static_cast<std::uint64_t>(n_classes));
        users[i].reserve(count);
        for (int j = 0; j < count; ++j)
            users[i].push_back({i, cfg.user_mix[(offset + j) % n_classes]});
    }
    return make_step_context(cfg.operators, std::move(users));
}

std::vector<Partition> enumerate_stable_outcomes(StepContext& ctx,
                                                 StableSetStrategy strategy) {
    const int n = ctx.n();
    if (n > 6)
        throw std::invalid_argument("enumerate_stable_outcomes: more than 6 operators");
    std::set<Partition> found;
    if (strategy == StableSetStrategy::schedules) {
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        do {
            FormationResult r = run_formation(ctx, order);
            found.insert(normalized(r.partition));
        } while (std::next_permutation(order.begin(), order.end()));
    } else {
        static const HistorySet no_history;
        for (const Partition& pi : all_partitions(n))
            if (is_nash_stable(pi, no_history, ctx, false).stable)
                found.insert(normalized(pi));
    }
    return {found.begin(), found.end()};
}

namespace {

StepRecord compute_step(const ScenarioConfig& cfg,
                        const std::vector<StepLoad>& step_loads, int k) {
    const int n = static_cast<int>(cfg.operators.size());
    const int n_classes = static_cast<int>(cfg.user_mix.size());
    StepContext ctx = populate_step(cfg, step_loads, k);

    StepRecord rec;
    rec.step = k;
    rec.class_counts.assign(n, std::vector<int>(n_classes, 0));
    for (int i = 0; i < n; ++i)
        for (const auto& u : ctx.users_by_op[i])
            for (int c = 0; c < n_classes; ++c)
                if (cfg.user_mix[c].name == u.cls.name &&
                    cfg.user_mix[c].min_rate_mbps == u.cls.min_rate_mbps) {
                    ++rec.class_counts[i][c];
                    break;
                }

    rec.baseline.resize(n);
    rec.baseline_on.resize(n);
    rec.baseline_served.resize(n);
    for (int i = 0; i < n; ++i) {
        Coalition self = 1u << i;
        rec.baseline[i] = coalition_value(self, ctx);
        const AllocationSolution& alone = coalition_allocation(self, ctx);
        rec.baseline_on[i] = alone.on_flags.empty() ? 0 : alone.on_flags[0];
        int served = 0;
        for (double d : alone.rates)
            if (d > 0.0) ++served;
        rec.baseline_served[i] = served;
    }

    // Canonical outcome: identity activation order.
    std::vector<int> identity(n);
    std::iota(identity.begin(), identity.end(), 0);
    FormationResult canonical = run_formation(ctx, identity, k);
    rec.canonical = normalized(canonical.partition);
    rec.shifts = canonical.shifts;

    if (n <= 6) {
        rec.stable_partitions = enumerate_stable_outcomes(ctx, StableSetStrategy::schedules);
    } else {
        rec.stable_partitions = {rec.canonical};
    }
    if (cfg.stable_set == StableSetStrategy::exhaustive && n <= 6)
        rec.exhaustive_stable = enumerate_stable_outcomes(ctx, StableSetStrategy::exhaustive);

    rec.payoff.assign(n, 0.0);
    for (const Partition& pi : rec.stable_partitions)
        for (Coalition s : pi) {
            std::vector<double> phi = shapley_payoffs(s, ctx);
            for (int i : coalition_members(s)) rec.payoff[i] += phi[i];
        }
    for (int i = 0; i < n; ++i)
        rec.payoff[i] /= static_cast<double>(rec.stable_partitions.size());

    rec.on_flag.assign(n, 0);
    rec.served.assign(n, 0);
    for (Coalition s : rec.canonical) {
        const AllocationSolution& alloc = coalition_allocation(s, ctx);
        std::vector<int> members = coalition_members(s);
        for (size_t pos = 0; pos < members.size(); ++pos) {
            rec.on_flag[members[pos]] = alloc.on_flags[pos];
            int served = 0;
            for (size_t j = 0; j < alloc.assignment.size(); ++j)
                if (alloc.assignment[j] == static_cast<int>(pos) && alloc.rates[j] > 0.0)
                    ++served;
            rec.served[members[pos]] = served;
        }
    }

    rec.nash_stable = is_nash_stable(canonical.partition, canonical.history, ctx, true).stable;
    rec.nash_stable_history_free =
        is_nash_stable(canonical.partition, canonical.history, ctx, false).stable;
    return rec;
}

} // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg, bool parallel) {
    cfg.check();
    const int n = static_cast<int>(cfg.operators.size());
    const int a = cfg.executions();

    std::vector<StepLoad> step_loads;
    step_loads.reserve(n);
    for (const auto& prof : cfg.profiles) step_loads.push_back(discretize(prof, cfg.step_hours));

    ScenarioResult result;
    result.steps.resize(a);

#pragma omp parallel for schedule(dynamic) if (parallel)
    for (int k = 0; k < a; ++k) result.steps[k] = compute_step(cfg, step_loads, k);

    result.metrics.resize(n);
    for (int i = 0; i < n; ++i) {
        std::vector<double> payoffs, baselines;
        std::vector<std::uint8_t> flags;
        std::vector<int> served, baseline_served;
        std::vector<double> lit_payoffs, lit_baselines;
        for (const StepRecord& rec : result.steps) {
            payoffs.push_back(rec.payoff[i]);
            baselines.push_back(rec.baseline[i]);
            flags.push_back(rec.on_flag[i]);
            served.push_back(rec.served[i]);
            baseline_served.push_back(rec.baseline_served[i]);
            int users = std::accumulate(rec.class_counts[i].begin(),
                                        rec.class_counts[i].end(), 0);
            if (users > 0) { // zero-user steps have no defined per-step ratio
                lit_payoffs.push_back(rec.payoff[i]);
                lit_baselines.push_back(rec.baseline[i]);
            }
        }
        OperatorMetrics m;
        m.rp = cfg.rp_metric == RpMetric::ratio_of_sums
                   ? metric_rp_ratio_of_sums(payoffs, baselines)
                   : metric_rp_literal(lit_payoffs, lit_baselines);
        m.on_ratio = metric_on(flags);
        m.load_deviation = metric_xl(served, baseline_served);
        result.metrics[i] = m;
    }
    return result;
}

double metric_rp_ratio_of_sums(const std::vector<double>& payoffs,
                               const std::vector<double>& baselines) {
    if (payoffs.size() != baselines.size())
        throw std::invalid_argument("metric_rp: length mismatch");
    double x = std::accumulate(payoffs.begin(), payoffs.end(), 0.0);
    double p = std::accumulate(baselines.begin(), baselines.end(), 0.0);
    if (p == 0.0) {
        if (std::abs(x) <= 1e-12) return 0.0;
        throw std::runtime_error("metric_rp: zero baseline total with nonzero payoffs");
    }
    return x / p - 1.0;
}

double metric_rp_literal(const std::vector<double>& payoffs,
                         const std::vector<double>& baselines) {
    if (payoffs.size() != baselines.size())
        throw std::invalid_argument("metric_rp: length mismatch");
    double sum = 0.0;
    for (size_t k = 0; k < payoffs.size(); ++k) {
        if (baselines[k] == 0.0)
            throw std::runtime_error("metric_rp: undefined baseline at step " +
                                     std::to_string(k));
        sum += payoffs[k] / baselines[k];
    }
    return sum - 1.0;
}

double metric_on(const std::vector<std::uint8_t>& on_flags) {
    if (on_flags.empty()) throw std::invalid_argument("metric_on: empty series");
    double c = 0.0;
    for (auto f : on_flags) c += f ? 1.0 : 0.0;
    return c / static_cast<double>(on_flags.size());
}

double metric_xl(const std::vector<int>& served, const std::vector<int>& baseline_served) {
    if (served.size() != baseline_served.size())
        throw std::invalid_argument("metric_xl: length mismatch");
    long total = std::accumulate(served.begin(), served.end(), 0L);
    long base = std::accumulate(baseline_served.begin(), baseline_served.end(), 0L);
    if (base <= 0) throw std::invalid_argument("metric_xl: zero standalone service");
    return static_cast<double>(total) / static_cast<double>(base) - 1.0;
}

// ---- config / output ----

ScenarioConfig load_config(const std::string& json_text, const std::string& base_dir) {
    nlohmann::json doc = nlohmann::json::parse(json_text);
    ScenarioConfig cfg;
    cfg.step_hours = doc.value("step_hours", 1.0);
    cfg.horizon_hours = doc.value("horizon_hours", 168.0);
    cfg.seed = doc.value("seed", 1ULL);
    double period = doc.value("period_hours", 168.0);

    std::string rp = doc.value("rp_metric", "ratio-of-sums");
    if (rp == "ratio-of-sums") cfg.rp_metric = RpMetric::ratio_of_sums;
    else if (rp == "literal") cfg.rp_metric = RpMetric::literal;
    else throw std::invalid_argument("config: unknown rp_metric '" + rp + "'");

    std::string ss = doc.value("stable_set", "schedules");
    if (ss == "schedules") cfg.stable_set = StableSetStrategy::schedules;
    else if (ss == "exhaustive") cfg.stable_set = StableSetStrategy::exhaustive;
    else throw std::invalid_argument("config: unknown stable_set '" + ss + "'");

    for (const auto& c : doc.at("user_mix")) {
        UserClass uc;
        uc.name = c.at("name").get<std::string>();
        uc.min_rate_mbps = c.at("min_rate_mbps").get<double>();
        uc.revenue_rate = c.at("revenue_rate").get<double>();
        uc.mix_probability = c.value("probability", 1.0);
        cfg.user_mix.push_back(uc);
    }

    int index = 0;
    for (const auto& o : doc.at("operators")) {
        NetworkOperator op;
        op.id = o.value("id", "no" + std::to_string(index + 1));
        op.bs.id = op.id;
        op.bs.capacity_mbps = o.at("capacity_mbps").get<double>();
        op.bs.static_power_kw = o.at("static_power_kw").get<double>();
        op.bs.per_user_power_kw = o.at("per_user_power_kw").get<double>();
        op.bs.energy_price = o.at("energy_price").get<double>();
        op.coalition_cost_rate = o.value("coalition_cost_rate", 0.0);
        op.user_mix = cfg.user_mix;

        const auto& load = o.at("load");
        if (load.contains("synthetic_mean")) {
            std::uint64_t pseed = load.value("seed", cfg.seed * 1000 + index + 1);
            cfg.profiles.push_back(
                synthesize_profile(load.at("synthetic_mean").get<double>(), pseed, period));
        } else if (load.contains("trace")) {
            std::filesystem::path p = load.at("trace").get<std::string>();
            if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
            std::ifstream in(p);
            if (!in) throw std::runtime_error("config: cannot open trace " + p.string());
            cfg.profiles.push_back(fit_periodic_spline(parse_trace(in, period)));
        } else {
            throw std::invalid_argument("config: operator load needs synthetic_mean or trace");
        }
        cfg.operators.push_back(std::move(op));
        ++index;
    }
    cfg.check();
    return cfg;
}

std::string metrics_csv(const ScenarioConfig& cfg, const ScenarioResult& result) {
    std::ostringstream os;
    os << "operator,rp,on,xl\n";
    for (size_t i = 0; i < cfg.operators.size(); ++i) {
        const auto& m = result.metrics[i];
        os << cfg.operators[i].id << ',' << fmt(m.rp) << ',' << fmt(m.on_ratio) << ','
           << fmt(m.load_deviation) << '\n';
    }
    return os.str();
}

std::string steps_jsonl(const ScenarioResult& result) {
    std::ostringstream os;
    for (const StepRecord& rec : result.steps) {
        nlohmann::json j;
        j["step"] = rec.step;
        j["class_counts"] = rec.class_counts;
        j["baseline"] = rec.baseline;
        j["baseline_on"] = rec.baseline_on;
        j["baseline_served"] = rec.baseline_served;
        nlohmann::json parts = nlohmann::json::array();
        for (const Partition& pi : rec.stable_partitions) parts.push_back(partition_json(pi));
        j["stable_partitions"] = parts;
        j["canonical"] = partition_json(rec.canonical);
        j["payoff"] = rec.payoff;
        j["on"] = rec.on_flag;
        j["served"] = rec.served;
        j["nash_stable"] = rec.nash_stable;
        j["nash_stable_history_free"] = rec.nash_stable_history_free;
        if (!rec.exhaustive_stable.empty()) {
            nlohmann::json ex = nlohmann::json::array();
            for (const Partition& pi : rec.exhaustive_stable) ex.push_back(partition_json(pi));
            j["exhaustive_stable"] = ex;
        }
        os << j.dump() << '\n';
    }
    return os.str();
}

std::string shifts_jsonl(const ScenarioResult& result) {
    std::ostringstream os;
    for (const StepRecord& rec : result.steps) {
        for (const ShiftRecord& s : rec.shifts) {
            nlohmann::json j;
            j["execution_index"] = s.execution_index;
            j["actor"] = s.actor;
            j["from_coalition"] = coalition_members(s.from);
            j["to_coalition"] = coalition_members(s.to);
            j["payoff_before"] = s.payoff_before;
            j["payoff_after"] = s.payoff_after;
            os << j.dump() << '\n';
        }
    }
    return os.str();
}

void write_outputs(const std::string& out_dir, const ScenarioConfig& cfg,
                   const std::string& config_json, const ScenarioResult& result) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    auto write = [&](const std::string& name, const std::string& body) {
        std::ofstream out(fs::path(out_dir) / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + name + " in " + out_dir);
        out << body;
    };
    write("metrics.csv", metrics_csv(cfg, result));
    write("steps.jsonl", steps_jsonl(result));
    write("shifts.jsonl", shifts_jsonl(result));
    write("config.json", config_json);
}

} // namespace coalsim
