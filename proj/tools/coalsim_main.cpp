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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "coalsim/harness.hpp"

namespace fs = std::filesystem;
using namespace coalsim;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::int64_t seed, double dt, const std::string& rp_metric,
            const std::string& stable_set, bool serial) {
    nlohmann::json doc = nlohmann::json::parse(slurp(config_path));
    if (seed >= 0) doc["seed"] = seed;
    if (dt > 0.0) doc["step_hours"] = dt;
    if (!rp_metric.empty()) doc["rp_metric"] = rp_metric;
    if (!stable_set.empty()) doc["stable_set"] = stable_set;

    std::string base_dir = fs::path(config_path).parent_path().string();
    ScenarioConfig cfg = load_config(doc.dump(), base_dir);
    ScenarioResult result = run_scenario(cfg, !serial);
    write_outputs(out_dir, cfg, doc.dump(2) + "\n", result);

    for (size_t i = 0; i < cfg.operators.size(); ++i)
        std::printf("%-8s RP=%10.6f  ON=%8.4f  XL=%10.6f\n", cfg.operators[i].id.c_str(),
                    result.metrics[i].rp, result.metrics[i].on_ratio,
                    result.metrics[i].load_deviation);

    if (doc.contains("dt_sweep")) {
        fs::create_directories(fs::path(out_dir) / "plotdata");
        std::ofstream csv(fs::path(out_dir) / "plotdata" / "rp_vs_dt.csv");
        csv << "dt";
        for (const auto& op : cfg.operators) csv << ',' << op.id;
        csv << '\n';
        for (double sweep_dt : doc["dt_sweep"].get<std::vector<double>>()) {
            nlohmann::json d2 = doc;
            d2["step_hours"] = sweep_dt;
            ScenarioConfig c2 = load_config(d2.dump(), base_dir);
            ScenarioResult r2 = run_scenario(c2, !serial);
            csv << sweep_dt;
            for (const auto& m : r2.metrics) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.12g", m.rp);
                csv << ',' << buf;
            }
            csv << '\n';
            std::printf("dt=%g done\n", sweep_dt);
        }
    }
    return 0;
}

int cmd_synth(const std::string& out_dir, const std::string& targets_path,
              double period, std::int64_t seed) {
    fs::create_directories(out_dir);
    std::ifstream in(targets_path);
    if (!in) throw std::runtime_error("cannot open " + targets_path);
    std::string line;
    int lineno = 0, written = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("name", 0) == 0) continue;
        std::istringstream ls(line);
        std::string name, mean_s, seed_s;
        std::getline(ls, name, ',');
        std::getline(ls, mean_s, ',');
        std::getline(ls, seed_s, ',');
        double mean = std::stod(mean_s);
        std::uint64_t pseed = seed_s.empty() ? static_cast<std::uint64_t>(seed) + written + 1
                                             : std::stoull(seed_s);
        LoadProfile prof = synthesize_profile(mean, pseed, period);
        std::ofstream out(fs::path(out_dir) / (name + ".csv"));
        out << "time_hours,load\n";
        for (double t = 0.0; t < period - 1e-9; t += 0.5) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.4f,%.6f\n", t, prof(t));
            out << buf;
        }
        std::printf("%s: mean %.4f (target %.4f)\n", name.c_str(),
                    stats(prof).mean_hourly, mean);
        ++written;
    }
    std::printf("wrote %d trace file(s) to %s\n", written, out_dir.c_str());
    return 0;
}

int cmd_check(const std::string& records_dir) {
    ScenarioConfig cfg = load_config(slurp(fs::path(records_dir) / "config.json"),
                                     records_dir);
    std::ifstream in(fs::path(records_dir) / "steps.jsonl");
    if (!in) throw std::runtime_error("cannot open steps.jsonl in " + records_dir);

    const int n = static_cast<int>(cfg.operators.size());
    int checked = 0, stable = 0, stable_free = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        auto counts = j.at("class_counts").get<std::vector<std::vector<int>>>();

        std::vector<std::vector<UserDemand>> users(n);
        for (int i = 0; i < n; ++i)
            for (size_t c = 0; c < counts[i].size(); ++c)
                for (int r = 0; r < counts[i][c]; ++r)
                    users[i].push_back({i, cfg.user_mix[c]});
        StepContext ctx = make_step_context(cfg.operators, std::move(users));

        Partition pi;
        for (const auto& members : j.at("canonical")) {
            Coalition s = 0;
            for (int m : members) s |= 1u << m;
            pi.push_back(s);
        }

        std::vector<int> identity(n);
        std::iota(identity.begin(), identity.end(), 0);
        FormationResult rerun = run_formation(ctx, identity);

        auto key = [](Partition p) {
            std::sort(p.begin(), p.end());
            return p;
        };
        bool match = key(rerun.partition) == key(pi);
        StabilityReport aware = is_nash_stable(pi, rerun.history, ctx, true);
        StabilityReport free = is_nash_stable(pi, rerun.history, ctx, false);
        ++checked;
        if (aware.stable) ++stable;
        if (free.stable) ++stable_free;
        if (!match || !aware.stable) {
            std::printf("step %d: %s%s\n", j.at("step").get<int>(),
                        match ? "" : "partition mismatch on rerun ",
                        aware.stable ? "" : "NOT Nash-stable (history-aware)");
        }
    }
    std::printf("checked %d step(s): %d Nash-stable (history-aware), "
                "%d stable under the history-free diagnostic\n",
                checked, stable, stable_free);
    return (checked == stable) ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"coalition formation profit simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, targets_path, records_dir;
    std::string rp_metric, stable_set;
    std::int64_t seed = -1;
    double dt = 0.0, period = 168.0;
    bool serial = false;

    auto* run = app.add_subcommand("run", "run a scenario over the horizon");
    run->add_option("--config", config_path, "scenario JSON")->required();
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--seed", seed, "override the scenario seed");
    run->add_option("--dt", dt, "override the discretization step (hours)");
    run->add_option("--rp-metric", rp_metric, "ratio-of-sums|literal")
        ->check(CLI::IsMember({"ratio-of-sums", "literal"}));
    run->add_option("--stable-set", stable_set, "schedules|exhaustive")
        ->check(CLI::IsMember({"schedules", "exhaustive"}));
    run->add_flag("--serial", serial, "force the serial reference path");

    auto* synth = app.add_subcommand("synth-traces", "generate synthetic trace files");
    synth->add_option("--out", out_dir, "output directory")->required();
    synth->add_option("--targets", targets_path, "CSV of name,mean[,seed]")->required();
    synth->add_option("--period", period, "trace period in hours");
    synth->add_option("--seed", seed, "base seed for unseeded targets");

    auto* check = app.add_subcommand("check-stability", "re-verify recorded outcomes");
    check->add_option("--records", records_dir, "directory with config.json + steps.jsonl")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(config_path, out_dir, seed, dt, rp_metric, stable_set, serial);
        if (synth->parsed())
            return cmd_synth(out_dir, targets_path, period, seed < 0 ? 1 : seed);
        if (check->parsed()) return cmd_check(records_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
