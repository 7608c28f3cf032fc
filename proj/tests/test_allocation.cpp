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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <stdexcept>

#include "coalsim/allocation.hpp"
#include "helpers.hpp"

using namespace coalsim;
using namespace coalsim::testutil;

namespace {

AllocationInstance premium_instance(int n_users, double energy_price = 0.12) {
    AllocationInstance inst;
    inst.stations = {reference_bs(energy_price)};
    for (int j = 0; j < n_users; ++j) inst.users.push_back({0, premium()});
    inst.big_u = n_users;
    return inst;
}

} // namespace

TEST_CASE("build_instance") {
    std::vector<NetworkOperator> ops{reference_operator(0), reference_operator(1)};

    SUBCASE("empty pool") {
        AllocationInstance inst = build_instance(ops, {0}, {});
        CHECK(inst.stations.size() == 1);
        CHECK(inst.users.empty());
        CHECK(inst.big_u == 0);
    }
    SUBCASE("pooling") {
        std::vector<UserDemand> users(5, UserDemand{0, premium()});
        AllocationInstance inst = build_instance(ops, {0, 1}, users);
        CHECK(inst.stations.size() == 2);
        CHECK(inst.big_u == 5);
    }
    SUBCASE("foreign owner rejected") {
        std::vector<UserDemand> users{{1, premium()}};
        CHECK_THROWS_AS(build_instance(ops, {0}, users), std::invalid_argument);
    }
}

TEST_CASE("solve_exact worked instances") {
    SUBCASE("one premium user") {
        AllocationSolution sol = solve_exact(premium_instance(1));
        CHECK(sol.objective == doctest::Approx(0.0662952).epsilon(1e-9));
        CHECK(sol.on_flags[0] == 1);
        CHECK(sol.rates[0] == doctest::Approx(10.0));
        CHECK(validate(premium_instance(1), sol).empty());
    }
    SUBCASE("eleven premium users overload the capacity") {
        // 11 * 10 Mbps > C = 100: exactly 10 Mbps of demand stays unmet,
        // costing one full premium revenue in penalties.
        AllocationInstance inst = premium_instance(11);
        AllocationSolution sol = solve_exact(inst);
        CHECK(sol.objective == doctest::Approx(0.1380472).epsilon(1e-9));
        CHECK(validate(inst, sol).empty());
        double total = 0.0;
        for (double r : sol.rates) total += r;
        CHECK(total == doctest::Approx(100.0));
    }
    SUBCASE("zero users switches everything off") {
        AllocationInstance inst = premium_instance(0);
        AllocationSolution sol = solve_exact(inst);
        CHECK(sol.objective == doctest::Approx(0.0));
        CHECK(sol.on_flags[0] == 0);
    }
    SUBCASE("prohibitive energy price prefers paying the penalty") {
        AllocationInstance inst = premium_instance(1, 1e6);
        AllocationSolution sol = solve_exact(inst);
        CHECK(sol.objective == doctest::Approx(0.07).epsilon(1e-9));
        CHECK(sol.on_flags[0] == 0);
        AllocationSolution oracle = solve_bruteforce(inst);
        CHECK(oracle.objective == doctest::Approx(0.07).epsilon(1e-9));
    }
}

TEST_CASE("oracle equivalence on seeded random instances") {
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 200; ++trial) {
        AllocationInstance inst = random_instance(rng);
        AllocationSolution fast = solve_exact(inst);
        AllocationSolution slow = solve_bruteforce(inst);
        CAPTURE(trial);
        CHECK(std::abs(fast.objective - slow.objective) <= 1e-6);
        CHECK(validate(inst, fast).empty());
        CHECK(validate(inst, slow).empty());
    }
}

TEST_CASE("solver monotonicity") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        AllocationInstance inst = random_instance(rng, 2, 5);
        double q0 = solve_exact(inst).objective;

        AllocationInstance more_users = inst;
        more_users.users.push_back({0, premium()});
        more_users.big_u += 1;
        CHECK(solve_exact(more_users).objective >= q0 - 1e-9);

        AllocationInstance more_bs = inst;
        more_bs.stations.push_back(reference_bs());
        CHECK(solve_exact(more_bs).objective <= q0 + 1e-9);
    }
}

TEST_CASE("greedy rate rule matches grid search on fixed assignments") {
    // A single station priced at nearly free energy is always kept on, so
    // the solver's objective minus the power term isolates the penalty of
    // the greedy fractional rate rule for the fixed all-on-one assignment.
    std::mt19937_64 rng(555);
    std::uniform_real_distribution<double> rate(1.0, 12.0);
    std::uniform_real_distribution<double> revenue(0.02, 0.2);
    std::uniform_real_distribution<double> cap(8.0, 30.0);

    for (int trial = 0; trial < 100; ++trial) {
        const int n = 4;
        AllocationInstance inst;
        inst.stations = {{"bs", cap(rng), 0.001, 0.0, 1e-9}};
        for (int j = 0; j < n; ++j)
            inst.users.push_back({0, {"c", rate(rng), revenue(rng), 1.0}});
        inst.big_u = n;

        AllocationSolution sol = solve_exact(inst);
        double power = sol.on_flags[0]
                           ? power_draw(inst.stations[0], n) * inst.stations[0].energy_price
                           : 0.0;
        double greedy_penalty = sol.objective - power;

        // Exhaustive grid with per-user step D_j / 20.
        double best = 1e100;
        int steps = 21;
        for (int a = 0; a < steps; ++a)
            for (int b = 0; b < steps; ++b)
                for (int c = 0; c < steps; ++c)
                    for (int d = 0; d < steps; ++d) {
                        int idx[4] = {a, b, c, d};
                        double used = 0.0, pen = 0.0;
                        for (int j = 0; j < 4; ++j) {
                            double dj = inst.users[j].cls.min_rate_mbps * idx[j] / 20.0;
                            used += dj;
                            pen += (1.0 - dj / inst.users[j].cls.min_rate_mbps) *
                                   inst.users[j].cls.revenue_rate;
                        }
                        if (used <= inst.stations[0].capacity_mbps + 1e-9)
                            best = std::min(best, pen);
                    }
        CAPTURE(trial);
        CHECK(greedy_penalty <= best + 1e-6);
    }
}

TEST_CASE("validate flags constraint violations") {
    AllocationInstance inst = premium_instance(2);
    AllocationSolution sol = solve_exact(inst);
    CHECK(validate(inst, sol).empty());

    SUBCASE("rate above the request") {
        AllocationSolution bad = sol;
        bad.rates[0] = 11.0;
        CHECK(!validate(inst, bad).empty());
    }
    SUBCASE("serving from a switched-off station") {
        AllocationSolution bad = sol;
        bad.on_flags[0] = 0;
        CHECK(!validate(inst, bad).empty());
    }
    SUBCASE("user left unassigned while a station is on") {
        AllocationSolution bad = sol;
        bad.assignment[1] = -1;
        CHECK(!validate(inst, bad).empty());
    }
    SUBCASE("capacity overrun") {
        AllocationInstance tight = premium_instance(11);
        AllocationSolution s11 = solve_exact(tight);
        AllocationSolution bad = s11;
        for (auto& r : bad.rates) r = 10.0; // sums to 110 > 100
        CHECK(!validate(tight, bad).empty());
    }
}

TEST_CASE("export_milp_text") {
    SUBCASE("structure of a 1-BS 1-user model") {
        std::string lp = export_milp_text(premium_instance(1));
        CHECK(lp.find("Minimize") != std::string::npos);
        CHECK(lp.find("Subject To") != std::string::npos);
        CHECK(lp.find("Binary") != std::string::npos);
        CHECK(lp.find("cap0") != std::string::npos);
        CHECK(lp.find("asg0") != std::string::npos);
        CHECK(lp.find("link0_0") != std::string::npos);
        CHECK(lp.find("b0") != std::string::npos);
    }
    SUBCASE("zero users leaves only activation cost terms") {
        std::string lp = export_milp_text(premium_instance(0));
        CHECK(lp.find("b0") != std::string::npos);
        CHECK(lp.find("d0_0") == std::string::npos);
        CHECK(lp.find("u0_0") == std::string::npos);
    }
}
