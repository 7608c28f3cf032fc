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
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "coalsim/game.hpp"
#include "helpers.hpp"

using namespace coalsim;
using namespace coalsim::testutil;

namespace {

/// n reference operators, each bringing the given number of premium users.
StepContext premium_context(const std::vector<NetworkOperator>& ops,
                            const std::vector<int>& user_counts) {
    std::vector<std::vector<UserDemand>> users(ops.size());
    for (size_t i = 0; i < ops.size(); ++i)
        users[i].assign(user_counts[i], UserDemand{static_cast<int>(i), premium()});
    return make_step_context(ops, std::move(users));
}

/// All-orderings Shapley oracle over an arbitrary value function.
std::vector<double> shapley_by_orderings(Coalition s,
                                         const std::function<double(Coalition)>& v) {
    std::vector<int> members = coalition_members(s);
    std::vector<double> phi(members.empty() ? 0 : members.back() + 1, 0.0);
    std::vector<int> order = members;
    std::sort(order.begin(), order.end());
    int count = 0;
    do {
        Coalition built = 0;
        for (int i : order) {
            double before = built ? v(built) : 0.0;
            built |= 1u << i;
            phi[i] += v(built) - before;
        }
        ++count;
    } while (std::next_permutation(order.begin(), order.end()));
    for (double& p : phi) p /= count;
    return phi;
}

Partition normalized(Partition p) {
    std::sort(p.begin(), p.end());
    return p;
}

} // namespace

TEST_CASE("coalition and partition basics") {
    CHECK(coalition_members(0b10110u) == std::vector<int>{1, 2, 4});
    CHECK(coalition_to_string(0b101u) == "{0,2}");

    Partition pi = singleton_partition(3);
    CHECK(pi.size() == 3);
    CHECK(partition_is_valid(pi, 3));
    CHECK(partition_coalition_of(pi, 2) == 0b100u);

    CHECK(!partition_is_valid({0b11u, 0b10u}, 2));      // overlap
    CHECK(!partition_is_valid({0b01u}, 2));             // missing member
    CHECK(!partition_is_valid({0b01u, 0b10u, 0u}, 2));  // empty coalition
}

TEST_CASE("coalition_cost") {
    std::vector<NetworkOperator> ops;
    for (int i = 0; i < 5; ++i) ops.push_back(reference_operator(i));
    CHECK(coalition_cost(0b00001u, ops) == doctest::Approx(0.0));
    CHECK(coalition_cost(0b00011u, ops) == doctest::Approx(0.02));
    CHECK(coalition_cost(0b11111u, ops) == doctest::Approx(0.05));
}

TEST_CASE("coalition_value") {
    std::vector<NetworkOperator> ops{reference_operator(0), reference_operator(1)};

    SUBCASE("singleton without users") {
        StepContext ctx = premium_context(ops, {0, 0});
        CHECK(coalition_value(0b01u, ctx) == doctest::Approx(0.0));
    }
    SUBCASE("singleton with one premium user") {
        StepContext ctx = premium_context(ops, {1, 0});
        CHECK(coalition_value(0b01u, ctx) == doctest::Approx(0.0037048).epsilon(1e-9));
    }
    SUBCASE("pair sharing one station") {
        // 5 users each: one BS serves all 10 within C = 100, the other
        // switches off, and the pair pays 2K formation cost.
        StepContext ctx = premium_context(ops, {5, 5});
        double expected = 10 * 0.07 - (0.551 + 10 * 0.00146) * 0.12 - 0.02;
        CHECK(coalition_value(0b11u, ctx) == doctest::Approx(expected).epsilon(1e-9));
        const AllocationSolution& sol = coalition_allocation(0b11u, ctx);
        CHECK(sol.on_flags[0] + sol.on_flags[1] == 1);
    }
    SUBCASE("cache equals recomputation") {
        StepContext ctx = premium_context(ops, {3, 4});
        double v = coalition_value(0b11u, ctx);
        StepContext fresh = premium_context(ops, {3, 4});
        CHECK(v == doctest::Approx(coalition_value(0b11u, fresh)).epsilon(1e-12));
        CHECK(ctx.value_cache.at(0b11u) == v);
    }
}

TEST_CASE("shapley_from_values worked examples") {
    SUBCASE("singleton") {
        auto v = [](Coalition) { return 0.42; };
        CHECK(shapley_from_values(0b1u, v)[0] == doctest::Approx(0.42));
    }
    SUBCASE("symmetric pair splits evenly") {
        auto v = [](Coalition s) {
            return std::popcount(s) == 2 ? 1.0 : 0.2;
        };
        std::vector<double> phi = shapley_from_values(0b11u, v);
        CHECK(phi[0] == doctest::Approx(0.5));
        CHECK(phi[1] == doctest::Approx(0.5));
    }
    SUBCASE("three-player game") {
        auto v = [](Coalition s) -> double {
            switch (s) {
                case 0b001u: return 1;
                case 0b010u: return 2;
                case 0b100u: return 3;
                case 0b011u: return 4;
                case 0b101u: return 5;
                case 0b110u: return 6;
                case 0b111u: return 9;
                default: return 0;
            }
        };
        std::vector<double> phi = shapley_from_values(0b111u, v);
        std::vector<double> oracle = shapley_by_orderings(0b111u, v);
        // average marginal contributions over all 6 orderings
        CHECK(phi[0] == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(phi[1] == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(phi[2] == doctest::Approx(4.0).epsilon(1e-12));
        for (int i = 0; i < 3; ++i)
            CHECK(phi[i] == doctest::Approx(oracle[i]).epsilon(1e-12));
    }
    SUBCASE("matches the all-orderings oracle on random games") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> val(-1.0, 2.0);
        for (int trial = 0; trial < 25; ++trial) {
            std::vector<double> table(32);
            for (auto& x : table) x = val(rng);
            auto v = [&table](Coalition s) { return table[s]; };
            Coalition s = 0b11111u;
            std::vector<double> phi = shapley_from_values(s, v);
            std::vector<double> oracle = shapley_by_orderings(s, v);
            double sum = 0.0;
            for (int i = 0; i < 5; ++i) {
                CHECK(phi[i] == doctest::Approx(oracle[i]).epsilon(1e-9));
                sum += phi[i];
            }
            CHECK(sum == doctest::Approx(v(s)).epsilon(1e-9)); // efficiency
        }
    }
}

TEST_CASE("shapley efficiency and symmetry on game contexts") {
    std::vector<NetworkOperator> ops;
    for (int i = 0; i < 3; ++i) ops.push_back(reference_operator(i));

    StepContext ctx = premium_context(ops, {4, 4, 9});
    for (Coalition s = 1; s < 8; ++s) {
        std::vector<double> phi = shapley_payoffs(s, ctx);
        double sum = std::accumulate(phi.begin(), phi.end(), 0.0);
        CHECK(sum == doctest::Approx(coalition_value(s, ctx)).epsilon(1e-9));
    }
    // operators 0 and 1 are interchangeable (same BS, same 4 users)
    std::vector<double> grand = shapley_payoffs(0b111u, ctx);
    CHECK(grand[0] == doctest::Approx(grand[1]).epsilon(1e-9));
}

TEST_CASE("masked preference") {
    std::vector<NetworkOperator> ops{reference_operator(0), reference_operator(1)};
    StepContext ctx = premium_context(ops, {5, 5});
    HistorySet h(2);

    CHECK(std::isfinite(masked_payoff(0, 0b11u, h, ctx)));
    h[0].insert(0b10u); // base {1}: operator 0 already left that coalition
    CHECK(masked_payoff(0, 0b11u, h, ctx) ==
          -std::numeric_limits<double>::infinity());
    CHECK(prefers(0, 0b01u, 0b11u, h, ctx) == Preference::first_strictly);
}

TEST_CASE("shift_search") {
    std::vector<NetworkOperator> ops{reference_operator(0), reference_operator(1)};

    SUBCASE("profitable pooling attracts the shift") {
        StepContext ctx = premium_context(ops, {5, 5});
        HistorySet h(2);
        CHECK(shift_search(0, singleton_partition(2), h, ctx) == 0b11u);
    }
    SUBCASE("history masks the only attractive move") {
        StepContext ctx = premium_context(ops, {5, 5});
        HistorySet h(2);
        h[0].insert(0b10u);
        CHECK(shift_search(0, singleton_partition(2), h, ctx) == 0b01u);
    }
    SUBCASE("prohibitive coalition cost keeps everyone home") {
        std::vector<NetworkOperator> pricey{reference_operator(0, 0.12, 1000.0),
                                            reference_operator(1, 0.12, 1000.0)};
        StepContext ctx = premium_context(pricey, {5, 5});
        HistorySet h(2);
        CHECK(shift_search(0, singleton_partition(2), h, ctx) == 0b01u);
    }
}

TEST_CASE("run_formation") {
    SUBCASE("single operator never shifts") {
        std::vector<NetworkOperator> ops{reference_operator(0)};
        StepContext ctx = premium_context(ops, {5});
        FormationResult res = run_formation(ctx, {0});
        CHECK(res.partition == singleton_partition(1));
        CHECK(res.shifts.empty());
    }
    SUBCASE("two operators pool when profitable") {
        std::vector<NetworkOperator> ops{reference_operator(0), reference_operator(1)};
        StepContext ctx = premium_context(ops, {5, 5});
        FormationResult res = run_formation(ctx, {0, 1});
        CHECK(normalized(res.partition) == Partition{0b11u});
        CHECK(!res.shifts.empty());
        StabilityReport rep = is_nash_stable(res.partition, res.history, ctx);
        CHECK(rep.stable);
    }
    SUBCASE("huge formation cost leaves all singletons") {
        std::vector<NetworkOperator> ops;
        for (int i = 0; i < 3; ++i) ops.push_back(reference_operator(i, 0.12, 1000.0));
        StepContext ctx = premium_context(ops, {5, 5, 5});
        FormationResult res = run_formation(ctx, {0, 1, 2});
        CHECK(normalized(res.partition) == normalized(singleton_partition(3)));
        CHECK(res.shifts.empty());
    }
    SUBCASE("seeded five-operator runs terminate stably within the Bell bound") {
        std::vector<NetworkOperator> ops;
        for (int i = 0; i < 5; ++i) ops.push_back(reference_operator(i));
        std::mt19937_64 rng(2024);
        std::uniform_int_distribution<int> users(0, 11);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<int> counts(5);
            for (auto& c : counts) c = users(rng);
            StepContext ctx = premium_context(ops, counts);
            std::vector<int> schedule = seeded_schedule(5, trial);
            FormationResult res = run_formation(ctx, schedule);
            CAPTURE(trial);
            CHECK(partition_is_valid(res.partition, 5));
            CHECK(res.shifts.size() <= bell_number(5));
            CHECK(is_nash_stable(res.partition, res.history, ctx).stable);
            // replay the log: no shift ever joins a base the actor has
            // already walked away from
            std::vector<std::set<Coalition>> walked(5);
            for (const auto& s : res.shifts) {
                Coalition target = s.to & ~(1u << s.actor);
                CHECK(walked[s.actor].count(target) == 0);
                walked[s.actor].insert(s.from & ~(1u << s.actor));
            }
        }
    }
    SUBCASE("shift log payoffs are strict improvements") {
        std::vector<NetworkOperator> ops;
        for (int i = 0; i < 4; ++i) ops.push_back(reference_operator(i));
        StepContext ctx = premium_context(ops, {7, 2, 9, 4});
        FormationResult res = run_formation(ctx, {0, 1, 2, 3});
        for (const auto& s : res.shifts) CHECK(s.payoff_after > s.payoff_before);
    }
}

TEST_CASE("is_nash_stable witnesses") {
    std::vector<NetworkOperator> ops{reference_operator(0), reference_operator(1)};
    StepContext ctx = premium_context(ops, {5, 5});
    HistorySet empty(2);

    StabilityReport rep = is_nash_stable(singleton_partition(2), empty, ctx, false);
    CHECK(!rep.stable);
    CHECK(rep.witness_operator >= 0);

    std::vector<NetworkOperator> solo{reference_operator(0)};
    StepContext solo_ctx = premium_context(solo, {3});
    CHECK(is_nash_stable({0b1u}, HistorySet(1), solo_ctx).stable);
}

TEST_CASE("bell numbers and partition enumeration") {
    CHECK(bell_number(0) == 1);
    CHECK(bell_number(1) == 1);
    CHECK(bell_number(3) == 5);
    CHECK(bell_number(5) == 52);
    CHECK(bell_number(6) == 203);

    std::vector<Partition> parts = all_partitions(4);
    CHECK(parts.size() == bell_number(4));
    std::set<Partition> uniq;
    for (const auto& p : parts) {
        CHECK(partition_is_valid(p, 4));
        uniq.insert(normalized(p));
    }
    CHECK(uniq.size() == parts.size());
}
