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

#include "coalsim/game.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace coalsim {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}
} // namespace

std::vector<int> coalition_members(Coalition s) {
    std::vector<int> out;
    for (int i = 0; i < 32; ++i)
        if ((s >> i) & 1u) out.push_back(i);
    return out;
}

std::string coalition_to_string(Coalition s) {
    std::ostringstream os;
    os << '{';
    bool first = true;
    for (int i : coalition_members(s)) {
        if (!first) os << ',';
        os << i;
        first = false;
    }
    os << '}';
    return os.str();
}

Partition singleton_partition(int n) {
    Partition pi;
    for (int i = 0; i < n; ++i) pi.push_back(1u << i);
    return pi;
}

Coalition partition_coalition_of(const Partition& pi, int op) {
    for (Coalition s : pi)
        if ((s >> op) & 1u) return s;
    throw std::invalid_argument("partition does not cover operator " + std::to_string(op));
}

bool partition_is_valid(const Partition& pi, int n) {
    Coalition seen = 0;
    for (Coalition s : pi) {
        if (s == 0) return false;
        if (seen & s) return false; // overlap
        seen |= s;
    }
    return seen == ((n >= 32) ? ~0u : ((1u << n) - 1u));
}

std::string partition_to_string(const Partition& pi) {
    Partition sorted = pi;
    std::sort(sorted.begin(), sorted.end(),
              [](Coalition a, Coalition b) { return std::countr_zero(a) < std::countr_zero(b); });
    std::string out = "[";
    for (size_t i = 0; i < sorted.size(); ++i) {
        if (i) out += ' ';
        out += coalition_to_string(sorted[i]);
    }
    return out + "]";
}

StepContext make_step_context(const std::vector<NetworkOperator>& operators,
                              std::vector<std::vector<UserDemand>> users_by_op) {
    if (users_by_op.size() != operators.size())
        throw std::invalid_argument("make_step_context: size mismatch");
    StepContext ctx;
    ctx.operators = &operators;
    ctx.users_by_op = std::move(users_by_op);
    return ctx;
}

double coalition_cost(Coalition s, const std::vector<NetworkOperator>& operators) {
    if (std::popcount(s) <= 1) return 0.0;
    double k = 0.0;
    for (int i : coalition_members(s)) {
        if (i >= static_cast<int>(operators.size()))
            throw std::invalid_argument("coalition_cost: member out of range");
        k += operators[i].coalition_cost_rate;
    }
    return k;
}

AllocationInstance coalition_instance(Coalition s, const StepContext& ctx) {
    std::vector<int> members = coalition_members(s);
    std::vector<UserDemand> users;
    for (int i : members)
        users.insert(users.end(), ctx.users_by_op[i].begin(), ctx.users_by_op[i].end());
    return build_instance(*ctx.operators, members, users);
}

const AllocationSolution& coalition_allocation(Coalition s, StepContext& ctx) {
    auto it = ctx.alloc_cache.find(s);
    if (it == ctx.alloc_cache.end()) {
        AllocationInstance inst = coalition_instance(s, ctx);
        it = ctx.alloc_cache.emplace(s, solve_exact(inst)).first;
    }
    return it->second;
}

double coalition_value(Coalition s, StepContext& ctx) {
    if (s == 0) return 0.0;
    auto it = ctx.value_cache.find(s);
    if (it != ctx.value_cache.end()) return it->second;
    double revenue = 0.0;
    for (int i : coalition_members(s))
        for (const auto& u : ctx.users_by_op[i]) revenue += u.cls.revenue_rate;
    double q = coalition_allocation(s, ctx).objective;
    double v = revenue - q - coalition_cost(s, *ctx.operators);
    ctx.value_cache.emplace(s, v);
    return v;
}

std::vector<double> shapley_from_values(Coalition s,
                                        const std::function<double(Coalition)>& value) {
    const int size = std::popcount(s);
    if (size > 12)
        throw std::invalid_argument("shapley: coalition larger than 12 members");
    std::vector<int> members = coalition_members(s);
    int max_op = members.empty() ? 0 : members.back() + 1;
    std::vector<double> phi(max_op, 0.0);
    const double n_fact = factorial(size);

    for (int i : members) {
        Coalition rest = s & ~(1u << i);
        std::vector<int> others = coalition_members(rest);
        const int m = static_cast<int>(others.size());
        double sum = 0.0;
        for (std::uint32_t sub = 0; sub < (1u << m); ++sub) {
            Coalition t = 0;
            for (int b = 0; b < m; ++b)
                if ((sub >> b) & 1u) t |= 1u << others[b];
            int tsz = std::popcount(t);
            double w = factorial(tsz) * factorial(size - tsz - 1) / n_fact;
            double vt = (t == 0) ? 0.0 : value(t);
            sum += w * (value(t | (1u << i)) - vt);
        }
        phi[i] = sum;
    }
    return phi;
}

std::vector<double> shapley_payoffs(Coalition s, StepContext& ctx) {
    std::vector<double> phi = shapley_from_values(
        s, [&ctx](Coalition t) { return coalition_value(t, ctx); });
    phi.resize(ctx.n(), 0.0);
    return phi;
}

double masked_payoff(int i, Coalition s_with_i, const HistorySet& history,
                     StepContext& ctx) {
    if (!((s_with_i >> i) & 1u))
        throw std::invalid_argument("masked_payoff: coalition does not contain operator");
    Coalition base = s_with_i & ~(1u << i);
    if (i < static_cast<int>(history.size()) && history[i].count(base)) return kNegInf;
    return shapley_payoffs(s_with_i, ctx)[i];
}

Preference prefers(int i, Coalition s1, Coalition s2, const HistorySet& history,
                   StepContext& ctx) {
    double u1 = masked_payoff(i, s1, history, ctx);
    double u2 = masked_payoff(i, s2, history, ctx);
    return u1 > u2 ? Preference::first_strictly : Preference::second_weakly_or_better;
}

Coalition shift_search(int i, const Partition& pi, const HistorySet& history,
                       StepContext& ctx) {
    Coalition cur = partition_coalition_of(pi, i);
    double best_payoff = shapley_payoffs(cur, ctx)[i]; // staying is never masked

    // Candidates: every other coalition of the partition plus the empty
    // one, ordered canonically so equal-best ties resolve the same way.
    std::vector<Coalition> candidates{0};
    for (Coalition s : pi)
        if (s != cur) candidates.push_back(s);
    std::sort(candidates.begin(), candidates.end(),
              [i](Coalition a, Coalition b) { return (a | (1u << i)) < (b | (1u << i)); });

    Coalition best = cur;
    for (Coalition base : candidates) {
        Coalition joined = base | (1u << i);
        if (joined == cur) continue;
        if (i < static_cast<int>(history.size()) && history[i].count(base)) continue;
        double payoff = shapley_payoffs(joined, ctx)[i];
        if (payoff > best_payoff) {
            best_payoff = payoff;
            best = joined;
        }
    }
    return best;
}

FormationResult run_formation(StepContext& ctx, const std::vector<int>& schedule,
                              int execution_index) {
    const int n = ctx.n();
    if (schedule.empty())
        throw std::invalid_argument("run_formation: empty schedule");
    for (int i : schedule)
        if (i < 0 || i >= n)
            throw std::invalid_argument("run_formation: schedule index out of range");

    FormationResult res;
    res.partition = singleton_partition(n);
    res.history.assign(n, {});

    const int max_rounds = 4 * n * (1 << n) + 16; // far above any reachable shift count
    for (int round = 0; round < max_rounds; ++round) {
        bool progress = false;
        for (int i : schedule) {
            Coalition cur = partition_coalition_of(res.partition, i);
            Coalition best = shift_search(i, res.partition, res.history, ctx);
            if (best == cur) continue;

            ShiftRecord rec;
            rec.execution_index = execution_index;
            rec.actor = i;
            rec.from = cur;
            rec.to = best;
            rec.payoff_before = shapley_payoffs(cur, ctx)[i];
            rec.payoff_after = shapley_payoffs(best, ctx)[i];
            res.shifts.push_back(rec);

            res.history[i].insert(cur & ~(1u << i));

            Coalition target_base = best & ~(1u << i);
            Partition next;
            for (Coalition s : res.partition) {
                if (s == cur) {
                    if (Coalition left = s & ~(1u << i)) next.push_back(left);
                } else if (s == target_base && target_base != 0) {
                    next.push_back(best);
                } else {
                    next.push_back(s);
                }
            }
            if (target_base == 0) next.push_back(best);
            res.partition = std::move(next);
            if (!partition_is_valid(res.partition, n))
                throw std::logic_error("run_formation: shift broke the partition");
            progress = true;
        }
        if (!progress) return res;
    }
    throw std::logic_error("run_formation: did not quiesce");
}

std::vector<int> seeded_schedule(int n, std::uint64_t seed) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 1);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

StabilityReport is_nash_stable(const Partition& pi, const HistorySet& history,
                               StepContext& ctx, bool history_aware) {
    static const HistorySet empty_history;
    const HistorySet& h = history_aware ? history : empty_history;
    const int n = ctx.n();
    for (int i = 0; i < n; ++i) {
        Coalition cur = partition_coalition_of(pi, i);
        // Staying put is never masked: the shift rule compares candidates
        // against the real current payoff, so stability must as well.
        double u_cur = shapley_payoffs(cur, ctx)[i];
        std::vector<Coalition> candidates{0};
        for (Coalition s : pi)
            if (s != cur) candidates.push_back(s);
        for (Coalition base : candidates) {
            Coalition joined = base | (1u << i);
            if (joined == cur) continue;
            double u_cand =
                (i < static_cast<int>(h.size()) && h[i].count(base))
                    ? kNegInf
                    : shapley_payoffs(joined, ctx)[i];
            if (u_cand > u_cur) return {false, i, base};
        }
    }
    return {true, -1, 0};
}

std::uint64_t bell_number(int n) {
    if (n < 0) throw std::invalid_argument("bell_number: negative n");
    // Bell triangle
    std::vector<std::uint64_t> row{1};
    for (int i = 1; i <= n; ++i) {
        std::vector<std::uint64_t> next{row.back()};
        for (std::uint64_t v : row) next.push_back(next.back() + v);
        row = std::move(next);
    }
    return row.front();
}

std::vector<Partition> all_partitions(int n) {
    std::vector<Partition> out;
    std::vector<int> label(n, 0);
    std::function<void(int, int)> rec = [&](int i, int groups) {
        if (i == n) {
            Partition pi(groups, 0);
            for (int j = 0; j < n; ++j) pi[label[j]] |= 1u << j;
            out.push_back(std::move(pi));
            return;
        }
        for (int g = 0; g <= groups; ++g) {
            label[i] = g;
            rec(i + 1, std::max(groups, g + 1));
        }
    };
    if (n > 0) rec(0, 0);
    return out;
}

} // namespace coalsim
