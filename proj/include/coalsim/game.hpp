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

#ifndef COALSIM_GAME_HPP
#define COALSIM_GAME_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "coalsim/allocation.hpp"
#include "coalsim/domain.hpp"

namespace coalsim {

/// A coalition is a bitmask over operator indices (bit i = operator i).
using Coalition = std::uint32_t;

std::vector<int> coalition_members(Coalition s);
std::string coalition_to_string(Coalition s); // canonical "{0,2,4}" form

/// Disjoint coalitions covering all operators, kept sorted by lowest
/// member so equality is structural.
using Partition = std::vector<Coalition>;

Partition singleton_partition(int n_operators);
Coalition partition_coalition_of(const Partition& pi, int op);
bool partition_is_valid(const Partition& pi, int n_operators);
std::string partition_to_string(const Partition& pi);

/// Per-operator set of coalition bases (stored *without* the owner) that
/// the operator already walked away from during one algorithm execution.
using HistorySet = std::vector<std::unordered_set<Coalition>>;

/// Everything that is fixed during one subinterval: the operators, the
/// users each of them brings, and memoized coalition evaluations.
struct StepContext {
    const std::vector<NetworkOperator>* operators = nullptr;
    std::vector<std::vector<UserDemand>> users_by_op;

    // Memoized per coalition; entries always equal a fresh recomputation.
    std::unordered_map<Coalition, double> value_cache;
    std::unordered_map<Coalition, AllocationSolution> alloc_cache;

    int n() const { return static_cast<int>(users_by_op.size()); }
};

StepContext make_step_context(const std::vector<NetworkOperator>& operators,
                              std::vector<std::vector<UserDemand>> users_by_op);

/// Coalition formation cost: 0 for singletons, sum of member K rates
/// otherwise.
double coalition_cost(Coalition s, const std::vector<NetworkOperator>& operators);

/// v(S) = pooled revenue - optimal serving cost Q - formation cost K.
double coalition_value(Coalition s, StepContext& ctx);

/// The instance and optimal allocation backing v(S) (cached).
const AllocationSolution& coalition_allocation(Coalition s, StepContext& ctx);
AllocationInstance coalition_instance(Coalition s, const StepContext& ctx);

/// Shapley payoffs restricted to coalition S (coalition-structure form):
/// averages each member's marginal contribution over the orderings of S,
/// with the empty coalition worth 0. Returns a vector indexed by
/// operator; non-members get 0. Requires |S| <= 12.
std::vector<double> shapley_payoffs(Coalition s, StepContext& ctx);

/// Same computation over an arbitrary value function (used by oracles
/// and tests).
std::vector<double> shapley_from_values(Coalition s,
                                        const std::function<double(Coalition)>& value);

/// Payoff of operator i in coalition s_with_i, masked to -infinity when
/// the coalition base (s without i) is in i's history.
double masked_payoff(int i, Coalition s_with_i, const HistorySet& history,
                     StepContext& ctx);

enum class Preference { first_strictly, second_weakly_or_better };

/// History-aware comparison of two coalitions both containing i.
Preference prefers(int i, Coalition s1, Coalition s2, const HistorySet& history,
                   StepContext& ctx);

/// One pass of the shift rule for operator i: evaluates every candidate
/// base in the partition (plus the empty coalition) not in i's history
/// and returns the strictly best coalition to be in, or the current one.
Coalition shift_search(int i, const Partition& pi, const HistorySet& history,
                       StepContext& ctx);

struct ShiftRecord {
    int execution_index = 0;
    int actor = 0;
    Coalition from = 0;
    Coalition to = 0;
    double payoff_before = 0.0;
    double payoff_after = 0.0;
};

struct FormationResult {
    Partition partition;
    std::vector<ShiftRecord> shifts;
    HistorySet history; // terminal histories
};

/// Runs the asynchronous coalition formation under a deterministic
/// activation schedule (one shift attempt per activation, repeated
/// round-robin) until a full round produces no shift. Starts from the
/// all-singleton partition with empty histories.
FormationResult run_formation(StepContext& ctx, const std::vector<int>& schedule,
                              int execution_index = 0);

/// Seeded random permutation of 0..n-1 (the default activation order).
std::vector<int> seeded_schedule(int n, std::uint64_t seed);

struct StabilityReport {
    bool stable = true;
    int witness_operator = -1;
    Coalition witness_target = 0; // the partition coalition (or empty) to defect to
};

/// Nash stability under the history-aware preference; pass an empty
/// history (or history_aware = false) for the history-free diagnostic.
StabilityReport is_nash_stable(const Partition& pi, const HistorySet& history,
                               StepContext& ctx, bool history_aware = true);

/// Bell number (partition count) for small n.
std::uint64_t bell_number(int n);

/// All partitions of n operators (restricted-growth enumeration).
std::vector<Partition> all_partitions(int n);

} // namespace coalsim

#endif
