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

#ifndef COALSIM_ALLOCATION_HPP
#define COALSIM_ALLOCATION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "coalsim/domain.hpp"

namespace coalsim {

/// One coalition's user-to-BS allocation problem: which base stations to
/// keep on, where to attach each pooled user, and what rate to grant it.
struct AllocationInstance {
    std::vector<BaseStation> stations; // the coalition's BSs
    std::vector<UserDemand> users;     // pooled user population
    int big_u = 0;                     // |users|, the activation big-M
};

enum class SolveStatus { optimal, infeasible };

struct AllocationSolution {
    double objective = 0.0;            // Q, minimal cost rate ($/hour)
    std::vector<std::uint8_t> on_flags; // per station
    std::vector<int> assignment;       // per user: station index, -1 if nobody serves
    std::vector<double> rates;         // per user: granted Mbps
    SolveStatus status = SolveStatus::optimal;
};

/// Pools the users of a coalition onto its base stations. `members` are
/// operator indices; every user's owner must be one of them.
AllocationInstance build_instance(const std::vector<NetworkOperator>& operators,
                                  const std::vector<int>& members,
                                  const std::vector<UserDemand>& users);

/// Exact minimization of energy plus QoS-penalty cost: enumerates the
/// switch-on sets and, for each, runs branch-and-bound over per-class
/// user counts with a pooled-capacity relaxation bound. Proven optimal
/// within tol (absolute, in [1e-9, 1e-4]).
AllocationSolution solve_exact(const AllocationInstance& inst, double tol = 1e-6);

/// Full enumeration oracle: all on-sets times all user assignments,
/// rates by the greedy fractional rule. Requires at most 3 stations and
/// 7 users.
AllocationSolution solve_bruteforce(const AllocationInstance& inst);

/// Constraint check at the given tolerance; returns human-readable
/// violation descriptions (empty means feasible).
std::vector<std::string> validate(const AllocationInstance& inst,
                                  const AllocationSolution& sol,
                                  double tol = 1e-6);

/// Plain-text LP-format export of the instance for cross-checking with
/// an external MILP solver. The activation product in the objective is
/// linearized with explicit u <= b rows.
std::string export_milp_text(const AllocationInstance& inst);

} // namespace coalsim

#endif
