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

#ifndef COALSIM_TESTS_HELPERS_HPP
#define COALSIM_TESTS_HELPERS_HPP

#include <random>
#include <vector>

#include "coalsim/allocation.hpp"
#include "coalsim/domain.hpp"

namespace coalsim::testutil {

inline BaseStation reference_bs(double energy_price = 0.12) {
    return {"bs", 100.0, 0.551, 0.00146, energy_price};
}

inline UserClass premium() { return {"premium", 10.0, 0.07, 1.0}; }
inline UserClass standard() { return {"standard", 0.384, 0.035, 1.0}; }
inline UserClass base_class() { return {"base", 0.0122, 0.0175, 1.0}; }

inline std::vector<UserClass> table_mix() {
    return {
        {"base", 0.0122, 0.0175, 1.0 / 3.0},
        {"standard", 0.384, 0.035, 1.0 / 3.0},
        {"premium", 10.0, 0.07, 1.0 / 3.0},
    };
}

inline NetworkOperator reference_operator(int index, double energy_price = 0.12,
                                          double k_rate = 0.01) {
    NetworkOperator op;
    op.id = "NO" + std::to_string(index + 1);
    op.bs = reference_bs(energy_price);
    op.bs.id = op.id + "-bs";
    op.user_mix = {premium()};
    op.coalition_cost_rate = k_rate;
    return op;
}

/// Random allocation instance within the brute-force oracle bounds,
/// parameters drawn around the reference constants.
inline AllocationInstance random_instance(std::mt19937_64& rng, int max_stations = 3,
                                          int max_users = 6) {
    std::uniform_int_distribution<int> n_st(1, max_stations);
    std::uniform_int_distribution<int> n_us(0, max_users);
    std::uniform_real_distribution<double> cap(20.0, 150.0);
    std::uniform_real_distribution<double> alpha(0.2, 1.0);
    std::uniform_real_distribution<double> beta(0.0005, 0.01);
    std::uniform_real_distribution<double> price(0.05, 0.5);
    std::uniform_real_distribution<double> rate(0.5, 30.0);
    std::uniform_real_distribution<double> revenue(0.01, 0.2);

    AllocationInstance inst;
    int s = n_st(rng), u = n_us(rng);
    for (int i = 0; i < s; ++i)
        inst.stations.push_back({"bs" + std::to_string(i), cap(rng), alpha(rng),
                                 beta(rng), price(rng)});
    for (int j = 0; j < u; ++j) {
        UserClass cls{"c" + std::to_string(j % 3), rate(rng), revenue(rng), 1.0};
        inst.users.push_back({0, cls});
    }
    inst.big_u = u;
    return inst;
}

} // namespace coalsim::testutil

#endif
