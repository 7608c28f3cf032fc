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

#include "coalsim/domain.hpp"

#include <cmath>
#include <stdexcept>

#include "coalsim/allocation.hpp"

namespace coalsim {

void BaseStation::check() const {
    if (!(capacity_mbps > 0.0))
        throw std::invalid_argument("base station '" + id + "': capacity must be > 0");
    if (static_power_kw < 0.0 || per_user_power_kw < 0.0)
        throw std::invalid_argument("base station '" + id + "': power terms must be >= 0");
    if (energy_price < 0.0)
        throw std::invalid_argument("base station '" + id + "': energy price must be >= 0");
}

void NetworkOperator::check() const {
    bs.check();
    if (coalition_cost_rate < 0.0)
        throw std::invalid_argument("operator '" + id + "': coalition cost rate must be >= 0");
    if (!user_mix.empty()) {
        double p = 0.0;
        for (const auto& c : user_mix) {
            if (!(c.min_rate_mbps > 0.0))
                throw std::invalid_argument("user class '" + c.name + "': min rate must be > 0");
            if (c.revenue_rate < 0.0)
                throw std::invalid_argument("user class '" + c.name + "': revenue must be >= 0");
            p += c.mix_probability;
        }
        if (std::abs(p - 1.0) > 1e-9)
            throw std::invalid_argument("operator '" + id + "': mix probabilities must sum to 1");
    }
}

double power_draw(const BaseStation& bs, int n_users) {
    if (n_users < 0) throw std::invalid_argument("power_draw: negative user count");
    return bs.static_power_kw + bs.per_user_power_kw * n_users;
}

double qos_penalty_rate(double d_mbps, double min_rate_mbps, double revenue_rate) {
    if (!(min_rate_mbps > 0.0))
        throw std::invalid_argument("qos_penalty_rate: min rate must be > 0");
    if (d_mbps < 0.0 || d_mbps > min_rate_mbps)
        throw std::invalid_argument("qos_penalty_rate: rate outside [0, D]");
    return (1.0 - d_mbps / min_rate_mbps) * revenue_rate;
}

int max_users(const BaseStation& bs, const std::vector<UserClass>& mix) {
    if (mix.empty()) throw std::invalid_argument("max_users: empty mix");
    double p = 0.0, avg = 0.0;
    for (const auto& c : mix) {
        p += c.mix_probability;
        avg += c.mix_probability * c.min_rate_mbps;
    }
    if (std::abs(p - 1.0) > 1e-9)
        throw std::invalid_argument("max_users: mix probabilities must sum to 1");
    if (!(avg > 0.0)) throw std::invalid_argument("max_users: zero average rate");
    return static_cast<int>(std::floor(bs.capacity_mbps / avg + 1e-9));
}

int users_at(double load, int max_users_m) {
    if (load < 0.0 || load > 1.0)
        throw std::invalid_argument("users_at: load outside [0, 1]");
    if (max_users_m <= 0) throw std::invalid_argument("users_at: M must be > 0");
    // round half up
    int n = static_cast<int>(std::floor(load * max_users_m + 0.5));
    return n > max_users_m ? max_users_m : n;
}

double standalone_profit_rate(const NetworkOperator& op,
                              const std::vector<UserDemand>& users) {
    double revenue = 0.0;
    for (const auto& u : users) revenue += u.cls.revenue_rate;
    // Re-home the users onto the singleton instance regardless of their
    // system-wide owner index.
    std::vector<UserDemand> local = users;
    for (auto& u : local) u.owner = 0;
    AllocationInstance inst = build_instance({op}, {0}, local);
    AllocationSolution sol = solve_exact(inst);
    return revenue - sol.objective;
}

} // namespace coalsim
