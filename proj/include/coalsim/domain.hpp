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

#ifndef COALSIM_DOMAIN_HPP
#define COALSIM_DOMAIN_HPP

#include <string>
#include <vector>

namespace coalsim {

/// One operator's cell tower. Power draw is affine in the number of
/// served users: W(n) = static_power_kw + per_user_power_kw * n.
struct BaseStation {
    std::string id;
    double capacity_mbps = 0.0;       // C, maximum aggregate downlink rate
    double static_power_kw = 0.0;     // alpha, load-independent draw
    double per_user_power_kw = 0.0;   // beta, per-user draw
    double energy_price = 0.0;        // E, $/kWh

    // Throws std::invalid_argument on violated bounds.
    void check() const;
};

/// A user class: QoS requirement, revenue rate and arrival probability
/// within a heterogeneous mix.
struct UserClass {
    std::string name;
    double min_rate_mbps = 0.0;   // D, requested downlink rate
    double revenue_rate = 0.0;    // R, $/hour while subscribed
    double mix_probability = 1.0; // p, share of arrivals of this class
};

struct NetworkOperator {
    std::string id;
    BaseStation bs;                    // exactly one BS per operator
    std::vector<UserClass> user_mix;
    double coalition_cost_rate = 0.0;  // K, $/hour while in a coalition

    void check() const;
};

/// A concrete user present in one subinterval; owner is an index into
/// the system's operator list.
struct UserDemand {
    int owner = -1;
    UserClass cls;
};

/// Power draw (kW) of a base station serving n users.
double power_draw(const BaseStation& bs, int n_users);

/// QoS penalty rate ($/hour) for a user that requested D Mbps, pays R
/// $/hour, and received d Mbps. Linear from R at d=0 down to 0 at d=D.
/// Rejects d outside [0, D].
double qos_penalty_rate(double d_mbps, double min_rate_mbps, double revenue_rate);

/// Maximum number of users M a base station can fully serve, from the
/// mix-weighted average requested rate: floor(C / sum(p_j * D_j)).
int max_users(const BaseStation& bs, const std::vector<UserClass>& mix);

/// Users present at a given normalized load: round-half-up(load * M).
int users_at(double load, int max_users_m);

/// Optimal standalone net profit rate ($/hour) of one operator serving
/// its own users, including the option of switching its BS off. No
/// coalition cost applies to an operator standing alone.
double standalone_profit_rate(const NetworkOperator& op,
                              const std::vector<UserDemand>& users);

} // namespace coalsim

#endif
