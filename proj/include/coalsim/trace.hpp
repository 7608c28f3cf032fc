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

#ifndef COALSIM_TRACE_HPP
#define COALSIM_TRACE_HPP

#include <cstdint>
#include <istream>
#include <utility>
#include <vector>

namespace coalsim {

/// Sampled normalized traffic trace over one period (a week by default).
struct LoadTrace {
    std::vector<std::pair<double, double>> samples; // (time_hours, load)
    double period_hours = 168.0;
};

/// Trace CSV: header `time_hours,load`, one sample per line, `#` comments.
/// Times must be strictly increasing and < period; loads in [0, 1];
/// at least 4 samples. Errors carry the offending line number.
LoadTrace parse_trace(std::istream& in, double period_hours = 168.0);

/// Periodic natural cubic spline through trace samples. Evaluation is
/// clamped into [0, 1]; raw (unclamped) values and derivatives are
/// exposed for verification.
class LoadProfile {
public:
    double operator()(double t_hours) const; // clamped to [0, 1]
    double raw(double t_hours) const;
    double derivative(double t_hours) const;
    double second_derivative(double t_hours) const;
    double period() const { return period_; }

    friend LoadProfile fit_periodic_spline(const LoadTrace& trace);

private:
    // Knots plus second-derivative moments of the cyclic system.
    std::vector<double> t_, y_, m_;
    double period_ = 168.0;

    int interval_of(double& t) const; // wraps t into [t_[0], t_[0]+period)
};

LoadProfile fit_periodic_spline(const LoadTrace& trace);

/// Peak-per-subinterval discretization with step dt.
struct StepLoad {
    double step_hours = 1.0;
    std::vector<double> peaks; // one per [k*dt, (k+1)*dt), length ceil(period/dt)
};

/// Peaks found by dense sampling (grid of at most one minute) plus
/// golden-section refinement around the best grid point.
StepLoad discretize(const LoadProfile& profile, double step_hours);

struct LoadStats {
    double total_load = 0.0;  // integral of the clamped profile over one period
    double mean_hourly = 0.0; // total_load / period
};

/// Adaptive quadrature of the clamped profile, absolute tolerance 1e-6.
LoadStats stats(const LoadProfile& profile);

/// Synthetic diurnal profile (daily fundamental plus two harmonics and a
/// weekly modulation, seeded phases) whose mean load lands within 2% of
/// target_mean. Deterministic for a given (target, seed, period).
LoadProfile synthesize_profile(double target_mean, std::uint64_t seed,
                               double period_hours = 168.0);

} // namespace coalsim

#endif
