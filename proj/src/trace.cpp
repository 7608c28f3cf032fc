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

#include "coalsim/trace.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace coalsim {

namespace {

constexpr double kPi = 3.14159265358979323846;

double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// Cyclic tridiagonal solve (Sherman-Morrison over the Thomas algorithm).
// diag/sub/sup are the n central bands; corner_lo couples row 0 with
// column n-1 and corner_hi row n-1 with column 0.
std::vector<double> solve_cyclic_tridiagonal(std::vector<double> diag,
                                             const std::vector<double>& sub,
                                             const std::vector<double>& sup,
                                             double corner_lo, double corner_hi,
                                             std::vector<double> rhs) {
    const int n = static_cast<int>(diag.size());
    auto thomas = [&](std::vector<double> d, std::vector<double> r) {
        std::vector<double> c(n, 0.0);
        for (int i = 1; i < n; ++i) {
            if (std::abs(d[i - 1]) < 1e-300)
                throw std::runtime_error("spline system is singular");
            double w = sub[i] / d[i - 1];
            d[i] -= w * sup[i - 1];
            r[i] -= w * r[i - 1];
        }
        std::vector<double> x(n);
        x[n - 1] = r[n - 1] / d[n - 1];
        for (int i = n - 2; i >= 0; --i) x[i] = (r[i] - sup[i] * x[i + 1]) / d[i];
        return x;
    };

    const double gamma = -diag[0];
    diag[0] -= gamma;
    diag[n - 1] -= corner_lo * corner_hi / gamma;
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = corner_hi;

    std::vector<double> y = thomas(diag, std::move(rhs));
    std::vector<double> z = thomas(diag, u);

    double fact = (y[0] + corner_lo * y[n - 1] / gamma) /
                  (1.0 + z[0] + corner_lo * z[n - 1] / gamma);
    for (int i = 0; i < n; ++i) y[i] -= fact * z[i];
    return y;
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double whole, double tol,
                        int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, tol * 0.5, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, tol * 0.5, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    double m = 0.5 * (a + b);
    double fa = f(a), fm = f(m), fb = f(b);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

} // namespace

LoadTrace parse_trace(std::istream& in, double period_hours) {
    if (!(period_hours > 0.0))
        throw std::invalid_argument("parse_trace: period must be > 0");
    LoadTrace trace;
    trace.period_hours = period_hours;
    std::string line;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        if (line[first] == '#') continue;
        std::string body = line.substr(first);
        while (!body.empty() && (body.back() == '\r' || body.back() == ' ')) body.pop_back();
        if (!header_seen) {
            header_seen = true;
            if (body.rfind("time_hours", 0) == 0) continue; // header row
        }
        auto comma = body.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("parse_trace: line " + std::to_string(lineno) +
                                     ": expected 'time,load'");
        double t, l;
        try {
            size_t used = 0;
            t = std::stod(body.substr(0, comma), &used);
            l = std::stod(body.substr(comma + 1), &used);
        } catch (const std::exception&) {
            throw std::runtime_error("parse_trace: line " + std::to_string(lineno) +
                                     ": malformed number");
        }
        if (l < 0.0 || l > 1.0)
            throw std::runtime_error("parse_trace: line " + std::to_string(lineno) +
                                     ": load outside [0, 1]");
        if (t < 0.0 || t >= period_hours)
            throw std::runtime_error("parse_trace: line " + std::to_string(lineno) +
                                     ": time outside [0, period)");
        if (!trace.samples.empty() && t <= trace.samples.back().first)
            throw std::runtime_error("parse_trace: line " + std::to_string(lineno) +
                                     ": times must be strictly increasing");
        trace.samples.emplace_back(t, l);
    }
    if (trace.samples.size() < 4)
        throw std::runtime_error("parse_trace: need at least 4 samples, got " +
                                 std::to_string(trace.samples.size()));
    return trace;
}

LoadProfile fit_periodic_spline(const LoadTrace& trace) {
    const int n = static_cast<int>(trace.samples.size());
    if (n < 4) throw std::invalid_argument("fit_periodic_spline: need at least 4 samples");

    LoadProfile p;
    p.period_ = trace.period_hours;
    p.t_.resize(n);
    p.y_.resize(n);
    for (int i = 0; i < n; ++i) {
        p.t_[i] = trace.samples[i].first;
        p.y_[i] = trace.samples[i].second;
    }

    // Interval widths, wrapping the last knot to t0 + period.
    std::vector<double> h(n);
    for (int i = 0; i < n - 1; ++i) h[i] = p.t_[i + 1] - p.t_[i];
    h[n - 1] = p.period_ - p.t_[n - 1] + p.t_[0];
    for (double hi : h)
        if (!(hi > 0.0)) throw std::runtime_error("fit_periodic_spline: duplicate knots");

    // Second-derivative moments from the cyclic C2 conditions.
    std::vector<double> diag(n), sub(n), sup(n), rhs(n);
    for (int i = 0; i < n; ++i) {
        double h_prev = h[(i + n - 1) % n];
        double y_prev = p.y_[(i + n - 1) % n];
        double y_next = p.y_[(i + 1) % n];
        sub[i] = h_prev;
        diag[i] = 2.0 * (h_prev + h[i]);
        sup[i] = h[i];
        rhs[i] = 6.0 * ((y_next - p.y_[i]) / h[i] - (p.y_[i] - y_prev) / h_prev);
    }
    p.m_ = solve_cyclic_tridiagonal(diag, sub, sup, sub[0], sup[n - 1], rhs);
    return p;
}

int LoadProfile::interval_of(double& t) const {
    const int n = static_cast<int>(t_.size());
    t = std::fmod(t - t_[0], period_);
    if (t < 0.0) t += period_;
    t += t_[0];
    // t in [t0, t0 + period); find knot interval (last one wraps).
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    int i = static_cast<int>(it - t_.begin()) - 1;
    if (i < 0) i = 0;
    if (i >= n) i = n - 1;
    return i;
}

double LoadProfile::raw(double t) const {
    const int n = static_cast<int>(t_.size());
    int i = interval_of(t);
    int j = (i + 1) % n;
    double h = (i == n - 1) ? period_ - t_[n - 1] + t_[0] : t_[j] - t_[i];
    double a = (i == n - 1) ? t_[n - 1] : t_[i];
    double x0 = t - a, x1 = h - x0;
    return m_[i] * x1 * x1 * x1 / (6.0 * h) + m_[j] * x0 * x0 * x0 / (6.0 * h) +
           (y_[i] / h - m_[i] * h / 6.0) * x1 + (y_[j] / h - m_[j] * h / 6.0) * x0;
}

double LoadProfile::operator()(double t) const { return clamp01(raw(t)); }

double LoadProfile::derivative(double t) const {
    const int n = static_cast<int>(t_.size());
    int i = interval_of(t);
    int j = (i + 1) % n;
    double h = (i == n - 1) ? period_ - t_[n - 1] + t_[0] : t_[j] - t_[i];
    double a = (i == n - 1) ? t_[n - 1] : t_[i];
    double x0 = t - a, x1 = h - x0;
    return -m_[i] * x1 * x1 / (2.0 * h) + m_[j] * x0 * x0 / (2.0 * h) -
           (y_[i] / h - m_[i] * h / 6.0) + (y_[j] / h - m_[j] * h / 6.0);
}

double LoadProfile::second_derivative(double t) const {
    const int n = static_cast<int>(t_.size());
    int i = interval_of(t);
    int j = (i + 1) % n;
    double h = (i == n - 1) ? period_ - t_[n - 1] + t_[0] : t_[j] - t_[i];
    double a = (i == n - 1) ? t_[n - 1] : t_[i];
    double x0 = t - a, x1 = h - x0;
    return m_[i] * x1 / h + m_[j] * x0 / h;
}

StepLoad discretize(const LoadProfile& profile, double step_hours) {
    if (!(step_hours > 0.0))
        throw std::invalid_argument("discretize: step must be > 0");
    const double period = profile.period();
    const int n_steps = static_cast<int>(std::ceil(period / step_hours - 1e-9));
    if (n_steps > 10000)
        throw std::invalid_argument("discretize: more than 10000 subintervals");

    StepLoad out;
    out.step_hours = step_hours;
    out.peaks.resize(n_steps);

    const double grid = std::min(1.0 / 60.0, step_hours / 50.0);
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;

    for (int k = 0; k < n_steps; ++k) {
        double a = k * step_hours;
        double b = std::min((k + 1) * step_hours, period);
        double best_t = a, best_v = profile(a);
        for (double t = a; t < b; t += grid) {
            double v = profile(t);
            if (v > best_v) { best_v = v; best_t = t; }
        }
        // Golden-section refinement on the bracket around the best point.
        double lo = std::max(a, best_t - grid), hi = std::min(b, best_t + grid);
        double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
        double f1 = profile(x1), f2 = profile(x2);
        for (int it = 0; it < 60 && hi - lo > 1e-10; ++it) {
            if (f1 < f2) {
                lo = x1; x1 = x2; f1 = f2;
                x2 = lo + phi * (hi - lo); f2 = profile(x2);
            } else {
                hi = x2; x2 = x1; f2 = f1;
                x1 = hi - phi * (hi - lo); f1 = profile(x1);
            }
        }
        out.peaks[k] = clamp01(std::max(best_v, std::max(f1, f2)));
    }
    return out;
}

LoadStats stats(const LoadProfile& profile) {
    const double period = profile.period();
    std::function<double(double)> f = [&](double t) { return profile(t); };
    // Integrate per hour so the clamp kinks stay local.
    const int chunks = std::max(1, static_cast<int>(std::ceil(period)));
    double total = 0.0;
    for (int c = 0; c < chunks; ++c) {
        double a = period * c / chunks;
        double b = period * (c + 1) / chunks;
        total += integrate(f, a, b, 1e-6 / chunks);
    }
    return {total, total / period};
}

LoadProfile synthesize_profile(double target_mean, std::uint64_t seed,
                               double period_hours) {
    if (!(target_mean > 0.0) || target_mean > 1.0)
        throw std::invalid_argument("synthesize_profile: target mean outside (0, 1]");
    if (!(period_hours > 0.0))
        throw std::invalid_argument("synthesize_profile: period must be > 0");

    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 0x2545F4914F6CDD1DULL);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double p1 = phase(rng), p2 = phase(rng), p3 = phase(rng), p4 = phase(rng);
    const double a2 = 0.15 + 0.15 * unit(rng);
    const double a3 = 0.05 + 0.10 * unit(rng);

    auto shape = [&](double t) {
        return 0.55 * std::sin(2.0 * kPi * t / 24.0 + p1) +
               a2 * std::sin(4.0 * kPi * t / 24.0 + p2) +
               a3 * std::sin(6.0 * kPi * t / 24.0 + p3) +
               0.05 * std::sin(2.0 * kPi * t / period_hours + p4);
    };

    const int n = std::max(8, static_cast<int>(std::round(period_hours * 2.0)));
    const double dt = period_hours / n;

    double amplitude = 1.5 * std::min(target_mean, 1.0 - target_mean);
    for (int attempt = 0; attempt < 100; ++attempt) {
        // Offset tuned by bisection: the sample mean of the clamped curve
        // is monotone in the offset.
        auto sample_mean = [&](double c) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += clamp01(c + amplitude * shape(i * dt));
            return s / n;
        };
        double lo = -1.0, hi = 2.0;
        for (int it = 0; it < 80; ++it) {
            double mid = 0.5 * (lo + hi);
            (sample_mean(mid) < target_mean ? lo : hi) = mid;
        }
        double c = 0.5 * (lo + hi);

        LoadTrace trace;
        trace.period_hours = period_hours;
        trace.samples.reserve(n);
        for (int i = 0; i < n; ++i)
            trace.samples.emplace_back(i * dt, clamp01(c + amplitude * shape(i * dt)));
        LoadProfile profile = fit_periodic_spline(trace);
        double mean = stats(profile).mean_hourly;
        if (std::abs(mean - target_mean) <= 0.02 * target_mean) return profile;
        amplitude *= 0.8; // heavy clipping; flatten and retry
    }
    throw std::runtime_error("synthesize_profile: target mean unattainable");
}

} // namespace coalsim
