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

#include "coalsim/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

namespace coalsim {

namespace {

struct ClassGroup {
    double min_rate = 0.0;     // D
    double revenue = 0.0;      // R
    std::vector<int> users;    // original user indices, ascending
};

// Penalty of serving `counts` users per class from a single capacity pool,
// rates granted greedily in R/D priority order (classes pre-sorted).
double pool_penalty(const std::vector<ClassGroup>& cls, const std::vector<int>& counts,
                    double cap) {
    double pen = 0.0;
    for (size_t k = 0; k < cls.size(); ++k) {
        if (counts[k] == 0) continue;
        double want = counts[k] * cls[k].min_rate;
        double take = std::min(want, cap);
        pen += cls[k].revenue * (counts[k] - take / cls[k].min_rate);
        cap -= take;
        if (cap <= 0.0) cap = 0.0;
    }
    return pen;
}

struct StationRef {
    int orig = 0;
    double cap = 0.0;
    double beta_cost = 0.0;  // beta * E, $/hour per attached user
};

// Branch-and-bound over per-class user counts for one fixed switch-on set.
// Stations are processed in ascending beta_cost; the bound pools the
// remaining stations' capacity and prices unplaced users at the cheapest
// remaining attachment cost.
class OnSetSearch {
public:
    OnSetSearch(const std::vector<ClassGroup>& cls, std::vector<StationRef> stations,
                double fixed_cost, double prune_eps)
        : cls_(cls), st_(std::move(stations)), fixed_(fixed_cost), eps_(prune_eps) {
        K_ = static_cast<int>(cls_.size());
        B_ = static_cast<int>(st_.size());
        suffix_min_beta_.assign(B_ + 1, 1e300);
        suffix_cap_.assign(B_ + 1, 0.0);
        for (int j = B_ - 1; j >= 0; --j) {
            suffix_min_beta_[j] = std::min(suffix_min_beta_[j + 1], st_[j].beta_cost);
            suffix_cap_[j] = suffix_cap_[j + 1] + st_[j].cap;
        }
        cur_m_.assign(B_, std::vector<int>(K_, 0));
    }

    // Runs the search against (and possibly improving) the incumbent.
    // Returns true if a better assignment was found.
    bool run(std::vector<int> counts, double& best,
             std::vector<std::pair<int, std::vector<int>>>& best_assign) {
        best_ = best;
        improved_ = false;
        total_ = 0;
        for (int c : counts) total_ += c;
        seed_heuristic(counts);
        dfs_station(0, counts, total_, fixed_);
        if (improved_) {
            best = best_;
            best_assign.clear();
            for (int j = 0; j < B_; ++j) best_assign.emplace_back(st_[j].orig, best_m_[j]);
        }
        return improved_;
    }

private:
    double station_cost(int j, const std::vector<int>& m) const {
        int n = 0;
        for (int c : m) n += c;
        return st_[j].beta_cost * n + pool_penalty(cls_, m, st_[j].cap);
    }

    void seed_heuristic(const std::vector<int>& counts) {
        std::vector<int> rem = counts;
        std::vector<std::vector<int>> m(B_, std::vector<int>(K_, 0));
        for (int j = 0; j < B_; ++j) {
            double capleft = st_[j].cap;
            for (int k = 0; k < K_; ++k) {
                int nfit = static_cast<int>(std::floor(capleft / cls_[k].min_rate + 1e-12));
                nfit = std::min(nfit, rem[k]);
                if (nfit <= 0) continue;
                m[j][k] += nfit;
                rem[k] -= nfit;
                capleft -= nfit * cls_[k].min_rate;
            }
        }
        for (int k = 0; k < K_; ++k) { m[0][k] += rem[k]; rem[k] = 0; }
        double obj = fixed_;
        for (int j = 0; j < B_; ++j) obj += station_cost(j, m[j]);
        if (obj < best_ - eps_) {
            best_ = obj;
            best_m_ = m;
            improved_ = true;
        }
    }

    void dfs_station(int j, std::vector<int>& rem, int rem_total, double acc) {
        double lb = acc + rem_total * suffix_min_beta_[j] +
                    pool_penalty(cls_, rem, suffix_cap_[j]);
        if (lb >= best_ - eps_) return;
        if (j == B_ - 1) {
            cur_m_[j] = rem;
            double obj = acc + station_cost(j, rem);
            if (obj < best_ - eps_) {
                best_ = obj;
                best_m_ = cur_m_;
                improved_ = true;
            }
            return;
        }
        pen_lb_ = pool_penalty(cls_, rem, suffix_cap_[j]);
        // Identical stations are interchangeable: force count vectors to be
        // lexicographically non-increasing across them.
        bool sym = j > 0 && st_[j].cap == st_[j - 1].cap &&
                   st_[j].beta_cost == st_[j - 1].beta_cost;
        dfs_class(j, 0, rem, rem_total, 0, acc, sym);
    }

    void dfs_class(int j, int k, std::vector<int>& rem, int rem_total, int placed,
                   double acc, bool tight) {
        if (k == static_cast<int>(cls_.size())) {
            double acc2 = acc + st_[j].beta_cost * placed +
                          pool_penalty(cls_, cur_m_[j], st_[j].cap);
            dfs_station(j + 1, rem, rem_total, acc2);
            return;
        }
        int hi = rem[k];
        if (tight) hi = std::min(hi, cur_m_[j - 1][k]);
        for (int c = hi; c >= 0; --c) {
            cur_m_[j][k] = c;
            rem[k] -= c;
            double optimistic = acc + st_[j].beta_cost * (placed + c) +
                                (rem_total - placed - c) * suffix_min_beta_[j] + pen_lb_;
            if (optimistic < best_ - eps_) {
                double saved_pen_lb = pen_lb_;
                dfs_class(j, k + 1, rem, rem_total - c, placed + c, acc,
                          tight && c == cur_m_[j - 1][k]);
                pen_lb_ = saved_pen_lb;
            }
            rem[k] += c;
        }
        cur_m_[j][k] = 0;
    }

    const std::vector<ClassGroup>& cls_;
    std::vector<StationRef> st_;
    double fixed_, eps_;
    int K_ = 0, B_ = 0;
    std::vector<double> suffix_min_beta_, suffix_cap_;
    std::vector<std::vector<int>> cur_m_, best_m_;
    double best_ = 0.0, pen_lb_ = 0.0;
    bool improved_ = false;
    int total_ = 0;
};

std::vector<ClassGroup> group_classes(const AllocationInstance& inst) {
    std::map<std::pair<double, double>, std::vector<int>> by_key;
    for (size_t j = 0; j < inst.users.size(); ++j) {
        const auto& c = inst.users[j].cls;
        if (!(c.min_rate_mbps > 0.0))
            throw std::invalid_argument("allocation: user min rate must be > 0");
        by_key[{c.min_rate_mbps, c.revenue_rate}].push_back(static_cast<int>(j));
    }
    std::vector<ClassGroup> cls;
    for (auto& [key, idx] : by_key)
        cls.push_back({key.first, key.second, std::move(idx)});
    // Greedy priority: highest revenue per Mbps first; deterministic ties.
    std::sort(cls.begin(), cls.end(), [](const ClassGroup& a, const ClassGroup& b) {
        double ra = a.revenue / a.min_rate, rb = b.revenue / b.min_rate;
        if (ra != rb) return ra > rb;
        if (a.min_rate != b.min_rate) return a.min_rate < b.min_rate;
        return a.revenue > b.revenue;
    });
    return cls;
}

// Builds the per-user solution from per-(station, class) counts. Users of
// a class go to stations in ascending station order, lowest index first;
// rates are granted greedily per station in class priority order.
AllocationSolution materialize(const AllocationInstance& inst,
                               const std::vector<ClassGroup>& cls,
                               std::uint32_t on_mask,
                               const std::vector<std::pair<int, std::vector<int>>>& assign) {
    const int S = static_cast<int>(inst.stations.size());
    const int U = static_cast<int>(inst.users.size());
    AllocationSolution sol;
    sol.on_flags.assign(S, 0);
    sol.assignment.assign(U, -1);
    sol.rates.assign(U, 0.0);
    for (int i = 0; i < S; ++i) sol.on_flags[i] = (on_mask >> i) & 1u;

    // counts indexed [station][class]
    std::vector<std::vector<int>> m(S, std::vector<int>(cls.size(), 0));
    for (const auto& [orig, counts] : assign)
        for (size_t k = 0; k < counts.size(); ++k) m[orig][k] += counts[k];

    for (size_t k = 0; k < cls.size(); ++k) {
        size_t next = 0;
        for (int i = 0; i < S; ++i) {
            for (int c = 0; c < m[i][k]; ++c) {
                if (next >= cls[k].users.size())
                    throw std::logic_error("allocation: class count mismatch");
                sol.assignment[cls[k].users[next++]] = i;
            }
        }
    }

    for (int i = 0; i < S; ++i) {
        double capleft = inst.stations[i].capacity_mbps;
        for (size_t k = 0; k < cls.size(); ++k) {
            for (int j : cls[k].users) {
                if (sol.assignment[j] != i) continue;
                double d = std::min(cls[k].min_rate, capleft);
                if (d < 0.0) d = 0.0;
                sol.rates[j] = d;
                capleft -= d;
            }
        }
    }

    // Recompute the objective from the materialized solution.
    double obj = 0.0;
    std::vector<int> heads(S, 0);
    for (int j = 0; j < U; ++j) {
        if (sol.assignment[j] >= 0) ++heads[sol.assignment[j]];
        obj += (1.0 - sol.rates[j] / inst.users[j].cls.min_rate_mbps) *
               inst.users[j].cls.revenue_rate;
    }
    for (int i = 0; i < S; ++i)
        if (sol.on_flags[i])
            obj += power_draw(inst.stations[i], heads[i]) * inst.stations[i].energy_price;
    sol.objective = obj;
    sol.status = SolveStatus::optimal;
    return sol;
}

} // namespace

AllocationInstance build_instance(const std::vector<NetworkOperator>& operators,
                                  const std::vector<int>& members,
                                  const std::vector<UserDemand>& users) {
    if (members.empty())
        throw std::invalid_argument("build_instance: empty coalition");
    AllocationInstance inst;
    for (int m : members) {
        if (m < 0 || m >= static_cast<int>(operators.size()))
            throw std::invalid_argument("build_instance: member index out of range");
        inst.stations.push_back(operators[m].bs);
    }
    for (const auto& u : users) {
        if (std::find(members.begin(), members.end(), u.owner) == members.end())
            throw std::invalid_argument("build_instance: user owned by a non-member");
        inst.users.push_back(u);
    }
    inst.big_u = static_cast<int>(inst.users.size());
    return inst;
}

AllocationSolution solve_exact(const AllocationInstance& inst, double tol) {
    if (tol < 1e-9 || tol > 1e-4)
        throw std::invalid_argument("solve_exact: tol outside [1e-9, 1e-4]");
    if (inst.big_u != static_cast<int>(inst.users.size()))
        throw std::invalid_argument("solve_exact: big_u does not match user count");
    for (const auto& s : inst.stations) s.check();

    const int S = static_cast<int>(inst.stations.size());
    const int U = static_cast<int>(inst.users.size());
    if (S == 0) throw std::invalid_argument("solve_exact: no stations");
    if (U == 0) {
        AllocationSolution sol;
        sol.on_flags.assign(S, 0);
        sol.status = SolveStatus::optimal;
        return sol;
    }

    std::vector<ClassGroup> cls = group_classes(inst);
    std::vector<int> counts(cls.size());
    for (size_t k = 0; k < cls.size(); ++k)
        counts[k] = static_cast<int>(cls[k].users.size());
    double sum_revenue = 0.0;
    for (const auto& u : inst.users) sum_revenue += u.cls.revenue_rate;

    const double eps = 1e-12;
    // All-off, serve nobody: always available at full penalty.
    double best = sum_revenue;
    std::uint32_t best_mask = 0;
    std::vector<std::pair<int, std::vector<int>>> best_assign;

    for (std::uint32_t mask = 1; mask < (1u << S); ++mask) {
        double fixed = 0.0;
        std::vector<StationRef> st;
        for (int i = 0; i < S; ++i) {
            if (!((mask >> i) & 1u)) continue;
            const auto& bs = inst.stations[i];
            fixed += bs.static_power_kw * bs.energy_price;
            st.push_back({i, bs.capacity_mbps,
                          bs.per_user_power_kw * bs.energy_price});
        }
        std::sort(st.begin(), st.end(), [](const StationRef& a, const StationRef& b) {
            if (a.beta_cost != b.beta_cost) return a.beta_cost < b.beta_cost;
            return a.orig < b.orig;
        });
        OnSetSearch search(cls, std::move(st), fixed, eps);
        if (search.run(counts, best, best_assign)) best_mask = mask;
    }

    if (best_mask == 0) {
        AllocationSolution sol;
        sol.on_flags.assign(S, 0);
        sol.assignment.assign(U, -1);
        sol.rates.assign(U, 0.0);
        sol.objective = sum_revenue;
        sol.status = SolveStatus::optimal;
        return sol;
    }
    return materialize(inst, cls, best_mask, best_assign);
}

AllocationSolution solve_bruteforce(const AllocationInstance& inst) {
    const int S = static_cast<int>(inst.stations.size());
    const int U = static_cast<int>(inst.users.size());
    if (S > 3 || U > 7)
        throw std::invalid_argument("solve_bruteforce: instance beyond enumeration bound");
    if (S == 0) throw std::invalid_argument("solve_bruteforce: no stations");

    double sum_revenue = 0.0;
    for (const auto& u : inst.users) sum_revenue += u.cls.revenue_rate;

    // Priority order for the greedy fractional rule.
    std::vector<int> order(U);
    for (int j = 0; j < U; ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        double ra = inst.users[a].cls.revenue_rate / inst.users[a].cls.min_rate_mbps;
        double rb = inst.users[b].cls.revenue_rate / inst.users[b].cls.min_rate_mbps;
        if (ra != rb) return ra > rb;
        return a < b;
    });

    double best = sum_revenue;
    std::uint32_t best_mask = 0;
    std::vector<int> best_asg;

    std::vector<int> asg(U, 0);
    for (std::uint32_t mask = 1; mask < (1u << S); ++mask) {
        std::vector<int> onlist;
        double base = 0.0;
        for (int i = 0; i < S; ++i)
            if ((mask >> i) & 1u) {
                onlist.push_back(i);
                base += inst.stations[i].static_power_kw * inst.stations[i].energy_price;
            }
        const int W = static_cast<int>(onlist.size());
        std::fill(asg.begin(), asg.end(), 0);
        while (true) {
            double cost = base;
            std::vector<double> capleft(S);
            for (int i : onlist) capleft[i] = inst.stations[i].capacity_mbps;
            for (int j = 0; j < U; ++j) {
                int bs = onlist[asg[j]];
                cost += inst.stations[bs].per_user_power_kw * inst.stations[bs].energy_price;
            }
            for (int j : order) {
                int bs = onlist[asg[j]];
                double d = std::min(inst.users[j].cls.min_rate_mbps, capleft[bs]);
                capleft[bs] -= d;
                cost += (1.0 - d / inst.users[j].cls.min_rate_mbps) *
                        inst.users[j].cls.revenue_rate;
            }
            if (cost < best - 1e-12) {
                best = cost;
                best_mask = mask;
                best_asg = asg;
            }
            // odometer over assignments
            int p = 0;
            while (p < U && ++asg[p] == W) asg[p++] = 0;
            if (p == U || U == 0) break;
        }
    }

    AllocationSolution sol;
    sol.on_flags.assign(S, 0);
    sol.assignment.assign(U, -1);
    sol.rates.assign(U, 0.0);
    sol.status = SolveStatus::optimal;
    if (best_mask == 0) {
        sol.objective = sum_revenue;
        return sol;
    }
    std::vector<int> onlist;
    for (int i = 0; i < S; ++i)
        if ((best_mask >> i) & 1u) { onlist.push_back(i); sol.on_flags[i] = 1; }
    std::vector<double> capleft(S);
    for (int i : onlist) capleft[i] = inst.stations[i].capacity_mbps;
    for (int j = 0; j < U; ++j) sol.assignment[j] = onlist[best_asg[j]];
    for (int j : order) {
        int bs = sol.assignment[j];
        double d = std::min(inst.users[j].cls.min_rate_mbps, capleft[bs]);
        capleft[bs] -= d;
        sol.rates[j] = d;
    }
    double obj = 0.0;
    std::vector<int> heads(S, 0);
    for (int j = 0; j < U; ++j) {
        ++heads[sol.assignment[j]];
        obj += (1.0 - sol.rates[j] / inst.users[j].cls.min_rate_mbps) *
               inst.users[j].cls.revenue_rate;
    }
    for (int i : onlist)
        obj += power_draw(inst.stations[i], heads[i]) * inst.stations[i].energy_price;
    sol.objective = obj;
    return sol;
}

std::vector<std::string> validate(const AllocationInstance& inst,
                                  const AllocationSolution& sol, double tol) {
    std::vector<std::string> bad;
    const int S = static_cast<int>(inst.stations.size());
    const int U = static_cast<int>(inst.users.size());
    if (static_cast<int>(sol.on_flags.size()) != S ||
        static_cast<int>(sol.assignment.size()) != U ||
        static_cast<int>(sol.rates.size()) != U) {
        bad.push_back("shape mismatch between instance and solution");
        return bad;
    }
    bool any_on = false;
    for (auto f : sol.on_flags) any_on = any_on || f;

    std::vector<double> load(S, 0.0);
    for (int j = 0; j < U; ++j) {
        int a = sol.assignment[j];
        double d = sol.rates[j];
        double D = inst.users[j].cls.min_rate_mbps;
        if (a < -1 || a >= S) {
            bad.push_back("user " + std::to_string(j) + ": assignment out of range");
            continue;
        }
        if (a == -1) {
            if (any_on)
                bad.push_back("user " + std::to_string(j) +
                              ": not served by exactly one station");
            if (d > tol)
                bad.push_back("user " + std::to_string(j) + ": rate without assignment");
            continue;
        }
        if (!sol.on_flags[a])
            bad.push_back("user " + std::to_string(j) +
                          ": assigned to a switched-off station");
        if (d < -tol)
            bad.push_back("user " + std::to_string(j) + ": negative rate");
        if (d > D + tol)
            bad.push_back("user " + std::to_string(j) + ": rate above requested");
        load[a] += std::max(d, 0.0);
    }
    for (int i = 0; i < S; ++i)
        if (load[i] > inst.stations[i].capacity_mbps + tol)
            bad.push_back("station " + std::to_string(i) + ": capacity exceeded");
    return bad;
}

std::string export_milp_text(const AllocationInstance& inst) {
    const int S = static_cast<int>(inst.stations.size());
    const int U = static_cast<int>(inst.users.size());
    auto num = [](double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.12g", v);
        return std::string(buf);
    };
    std::ostringstream os;
    os << "\\ coalition user-to-station allocation\n";
    os << "Minimize\n obj:";
    bool first = true;
    auto term = [&](double coef, const std::string& var) {
        if (coef == 0.0) return;
        if (coef >= 0.0)
            os << (first ? " " : " + ") << num(coef) << " " << var;
        else
            os << " - " << num(-coef) << " " << var;
        first = false;
    };
    double sum_revenue = 0.0;
    for (int i = 0; i < S; ++i) {
        const auto& bs = inst.stations[i];
        term(bs.static_power_kw * bs.energy_price, "b" + std::to_string(i));
        for (int j = 0; j < U; ++j)
            term(bs.per_user_power_kw * bs.energy_price,
                 "u" + std::to_string(i) + "_" + std::to_string(j));
    }
    for (int j = 0; j < U; ++j) {
        sum_revenue += inst.users[j].cls.revenue_rate;
        for (int i = 0; i < S; ++i)
            term(-inst.users[j].cls.revenue_rate / inst.users[j].cls.min_rate_mbps,
                 "d" + std::to_string(i) + "_" + std::to_string(j));
    }
    if (sum_revenue > 0.0) term(sum_revenue, "one");
    os << "\nSubject To\n";
    for (int i = 0; i < S; ++i) {
        os << " cap" << i << ":";
        for (int j = 0; j < U; ++j)
            os << (j ? " + " : " ") << "d" << i << "_" << j;
        if (U == 0) os << " 0 b" << i;
        os << " <= " << num(inst.stations[i].capacity_mbps) << "\n";
    }
    for (int j = 0; j < U; ++j) {
        os << " asg" << j << ":";
        for (int i = 0; i < S; ++i)
            os << (i ? " + " : " ") << "u" << i << "_" << j;
        os << " = 1\n";
    }
    for (int i = 0; i < S; ++i) {
        if (U == 0) continue;
        os << " act" << i << ":";
        for (int j = 0; j < U; ++j)
            os << (j ? " + " : " ") << "u" << i << "_" << j;
        os << " - " << U << " b" << i << " <= 0\n";
    }
    for (int i = 0; i < S; ++i)
        for (int j = 0; j < U; ++j) {
            os << " rate" << i << "_" << j << ": d" << i << "_" << j << " - "
               << num(inst.users[j].cls.min_rate_mbps) << " u" << i << "_" << j
               << " <= 0\n";
            os << " link" << i << "_" << j << ": u" << i << "_" << j << " - b" << i
               << " <= 0\n";
        }
    os << "Bounds\n";
    if (sum_revenue > 0.0) os << " one = 1\n";
    os << "Binary\n";
    for (int i = 0; i < S; ++i) os << " b" << i << "\n";
    for (int i = 0; i < S; ++i)
        for (int j = 0; j < U; ++j) os << " u" << i << "_" << j << "\n";
    os << "End\n";
    return os.str();
}

} // namespace coalsim
