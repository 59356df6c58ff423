#include "eqgrid/sched.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "eqgrid/parallel.hpp"

namespace eqgrid::sched {

using model::GlobalParams;
using model::Household;

std::string to_string(ScheduleStatus s) {
    switch (s) {
        case ScheduleStatus::Optimal: return "Optimal";
        case ScheduleStatus::Infeasible: return "Infeasible";
        case ScheduleStatus::RelaxedFeasible: return "RelaxedFeasible";
    }
    return "Infeasible";
}

double Schedule::solar_power(const Scenario& sc, int i, int t) const {
    double acc = 0.0;
    for (int s = 0; s < static_cast<int>(alpha.size()); ++s)
        acc += alpha[s][i][t] * sc.solar[s].generation[t];
    return acc;
}

double Schedule::discharge_total(int i, int t) const {
    double acc = 0.0;
    for (const auto& unit : p_discharge) acc += unit[i][t];
    return acc;
}

double Schedule::charge_total(int i, int t) const {
    double acc = 0.0;
    for (const auto& unit : p_charge) acc += unit[i][t];
    return acc;
}

double Residuals::max_all() const {
    return std::max({balance, soc_recursion, soc_bounds, terminal_soc, ramp,
                     peak_coupling, budget, solar_pool});
}

double utility(const Household& hh, double d, double p_grid) {
    return hh.beta * d - hh.lambda * p_grid;
}

double nem_price(double z, const GlobalParams& p) {
    return z >= 0.0 ? p.pi_plus * z : p.pi_minus * z;
}

// ---------------------------------------------------------------------------
// Problem construction.
//
// Solar allocation is modeled per household as allocated power
// Y(i,t) >= 0 with per-hour pool rows sum_i Y(i,t) <= sum_s P_solar(s,t);
// the per-unit fractions alpha(s,i,t) are recovered after the solve by a
// deterministic fill that respects every unit's availability. The two
// formulations admit exactly the same schedules and objective values.
//
// Ties between alternate optima are broken by variable order (household
// index, then time): a deterministic sub-cent cost perturbation on the
// household-side DER variables. It is orders of magnitude below any real
// price and never reaches the reported cost terms, which are recomputed
// from the primal values against the unperturbed coefficients.
inline constexpr double kLexTieBreak = 2e-3;  // $/MWh across the full rank range

long expected_cols(int N, int S, int B, int T, RelaxRung rung) {
    long cols = static_cast<long>(N) * T;              // grid imports
    if (S > 0) cols += static_cast<long>(N) * T;       // allocated solar power
    if (B > 0) {
        cols += 2L * N * T;                            // household charge/discharge
        cols += 2L * B * T;                            // unit charge/discharge
        cols += static_cast<long>(B) * T;              // state of charge
    }
    cols += 1;                                         // peak
    cols += N;                                         // equity penalties
    if (static_cast<int>(rung) >= 2) cols += static_cast<long>(N) * T;
    if (static_cast<int>(rung) >= 3) cols += static_cast<long>(N) * T;
    return cols;
}

long expected_rows(int N, int S, int B, int T) {
    long rows = static_cast<long>(N) * T;              // balance
    if (S > 0) rows += T;                              // solar pools
    if (B > 0) {
        rows += 2L * T;                                // household/unit linking
        rows += static_cast<long>(B) * T;              // SOC recursion
        rows += 3L * B * T;                            // charge/discharge/combined caps
        rows += 2L * B * T;                            // up/down windows (as printed)
    }
    rows += T;                                         // peak coupling
    rows += static_cast<long>(N) * (T - 1);            // ramp
    rows += static_cast<long>(N) * T;                  // budget
    rows += static_cast<long>(N) * T;                  // Rawlsian floor
    rows += 2L * N;                                    // equity linearization
    rows += N;                                         // individual rationality
    return rows;
}

DispatchProblem build_problem(const Scenario& sc, const EquityWeights& weights,
                              RelaxRung rung, const std::vector<double>* s_out_cache) {
    const int N = sc.num_households();
    const int S = sc.num_solar();
    const int B = sc.num_bess();
    const int T = sc.horizon();
    const GlobalParams& gp = sc.params;

    if (static_cast<int>(weights.size()) != N)
        throw Error("build_problem: weight vector length does not match households");
    for (double w : weights)
        if (!(w >= gp.w_min - 1e-12 && w <= gp.w_max + 1e-12))
            throw Error("build_problem: weight outside [w_min, w_max]");
    for (const auto& hh : sc.households)
        if (static_cast<int>(hh.demand.size()) != T)
            throw Error("build_problem: demand length mismatch");
    for (const auto& su : sc.solar)
        if (static_cast<int>(su.generation.size()) != T)
            throw Error("build_problem: solar series length mismatch");

    DispatchProblem dp;
    dp.N = N; dp.S = S; dp.B = B; dp.T = T;
    dp.rung = rung;
    dp.scenario = sc;
    dp.weights = weights;
    dp.s_out = s_out_cache ? *s_out_cache : outside_options(sc);

    lp::LinearProgram& p = dp.lp;

    // hourly solar pool capacity
    Series pool_cap(T, 0.0);
    for (const auto& su : sc.solar)
        for (int t = 0; t < T; ++t) pool_cap[t] += su.generation[t];

    // ---- variables ----
    dp.off_pgrid = p.num_cols();
    for (int i = 0; i < N; ++i)
        for (int t = 0; t < T; ++t) p.add_col(weights[i] * sc.prices[t], 0.0, kInf);
    auto lex = [&](int i, int t) {
        return kLexTieBreak * static_cast<double>(i * T + t) / (N * T);
    };
    if (S > 0) {
        dp.off_solar = p.num_cols();
        for (int i = 0; i < N; ++i)
            for (int t = 0; t < T; ++t) p.add_col(lex(i, t), 0.0, pool_cap[t]);
    }
    if (B > 0) {
        double fleet_power = 0.0;
        for (const auto& u : sc.bess) fleet_power += u.p_max;
        dp.off_charge_hh = p.num_cols();
        for (int i = 0; i < N; ++i)
            for (int t = 0; t < T; ++t) p.add_col(0.0, 0.0, fleet_power);
        dp.off_discharge_hh = p.num_cols();
        for (int i = 0; i < N; ++i)
            for (int t = 0; t < T; ++t) p.add_col(lex(i, t), 0.0, fleet_power);
        dp.off_charge_unit = p.num_cols();
        for (int b = 0; b < B; ++b)
            for (int t = 0; t < T; ++t) p.add_col(0.0, 0.0, sc.bess[b].p_max);
        dp.off_discharge_unit = p.num_cols();
        for (int b = 0; b < B; ++b)
            for (int t = 0; t < T; ++t) p.add_col(0.0, 0.0, sc.bess[b].p_max);
        dp.off_soc = p.num_cols();
        for (int b = 0; b < B; ++b) {
            const auto& u = sc.bess[b];
            for (int t = 0; t < T; ++t) {
                double lo = u.soc_min_frac * u.capacity_E;
                const double hi = u.soc_max_frac * u.capacity_E;
                if (t == T - 1) lo = std::max(lo, gp.terminal_soc_frac * u.capacity_E);
                p.add_col(0.0, lo, hi);
            }
        }
    }
    dp.off_peak = p.add_col(gp.c_peak, 0.0, kInf);
    dp.off_epen = p.num_cols();
    for (int i = 0; i < N; ++i) p.add_col(sc.households[i].lambda, 0.0, kInf);
    if (static_cast<int>(rung) >= 2) {
        dp.off_floor_slack = p.num_cols();
        for (int i = 0; i < N * T; ++i) p.add_col(kSlackPenalty, 0.0, kInf);
    }
    if (static_cast<int>(rung) >= 3) {
        dp.off_budget_slack = p.num_cols();
        for (int i = 0; i < N * T; ++i) p.add_col(kSlackPenalty, 0.0, kInf);
    }

    std::vector<int> cols;
    std::vector<double> vals;
    auto push = [&](int c, double v) {
        cols.push_back(c);
        vals.push_back(v);
    };
    auto flush_row = [&](double lo, double hi) {
        p.add_row(lo, hi, cols, vals);
        cols.clear();
        vals.clear();
    };

    // ---- energy balance: supply within D (1 +- epsilon) ----
    for (int i = 0; i < N; ++i) {
        for (int t = 0; t < T; ++t) {
            push(dp.pgrid(i, t), 1.0);
            if (S > 0) push(dp.solar(i, t), 1.0);
            if (B > 0) {
                push(dp.discharge_hh(i, t), 1.0);
                push(dp.charge_hh(i, t), -1.0);
            }
            const double d = sc.households[i].demand[t];
            flush_row(d * (1.0 - gp.epsilon), d * (1.0 + gp.epsilon));
        }
    }
    // ---- solar pools ----
    if (S > 0) {
        for (int t = 0; t < T; ++t) {
            for (int i = 0; i < N; ++i) push(dp.solar(i, t), 1.0);
            flush_row(-kInf, pool_cap[t]);
        }
    }
    if (B > 0) {
        // ---- household/unit flow linking ----
        for (int t = 0; t < T; ++t) {
            for (int i = 0; i < N; ++i) push(dp.charge_hh(i, t), 1.0);
            for (int b = 0; b < B; ++b) push(dp.charge_unit(b, t), -1.0);
            flush_row(0.0, 0.0);
        }
        for (int t = 0; t < T; ++t) {
            for (int i = 0; i < N; ++i) push(dp.discharge_hh(i, t), 1.0);
            for (int b = 0; b < B; ++b) push(dp.discharge_unit(b, t), -1.0);
            flush_row(0.0, 0.0);
        }
        // ---- SOC recursion ----
        for (int b = 0; b < B; ++b) {
            const auto& u = sc.bess[b];
            for (int t = 0; t < T; ++t) {
                push(dp.soc(b, t), 1.0);
                if (t > 0) push(dp.soc(b, t - 1), -1.0);
                push(dp.charge_unit(b, t), -u.eta_c);
                push(dp.discharge_unit(b, t), 1.0 / u.eta_d);
                const double rhs = t == 0 ? u.soc_initial : 0.0;
                flush_row(rhs, rhs);
            }
        }
        // ---- per-battery power caps ----
        for (int b = 0; b < B; ++b)
            for (int t = 0; t < T; ++t) {
                push(dp.charge_unit(b, t), 1.0);
                flush_row(-kInf, sc.bess[b].p_max);
            }
        for (int b = 0; b < B; ++b)
            for (int t = 0; t < T; ++t) {
                push(dp.discharge_unit(b, t), 1.0);
                flush_row(-kInf, sc.bess[b].p_max);
            }
        for (int b = 0; b < B; ++b)
            for (int t = 0; t < T; ++t) {
                push(dp.charge_unit(b, t), 1.0);
                push(dp.discharge_unit(b, t), 1.0);
                flush_row(-kInf, sc.bess[b].p_max);
            }
        // ---- minimum up/down windows, as printed (sums of nonnegatives >= 0)
        const int tau = std::max(0, static_cast<int>(std::lround(gp.tau_min)));
        for (int b = 0; b < B; ++b)
            for (int t = 0; t < T; ++t) {
                for (int tp = t; tp <= std::min(T - 1, t + tau); ++tp)
                    push(dp.charge_unit(b, tp), 1.0);
                flush_row(0.0, kInf);
            }
        for (int b = 0; b < B; ++b)
            for (int t = 0; t < T; ++t) {
                for (int tp = t; tp <= std::min(T - 1, t + tau); ++tp)
                    push(dp.discharge_unit(b, tp), 1.0);
                flush_row(0.0, kInf);
            }
    }
    // ---- peak coupling ----
    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < N; ++i) push(dp.pgrid(i, t), 1.0);
        push(dp.off_peak, -1.0);
        flush_row(-kInf, 0.0);
    }
    // ---- ramp limits ----
    for (int i = 0; i < N; ++i)
        for (int t = 1; t < T; ++t) {
            push(dp.pgrid(i, t), 1.0);
            push(dp.pgrid(i, t - 1), -1.0);
            const double lim = gp.r_max * sc.households[i].demand[t];
            flush_row(-lim, lim);
        }
    // ---- per-step budgets ----
    for (int i = 0; i < N; ++i)
        for (int t = 0; t < T; ++t) {
            push(dp.pgrid(i, t), sc.prices[t]);
            if (B > 0) {
                push(dp.charge_hh(i, t), gp.c_bess);
                push(dp.discharge_hh(i, t), gp.c_bess);
            }
            if (dp.off_budget_slack >= 0) push(dp.off_budget_slack + i * T + t, -1.0);
            flush_row(-kInf, sc.households[i].xi);
        }
    // ---- Rawlsian floor on household utility ----
    for (int i = 0; i < N; ++i) {
        const auto& hh = sc.households[i];
        for (int t = 0; t < T; ++t) {
            push(dp.pgrid(i, t), hh.beta - hh.lambda);
            if (S > 0) push(dp.solar(i, t), hh.beta);
            if (B > 0) {
                push(dp.discharge_hh(i, t), hh.beta);
                push(dp.charge_hh(i, t), -hh.beta);
            }
            if (dp.off_floor_slack >= 0) push(dp.off_floor_slack + i * T + t, 1.0);
            flush_row(gp.omega, kInf);
        }
    }
    // ---- equity penalty linearization: E_pen >= |access - theta| ----
    for (int i = 0; i < N; ++i) {
        double denom = 0.0;
        for (int t = 0; t < T; ++t) denom += sc.households[i].demand[t];
        for (int sign = 0; sign < 2; ++sign) {
            const double s = sign == 0 ? 1.0 : -1.0;  // E_pen -+ access >= -+ theta
            push(dp.off_epen + i, 1.0);
            if (denom > 0.0) {
                const double k = -s / denom;
                for (int t = 0; t < T; ++t) {
                    if (S > 0) push(dp.solar(i, t), k);
                    if (B > 0) {
                        push(dp.discharge_hh(i, t), k);
                        push(dp.charge_hh(i, t), -k);
                    }
                }
            }
            flush_row(-s * gp.theta, kInf);
        }
    }
    // ---- individual rationality ----
    for (int i = 0; i < N; ++i) {
        const auto& hh = sc.households[i];
        for (int t = 0; t < T; ++t) {
            push(dp.pgrid(i, t), hh.beta - hh.lambda - sc.prices[t]);
            if (S > 0) push(dp.solar(i, t), hh.beta);
            if (B > 0) {
                push(dp.discharge_hh(i, t), hh.beta - gp.c_bess);
                push(dp.charge_hh(i, t), -hh.beta - gp.c_bess);
            }
        }
        const double lo = static_cast<int>(rung) >= 1 ? -kInf : dp.s_out[i];
        flush_row(lo, kInf);
    }

    return dp;
}

// ---------------------------------------------------------------------------
// Solution extraction.

namespace {

// Distributes each household's allocated solar power over the physical units
// in ascending unit order; fractions then satisfy sum_i alpha <= 1 per unit.
void disaggregate_alpha(const Scenario& sc, const DispatchProblem& dp,
                        const std::vector<double>& x, Schedule& out) {
    const int N = dp.N, S = dp.S, T = dp.T;
    out.alpha.assign(S, std::vector<Series>(N, Series(T, 0.0)));
    if (S == 0 || dp.off_solar < 0) return;
    for (int t = 0; t < T; ++t) {
        std::vector<double> need(N);
        for (int i = 0; i < N; ++i) need[i] = std::max(0.0, x[dp.solar(i, t)]);
        for (int s = 0; s < S; ++s) {
            double avail = sc.solar[s].generation[t];
            if (avail <= 0.0) continue;
            double used = 0.0;
            for (int i = 0; i < N && used < avail; ++i) {
                const double take = std::min(need[i], avail - used);
                if (take <= 0.0) continue;
                out.alpha[s][i][t] = take / sc.solar[s].generation[t];
                need[i] -= take;
                used += take;
            }
        }
    }
}

// Transportation fill: splits hourly household-side totals across unit-side
// totals in ascending (unit, household) order. Both margins agree up to
// solver tolerance by the linking rows, so the fill reproduces them exactly.
void disaggregate_bess(const DispatchProblem& dp, const std::vector<double>& x,
                       Schedule& out, bool charge_side) {
    const int N = dp.N, B = dp.B, T = dp.T;
    auto& tensor = charge_side ? out.p_charge : out.p_discharge;
    for (int t = 0; t < T; ++t) {
        std::vector<double> need(N);
        for (int i = 0; i < N; ++i) {
            const int col = charge_side ? dp.charge_hh(i, t) : dp.discharge_hh(i, t);
            need[i] = std::max(0.0, x[col]);
        }
        for (int b = 0; b < B; ++b) {
            const int col = charge_side ? dp.charge_unit(b, t) : dp.discharge_unit(b, t);
            double avail = std::max(0.0, x[col]);
            for (int i = 0; i < N && avail > 0.0; ++i) {
                const double take = std::min(need[i], avail);
                if (take <= 0.0) continue;
                tensor[b][i][t] = take;
                need[i] -= take;
                avail -= take;
            }
        }
    }
}

Schedule extract(const DispatchProblem& dp, const lp::Solution& sol) {
    const Scenario& sc = dp.scenario;
    const int N = dp.N, B = dp.B, T = dp.T;
    Schedule out;
    const auto& x = sol.x;

    out.p_grid.assign(N, Series(T, 0.0));
    for (int i = 0; i < N; ++i)
        for (int t = 0; t < T; ++t) out.p_grid[i][t] = std::max(0.0, x[dp.pgrid(i, t)]);

    out.p_charge.assign(B, std::vector<Series>(N, Series(T, 0.0)));
    out.p_discharge.assign(B, std::vector<Series>(N, Series(T, 0.0)));
    out.soc.assign(B, Series(T, 0.0));
    if (B > 0) {
        disaggregate_bess(dp, x, out, true);
        disaggregate_bess(dp, x, out, false);
        for (int b = 0; b < B; ++b)
            for (int t = 0; t < T; ++t) out.soc[b][t] = x[dp.soc(b, t)];
    }
    out.p_peak = std::max(0.0, x[dp.off_peak]);
    out.e_pen.assign(N, 0.0);
    for (int i = 0; i < N; ++i) out.e_pen[i] = std::max(0.0, x[dp.off_epen + i]);

    disaggregate_alpha(sc, dp, x, out);

    out.cost_energy = 0.0;
    for (int i = 0; i < N; ++i)
        for (int t = 0; t < T; ++t)
            out.cost_energy += dp.weights[i] * sc.prices[t] * out.p_grid[i][t];
    out.cost_peak = sc.params.c_peak * out.p_peak;
    out.cost_equity = 0.0;
    for (int i = 0; i < N; ++i) out.cost_equity += sc.households[i].lambda * out.e_pen[i];
    out.objective = out.cost_energy + out.cost_peak + out.cost_equity;

    out.relax_rung = dp.rung;
    if (dp.off_floor_slack >= 0) {
        for (int i = 0; i < N; ++i)
            for (int t = 0; t < T; ++t) {
                const double s = x[dp.off_floor_slack + i * T + t];
                if (s > 1e-6) {
                    out.floor_slack_total += s;
                    if (out.relaxed_constraints.size() < 200)
                        out.relaxed_constraints.push_back(
                            "floor[" + std::to_string(i) + "," + std::to_string(t) + "]");
                }
            }
    }
    if (dp.off_budget_slack >= 0) {
        for (int i = 0; i < N; ++i)
            for (int t = 0; t < T; ++t) {
                const double s = x[dp.off_budget_slack + i * T + t];
                if (s > 1e-6) {
                    out.budget_slack_total += s;
                    if (out.relaxed_constraints.size() < 200)
                        out.relaxed_constraints.push_back(
                            "budget[" + std::to_string(i) + "," + std::to_string(t) + "]");
                }
            }
    }
    if (static_cast<int>(dp.rung) >= 1) {
        // name households whose rationality constraint ended up violated
        for (int i = 0; i < N; ++i) {
            double lhs = 0.0;
            const auto& hh = sc.households[i];
            for (int t = 0; t < T; ++t) {
                double supply = out.p_grid[i][t];
                double thr = 0.0;
                if (dp.S > 0) supply += std::max(0.0, x[dp.solar(i, t)]);
                for (int b = 0; b < B; ++b) {
                    supply += out.p_discharge[b][i][t] - out.p_charge[b][i][t];
                    thr += out.p_discharge[b][i][t] + out.p_charge[b][i][t];
                }
                const double payment =
                    sc.prices[t] * out.p_grid[i][t] + sc.params.c_bess * thr;
                lhs += utility(hh, supply, out.p_grid[i][t]) - payment;
            }
            if (lhs < dp.s_out[i] - 1e-6)
                out.relaxed_constraints.push_back("individual_rationality[" +
                                                  std::to_string(i) + "]");
        }
    }

    out.status = dp.rung == RelaxRung::None ? ScheduleStatus::Optimal
                                            : ScheduleStatus::RelaxedFeasible;
    out.lp_iterations = sol.iterations;
    return out;
}

}  // namespace

namespace {

// Lexicographic refinement for relaxed solves: with the achieved total slack
// pinned, re-optimize the true dispatch objective so that the big slack
// penalties cannot swamp its precision.
lp::Solution refine_slack_solution(const DispatchProblem& dp, const lp::Solution& first,
                                   const lp::SolverOptions& options) {
    std::vector<int> slack_cols;
    for (int off : {dp.off_floor_slack, dp.off_budget_slack}) {
        if (off < 0) continue;
        for (int k = 0; k < dp.N * dp.T; ++k) slack_cols.push_back(off + k);
    }
    if (slack_cols.empty()) return first;
    double total = 0.0;
    for (int col : slack_cols) total += first.x[col];

    lp::LinearProgram refined = dp.lp;
    for (int col : slack_cols) refined.set_obj(col, 0.0);
    std::vector<double> ones(slack_cols.size(), 1.0);
    refined.add_row(-kInf, total + 1e-9 * std::max(1.0, total), slack_cols, ones);
    lp::Solution second = lp::solve(refined, options);
    return second.status == lp::SolveStatus::Optimal ? second : first;
}

}  // namespace

Schedule solve(const DispatchProblem& problem, const lp::SolverOptions& options) {
    const DispatchProblem* current = &problem;
    DispatchProblem escalated;
    for (;;) {
        lp::Solution sol = lp::solve(current->lp, options);
        if (sol.status == lp::SolveStatus::Optimal &&
            static_cast<int>(current->rung) >= 2)
            sol = refine_slack_solution(*current, sol, options);
        if (sol.status == lp::SolveStatus::Optimal) {
            Schedule out = extract(*current, sol);
            const Residuals res = compute_residuals(out, current->scenario);
            // relaxed families are allowed to violate their original rows
            double gate = std::max({res.balance, res.soc_recursion, res.soc_bounds,
                                    res.terminal_soc, res.ramp, res.peak_coupling,
                                    res.solar_pool});
            if (static_cast<int>(current->rung) < 3) gate = std::max(gate, res.budget);
            if (gate > 2e-6)
                throw SolverError("dispatch solution exceeds residual gate: " +
                                  std::to_string(gate));
            return out;
        }
        if (sol.status == lp::SolveStatus::Unbounded)
            throw SolverError("dispatch LP unbounded; model construction error");

        // infeasible (or undecided) and ladder exhausted -> report infeasible
        if (current->rung == RelaxRung::BudgetSlack) {
            if (sol.status == lp::SolveStatus::Infeasible) {
                Schedule out;
                out.status = ScheduleStatus::Infeasible;
                out.relax_rung = current->rung;
                return out;
            }
            throw SolverError("dispatch LP failed numerically at final rung: " +
                              lp::to_string(sol.status));
        }
        const auto next = static_cast<RelaxRung>(static_cast<int>(current->rung) + 1);
        escalated = build_problem(current->scenario, current->weights, next,
                                  &current->s_out);
        current = &escalated;
    }
}

// ---------------------------------------------------------------------------
// Strict charge/discharge exclusivity via depth-first branch and bound.

namespace {

struct BnbNode {
    std::vector<std::pair<int, int>> forced_zero_charge;     // (b, t)
    std::vector<std::pair<int, int>> forced_zero_discharge;  // (b, t)
};

void apply_node(const DispatchProblem& base, const BnbNode& node, lp::LinearProgram& lp) {
    for (auto [b, t] : node.forced_zero_charge)
        lp.set_col_bounds(base.charge_unit(b, t), 0.0, 0.0);
    for (auto [b, t] : node.forced_zero_discharge)
        lp.set_col_bounds(base.discharge_unit(b, t), 0.0, 0.0);
}

}  // namespace

Schedule solve_strict_exclusive(const DispatchProblem& base_problem, int max_nodes,
                                const lp::SolverOptions& options) {
    // establish the working relaxation rung first; exclusivity is branched
    // on top of whatever ladder level the instance needs
    Schedule ladder = solve(base_problem, options);
    if (ladder.status == ScheduleStatus::Infeasible) return ladder;
    DispatchProblem problem = base_problem;
    if (ladder.relax_rung != base_problem.rung)
        problem = build_problem(base_problem.scenario, base_problem.weights,
                                ladder.relax_rung, &base_problem.s_out);

    const double tol = 1e-7;
    double best_obj = kInf;
    bool have_best = false;
    Schedule best;

    std::vector<BnbNode> stack{BnbNode{}};
    int nodes = 0;
    while (!stack.empty()) {
        if (++nodes > max_nodes)
            throw SolverError("strict mode: branch-and-bound node limit exceeded");
        BnbNode node = std::move(stack.back());
        stack.pop_back();

        DispatchProblem sub = problem;
        apply_node(problem, node, sub.lp);
        lp::Solution sol = lp::solve(sub.lp, options);
        if (sol.status != lp::SolveStatus::Optimal) continue;  // prune
        if (have_best && sol.objective >= best_obj - 1e-12) continue;

        // find the worst simultaneous charge/discharge violation
        int worst_b = -1, worst_t = -1;
        double worst = tol;
        for (int b = 0; b < problem.B; ++b)
            for (int t = 0; t < problem.T; ++t) {
                const double c = sol.x[problem.charge_unit(b, t)];
                const double d = sol.x[problem.discharge_unit(b, t)];
                const double v = std::min(c, d);
                if (v > worst) {
                    worst = v;
                    worst_b = b;
                    worst_t = t;
                }
            }
        if (worst_b < 0) {
            best_obj = sol.objective;
            have_best = true;
            best = extract(sub, sol);
            continue;
        }
        BnbNode left = node, right = node;
        left.forced_zero_charge.emplace_back(worst_b, worst_t);
        right.forced_zero_discharge.emplace_back(worst_b, worst_t);
        stack.push_back(std::move(left));
        stack.push_back(std::move(right));
    }
    if (!have_best) {
        Schedule out;
        out.status = ScheduleStatus::Infeasible;
        return out;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Outside options and baselines.

double outside_option(const Household& hh, const Series& own_solar, const Series& prices,
                      const GlobalParams& gp) {
    const int T = static_cast<int>(prices.size());
    if (static_cast<int>(own_solar.size()) != T)
        throw Error("outside_option: solar series length mismatch");

    // per step: d = pv + g - e with import g and export e; maximize
    //   beta d - lambda g - Pi_NEM(g - e) - pv  subject to the budget.
    lp::LinearProgram p;
    std::vector<int> d_var(T), g_var(T), e_var(T);
    for (int t = 0; t < T; ++t) {
        d_var[t] = p.add_col(-hh.beta, 0.0, kInf);
        g_var[t] = p.add_col(hh.lambda + gp.pi_plus, 0.0, kInf);
        e_var[t] = p.add_col(-gp.pi_minus, 0.0, kInf);
    }
    std::vector<int> cols;
    std::vector<double> vals;
    for (int t = 0; t < T; ++t) {
        cols = {d_var[t], g_var[t], e_var[t]};
        vals = {1.0, -1.0, 1.0};
        p.add_row(own_solar[t], own_solar[t], cols, vals);
        cols = {g_var[t], e_var[t]};
        vals = {gp.pi_plus, -gp.pi_minus};
        p.add_row(-kInf, hh.xi, cols, vals);
    }
    lp::SolverOptions opt;
    lp::Solution sol = lp::solve(p, opt);
    if (sol.status == lp::SolveStatus::Unbounded)
        throw SolverError("outside option unbounded; check NEM prices");
    if (sol.status != lp::SolveStatus::Optimal)
        throw SolverError("outside option LP failed: " + lp::to_string(sol.status));

    double pv_total = 0.0;
    for (double v : own_solar) pv_total += v;
    return -sol.objective - pv_total;
}

std::vector<double> outside_options(const Scenario& sc) {
    const int N = sc.num_households();
    const int T = sc.horizon();
    std::vector<double> out(N, 0.0);
    parallel_for(static_cast<std::size_t>(N), [&](std::size_t i) {
        Series own(T, 0.0);
        for (const auto& su : sc.solar) {
            if (su.id == sc.households[i].id) {
                own = su.generation;
                break;
            }
        }
        out[i] = outside_option(sc.households[i], own, sc.prices, sc.params);
    });
    return out;
}

BaselineCosts baseline_costs(const Scenario& sc) {
    const int N = sc.num_households();
    const int T = sc.horizon();
    BaselineCosts out;
    out.energy.assign(N, 0.0);
    out.peak_charge.assign(N, 0.0);
    out.total.assign(N, 0.0);
    for (int i = 0; i < N; ++i) {
        Series own(T, 0.0);
        for (const auto& su : sc.solar)
            if (su.id == sc.households[i].id) own = su.generation;
        double peak = 0.0;
        for (int t = 0; t < T; ++t) {
            const double grid = std::max(sc.households[i].demand[t] - own[t], 0.0);
            out.energy[i] += sc.prices[t] * grid;
            peak = std::max(peak, grid);
        }
        out.peak_charge[i] = sc.params.c_peak * peak;
        out.total[i] = out.energy[i] + out.peak_charge[i];
        out.total_energy += out.energy[i];
        out.total_peak += out.peak_charge[i];
        out.grand_total += out.total[i];
    }
    return out;
}

double renewable_access(const Schedule& sched, const Scenario& sc, int i) {
    double denom = 0.0;
    for (double d : sc.households[i].demand) denom += d;
    if (denom <= 0.0) return 0.0;
    double num = 0.0;
    const int T = sc.horizon();
    for (int t = 0; t < T; ++t)
        num += sched.solar_power(sc, i, t) + sched.discharge_total(i, t) -
               sched.charge_total(i, t);
    return num / denom;
}

Residuals compute_residuals(const Schedule& sched, const Scenario& sc) {
    Residuals r;
    const int N = sc.num_households();
    const int B = sc.num_bess();
    const int T = sc.horizon();
    const auto& gp = sc.params;

    for (int i = 0; i < N; ++i) {
        for (int t = 0; t < T; ++t) {
            double supply = sched.p_grid[i][t] + sched.solar_power(sc, i, t);
            for (int b = 0; b < B; ++b)
                supply += sched.p_discharge[b][i][t] - sched.p_charge[b][i][t];
            const double d = sc.households[i].demand[t];
            r.balance = std::max({r.balance, d * (1.0 - gp.epsilon) - supply,
                                  supply - d * (1.0 + gp.epsilon)});
            if (t > 0) {
                const double dv = std::abs(sched.p_grid[i][t] - sched.p_grid[i][t - 1]);
                r.ramp = std::max(r.ramp, dv - gp.r_max * d);
            }
            double thr = 0.0;
            for (int b = 0; b < B; ++b)
                thr += sched.p_charge[b][i][t] + sched.p_discharge[b][i][t];
            r.budget = std::max(r.budget, sc.prices[t] * sched.p_grid[i][t] +
                                              gp.c_bess * thr - sc.households[i].xi);
        }
    }
    for (int b = 0; b < B; ++b) {
        const auto& u = sc.bess[b];
        for (int t = 0; t < T; ++t) {
            double csum = 0.0, dsum = 0.0;
            for (int i = 0; i < N; ++i) {
                csum += sched.p_charge[b][i][t];
                dsum += sched.p_discharge[b][i][t];
            }
            const double prev = t == 0 ? u.soc_initial : sched.soc[b][t - 1];
            r.soc_recursion =
                std::max(r.soc_recursion,
                          std::abs(sched.soc[b][t] - prev - u.eta_c * csum + dsum / u.eta_d));
            r.soc_bounds = std::max({r.soc_bounds,
                                     u.soc_min_frac * u.capacity_E - sched.soc[b][t],
                                     sched.soc[b][t] - u.soc_max_frac * u.capacity_E});
        }
        r.terminal_soc = std::max(
            r.terminal_soc, gp.terminal_soc_frac * u.capacity_E - sched.soc[b][T - 1]);
    }
    for (int t = 0; t < T; ++t) {
        double total = 0.0;
        for (int i = 0; i < N; ++i) total += sched.p_grid[i][t];
        r.peak_coupling = std::max(r.peak_coupling, total - sched.p_peak);
        if (!sc.solar.empty()) {
            for (int s = 0; s < sc.num_solar(); ++s) {
                double frac = 0.0;
                for (int i = 0; i < N; ++i) frac += sched.alpha[s][i][t];
                r.solar_pool = std::max(r.solar_pool, frac - 1.0);
            }
        }
    }
    // negative residuals mean "satisfied with margin"
    r.balance = std::max(r.balance, 0.0);
    r.ramp = std::max(r.ramp, 0.0);
    r.budget = std::max(r.budget, 0.0);
    r.soc_bounds = std::max(r.soc_bounds, 0.0);
    r.terminal_soc = std::max(r.terminal_soc, 0.0);
    r.peak_coupling = std::max(r.peak_coupling, 0.0);
    r.solar_pool = std::max(r.solar_pool, 0.0);
    return r;
}

// ---------------------------------------------------------------------------
// Artifact I/O.

void write_schedule_csv(const Schedule& sched, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    char buf[160];
    out << "kind,unit,household,t,value\n";
    auto emit = [&](const char* kind, int unit, int hh, int t, double v) {
        std::snprintf(buf, sizeof buf, "%s,%d,%d,%d,%.6f\n", kind, unit, hh, t, v);
        out << buf;
    };
    const int N = static_cast<int>(sched.p_grid.size());
    const int T = N > 0 ? static_cast<int>(sched.p_grid[0].size()) : 0;
    for (int i = 0; i < N; ++i)
        for (int t = 0; t < T; ++t) emit("grid", -1, i, t, sched.p_grid[i][t]);
    for (int s = 0; s < static_cast<int>(sched.alpha.size()); ++s)
        for (int i = 0; i < N; ++i)
            for (int t = 0; t < T; ++t) {
                if (sched.alpha[s][i][t] != 0.0)
                    emit("alpha", s, i, t, sched.alpha[s][i][t]);
            }
    for (int b = 0; b < static_cast<int>(sched.p_charge.size()); ++b)
        for (int i = 0; i < N; ++i)
            for (int t = 0; t < T; ++t) {
                if (sched.p_charge[b][i][t] != 0.0)
                    emit("charge", b, i, t, sched.p_charge[b][i][t]);
                if (sched.p_discharge[b][i][t] != 0.0)
                    emit("discharge", b, i, t, sched.p_discharge[b][i][t]);
            }
    for (int b = 0; b < static_cast<int>(sched.soc.size()); ++b)
        for (int t = 0; t < T; ++t) emit("soc", b, -1, t, sched.soc[b][t]);
    emit("peak", -1, -1, 0, sched.p_peak);
    for (int i = 0; i < static_cast<int>(sched.e_pen.size()); ++i)
        emit("epen", -1, i, 0, sched.e_pen[i]);
}

Schedule read_schedule_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open schedule CSV: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "kind,unit,household,t,value")
        throw IoError("schedule CSV: unexpected header");

    struct Row {
        std::string kind;
        int unit, hh, t;
        double value;
    };
    std::vector<Row> rows;
    int max_hh = -1, max_t = -1, max_s = -1, max_b = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Row r;
        std::stringstream ls(line);
        std::string cell;
        std::getline(ls, r.kind, ',');
        std::getline(ls, cell, ',');
        r.unit = std::stoi(cell);
        std::getline(ls, cell, ',');
        r.hh = std::stoi(cell);
        std::getline(ls, cell, ',');
        r.t = std::stoi(cell);
        std::getline(ls, cell, ',');
        r.value = std::stod(cell);
        max_hh = std::max(max_hh, r.hh);
        max_t = std::max(max_t, r.t);
        if (r.kind == "alpha") max_s = std::max(max_s, r.unit);
        if (r.kind == "charge" || r.kind == "discharge" || r.kind == "soc")
            max_b = std::max(max_b, r.unit);
        rows.push_back(std::move(r));
    }
    const int N = max_hh + 1, T = max_t + 1, S = max_s + 1, B = max_b + 1;
    Schedule sched;
    sched.status = ScheduleStatus::Optimal;  // refined by the summary, when used
    sched.p_grid.assign(N, Series(T, 0.0));
    sched.alpha.assign(S, std::vector<Series>(N, Series(T, 0.0)));
    sched.p_charge.assign(B, std::vector<Series>(N, Series(T, 0.0)));
    sched.p_discharge.assign(B, std::vector<Series>(N, Series(T, 0.0)));
    sched.soc.assign(B, Series(T, 0.0));
    sched.e_pen.assign(N, 0.0);
    for (const auto& r : rows) {
        if (r.kind == "grid") sched.p_grid[r.hh][r.t] = r.value;
        else if (r.kind == "alpha") sched.alpha[r.unit][r.hh][r.t] = r.value;
        else if (r.kind == "charge") sched.p_charge[r.unit][r.hh][r.t] = r.value;
        else if (r.kind == "discharge") sched.p_discharge[r.unit][r.hh][r.t] = r.value;
        else if (r.kind == "soc") sched.soc[r.unit][r.t] = r.value;
        else if (r.kind == "peak") sched.p_peak = r.value;
        else if (r.kind == "epen") sched.e_pen[r.hh] = r.value;
        else throw IoError("schedule CSV: unknown row kind '" + r.kind + "'");
    }
    return sched;
}

void write_schedule_summary(const Schedule& sched, const Scenario& sc,
                            const EquityWeights& weights, const std::string& path) {
    nlohmann::json j;
    j["status"] = to_string(sched.status);
    j["objective"] = sched.objective;
    j["cost_energy"] = sched.cost_energy;
    j["cost_peak"] = sched.cost_peak;
    j["cost_equity"] = sched.cost_equity;
    j["p_peak"] = sched.p_peak;
    j["relax_rung"] = static_cast<int>(sched.relax_rung);
    j["relaxed_constraints"] = sched.relaxed_constraints;
    j["floor_slack_total"] = sched.floor_slack_total;
    j["budget_slack_total"] = sched.budget_slack_total;
    j["final_weights"] = weights;
    j["label"] = sc.label;
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace eqgrid::sched
