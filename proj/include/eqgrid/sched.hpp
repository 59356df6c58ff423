// Day-ahead dispatch: builds the linear program over grid imports, solar
// allocation, BESS operation, peak, and equity penalties, solves it through
// the LP engine with a feasibility-recovery ladder, and derives household
// outside options and no-cooperation baselines.
#ifndef EQGRID_SCHED_HPP
#define EQGRID_SCHED_HPP

#include <optional>
#include <string>
#include <vector>

#include "eqgrid/lp.hpp"
#include "eqgrid/model.hpp"

namespace eqgrid::sched {

using model::EquityWeights;
using model::Scenario;

// Recovery ladder rungs, applied cumulatively when the strict problem is
// infeasible: 1 drops individual rationality, 2 adds penalized slack to the
// Rawlsian floor, 3 adds penalized slack to the budget rows.
enum class RelaxRung : int { None = 0, DropIr = 1, FloorSlack = 2, BudgetSlack = 3 };

inline constexpr double kSlackPenalty = 1e6;  // $ per unit of floor/budget slack

// The LP works on household-side and unit-side aggregates of the BESS flow
// tensor (and on per-household allocated solar power); hourly linking rows
// tie the two sides together. Any aggregate solution disaggregates exactly
// into the full per-(b,i,t) tensor, which extraction performs.
struct DispatchProblem {
    lp::LinearProgram lp;
    int N = 0, S = 0, B = 0, T = 0;
    RelaxRung rung = RelaxRung::None;

    // variable block offsets (-1 when the block is absent)
    int off_pgrid = -1;
    int off_solar = -1;        // per-household allocated solar power, N x T
    int off_charge_hh = -1;    // household-side charge totals, N x T
    int off_discharge_hh = -1;
    int off_charge_unit = -1;  // unit-side charge totals, B x T
    int off_discharge_unit = -1;
    int off_soc = -1;          // B x T
    int off_peak = -1;
    int off_epen = -1;
    int off_floor_slack = -1;
    int off_budget_slack = -1;

    std::vector<double> s_out;  // outside option per household

    // rebuild inputs for ladder escalation
    Scenario scenario;
    EquityWeights weights;

    int pgrid(int i, int t) const { return off_pgrid + i * T + t; }
    int solar(int i, int t) const { return off_solar + i * T + t; }
    int charge_hh(int i, int t) const { return off_charge_hh + i * T + t; }
    int discharge_hh(int i, int t) const { return off_discharge_hh + i * T + t; }
    int charge_unit(int b, int t) const { return off_charge_unit + b * T + t; }
    int discharge_unit(int b, int t) const { return off_discharge_unit + b * T + t; }
    int soc(int b, int t) const { return off_soc + b * T + t; }
};

enum class ScheduleStatus { Optimal, Infeasible, RelaxedFeasible };

std::string to_string(ScheduleStatus s);

struct Schedule {
    ScheduleStatus status = ScheduleStatus::Infeasible;
    std::vector<Series> p_grid;                     // N x T [MW]
    std::vector<std::vector<Series>> alpha;         // S x N x T fractions
    std::vector<std::vector<Series>> p_charge;      // B x N x T [MW]
    std::vector<std::vector<Series>> p_discharge;   // B x N x T [MW]
    std::vector<Series> soc;                        // B x T [MWh]
    double p_peak = 0.0;                            // [MW]
    std::vector<double> e_pen;                      // per household

    // objective decomposition per the dispatch cost model; relaxation
    // penalties are reported separately and never folded into `objective`
    double cost_energy = 0.0;
    double cost_peak = 0.0;
    double cost_equity = 0.0;
    double objective = 0.0;

    RelaxRung relax_rung = RelaxRung::None;
    std::vector<std::string> relaxed_constraints;
    double floor_slack_total = 0.0;
    double budget_slack_total = 0.0;
    int lp_iterations = 0;

    // convenience views
    double solar_power(const Scenario& sc, int i, int t) const;  // MW delivered to i
    double discharge_total(int i, int t) const;
    double charge_total(int i, int t) const;
};

// Worst-case absolute constraint violations of a schedule, for test and
// report use. Families relaxed by the active rung are still measured.
struct Residuals {
    double balance = 0.0;
    double soc_recursion = 0.0;
    double soc_bounds = 0.0;
    double terminal_soc = 0.0;
    double ramp = 0.0;
    double peak_coupling = 0.0;
    double budget = 0.0;
    double solar_pool = 0.0;
    double max_all() const;
};

DispatchProblem build_problem(const Scenario& scenario, const EquityWeights& weights,
                              RelaxRung rung = RelaxRung::None,
                              const std::vector<double>* s_out_cache = nullptr);

// Solves the problem, escalating through the recovery ladder when a rung is
// infeasible. Numerical solver breakdowns throw SolverError.
Schedule solve(const DispatchProblem& problem, const lp::SolverOptions& options = {});

// Strict variant: enforces per-(b,t) charge/discharge exclusivity through
// branch and bound on top of the LP relaxation.
Schedule solve_strict_exclusive(const DispatchProblem& problem, int max_nodes = 2000,
                                const lp::SolverOptions& options = {});

// Linear household utility: beta * consumption - lambda * grid import.
double utility(const model::Household& hh, double d, double p_grid);

// Piecewise NEM price of a net import z.
double nem_price(double z, const model::GlobalParams& params);

// Best standalone surplus of a household under NEM pricing and its per-step
// budget; solved as a small LP.
double outside_option(const model::Household& hh, const Series& own_solar,
                      const Series& prices, const model::GlobalParams& params);

// Outside options for all households (own solar = solar unit with the
// household's id, when present). Parallel across households.
std::vector<double> outside_options(const Scenario& scenario);

struct BaselineCosts {
    std::vector<double> energy;       // per household
    std::vector<double> peak_charge;  // per household
    std::vector<double> total;        // per household
    double total_energy = 0.0;
    double total_peak = 0.0;
    double grand_total = 0.0;         // "net individual cost" analogue
};

// No-cooperation baseline: each household serves demand from its own PV,
// imports the remainder, and pays an individual peak charge.
BaselineCosts baseline_costs(const Scenario& scenario);

// Normalized net solar participation (access share) of household i;
// zero total demand yields zero.
double renewable_access(const Schedule& schedule, const Scenario& scenario, int i);

Residuals compute_residuals(const Schedule& schedule, const Scenario& scenario);

// Artifact I/O: CSV of (entity, t) rows at fixed precision plus a JSON
// summary carrying the objective breakdown, status, and final weights.
void write_schedule_csv(const Schedule& schedule, const std::string& path);
Schedule read_schedule_csv(const std::string& path);
void write_schedule_summary(const Schedule& schedule, const Scenario& scenario,
                            const EquityWeights& weights, const std::string& path);

// Closed-form size of the dispatch LP, documented in the README; the
// counting test checks build_problem against these.
long expected_cols(int N, int S, int B, int T, RelaxRung rung = RelaxRung::None);
long expected_rows(int N, int S, int B, int T);

}  // namespace eqgrid::sched

#endif
