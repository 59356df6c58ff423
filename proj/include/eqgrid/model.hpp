// Domain types shared by every module: global parameters, households, DER
// units, and the full scenario, plus validation and JSON (de)serialization.
#ifndef EQGRID_MODEL_HPP
#define EQGRID_MODEL_HPP

#include <string>
#include <vector>

#include "eqgrid/common.hpp"

namespace eqgrid::model {

struct GlobalParams {
    int horizon_T = 24;            // hourly steps
    double epsilon = 0.001;        // energy-balance flexibility margin
    double theta = 0.5;            // target renewable access ratio
    double omega = 0.0;            // utility floor
    double c_peak = 8700.0;        // peak charge rate [$/MW]
    double c_bess = 0.1;           // BESS service cost [$/MWh]
    double r_max = 0.2;            // ramp limit (fraction of demand)
    double tau_min = 2.0;          // minimum up/down window [h]
    double pi_plus = 0.4;          // NEM import price [$/MWh]
    double pi_minus = 0.2;         // NEM export credit [$/MWh]
    double terminal_soc_frac = 0.4;
    double w_min = 0.1;            // weight clip bounds
    double w_max = 2.0;
};

enum class IncomeClass { Lower, Middle, Upper };

std::string to_string(IncomeClass c);
IncomeClass income_class_from_string(const std::string& s);

// Income thresholds and the affordability/utility rows keyed on them.
// Incomes exactly at a threshold fall into the middle bracket.
inline constexpr double kIncomeLowerBound = 120000.0;
inline constexpr double kIncomeUpperBound = 300000.0;

// Community BESS fleet cap [MWh].
inline constexpr double kMaxCommunityBessMwh = 5.0;

struct Household {
    int id = 0;
    double income = 0.0;          // $/year
    IncomeClass income_class = IncomeClass::Middle;
    Series demand;                // D_{i,t} [MW]
    double xi = 0.0;              // per-step budget [$]
    double beta = 0.0;            // utility coefficient
    double lambda = 0.0;          // equity coefficient [$/MWh]
    double weight = 1.0;          // w_i, tuned by the RL loop
};

struct SolarUnit {
    int id = 0;
    Series generation;            // P_solar,s,t [MW]
};

struct BessUnit {
    int id = 0;
    double capacity_E = 0.0;      // [MWh]
    double p_max = 0.0;           // [MW]
    double eta_c = 0.95;
    double eta_d = 0.95;
    double soc_min_frac = 0.15;
    double soc_max_frac = 0.95;
    double soc_initial = 0.0;     // [MWh]; 0.5 * capacity when unspecified
};

struct Scenario {
    std::vector<Household> households;
    std::vector<SolarUnit> solar;
    std::vector<BessUnit> bess;
    Series prices;                // p_t [$/MWh]
    GlobalParams params;
    std::string label;

    int num_households() const { return static_cast<int>(households.size()); }
    int num_solar() const { return static_cast<int>(solar.size()); }
    int num_bess() const { return static_cast<int>(bess.size()); }
    int horizon() const { return params.horizon_T; }
};

using EquityWeights = std::vector<double>;

struct Violation {
    std::string path;
    std::string message;
};

// Pure and deterministic; returns every invariant violation. Empty iff the
// scenario is valid.
std::vector<Violation> validate(const Scenario& scenario);

// Exact Table-II mapping from annual income to (xi, beta, lambda).
void income_to_params(double income, double& xi, double& beta, double& lambda);
IncomeClass classify_income(double income);

std::string to_json(const Scenario& scenario);
Scenario scenario_from_json(const std::string& text);
void save_scenario(const Scenario& scenario, const std::string& path);
Scenario load_scenario(const std::string& path);

}  // namespace eqgrid::model

#endif
