// Scenario synthesis: socio-economically stratified households with seeded
// incomes, scaled load/PV profiles, a proportional BESS fleet, and the six
// named operating-day presets.
#ifndef EQGRID_SYNTH_HPP
#define EQGRID_SYNTH_HPP

#include <cstdint>
#include <string>
#include <utility>

#include "eqgrid/model.hpp"
#include "eqgrid/rng.hpp"

namespace eqgrid::synth {

using model::IncomeClass;
using model::Scenario;

enum class ScenarioKind { HighDemand, LowDemand, HighPrice, HighSolar, Weekday, Weekend };

std::string to_string(ScenarioKind k);
ScenarioKind scenario_kind_from_string(const std::string& s);

struct LogNormalParams {
    double mu_log = 0.0;
    double sigma_log = 1.0;
};

struct SynthConfig {
    std::uint64_t seed = 1;
    int n_upper = 10;
    int n_middle = 20;
    int n_lower = 20;
    std::string base_csv;  // empty selects the embedded parametric profiles
    ScenarioKind kind = ScenarioKind::Weekday;
    LogNormalParams income_lower{std::log(70000.0), 0.30};
    LogNormalParams income_middle{std::log(200000.0), 0.25};
    LogNormalParams income_upper{std::log(420000.0), 0.30};
};

// Raw draw from the class log-normal; build_scenario additionally clamps the
// result into the class's Table-II bracket to keep the printed class split.
double draw_income(IncomeClass cls, const SynthConfig& config, Rng& rng);

// Exact Table-II bracket mapping (delegates to model).
inline void income_to_params(double income, double& xi, double& beta, double& lambda) {
    model::income_to_params(income, xi, beta, lambda);
}

struct ClassScaling {
    double load_lo, load_hi;  // uniform range for the per-household load factor
    double pv_lo, pv_hi;      // uniform range for the per-household PV factor
    double noise_sigma;       // multiplicative per-hour load noise
};

ClassScaling class_scaling(IncomeClass cls);

// Deterministic scaling core: load[t] = base_load[t] * load_factor * noise_t,
// pv[t] = base_pv[t] * pv_factor, both clamped at zero.
std::pair<Series, Series> scale_profiles(const Series& base_load, const Series& base_pv,
                                         double load_factor, double pv_factor,
                                         double noise_sigma, Rng& rng);

// Class-level wrapper drawing the factors from class_scaling(cls).
std::pair<Series, Series> scale_class_profiles(const Series& base_load,
                                               const Series& base_pv, IncomeClass cls,
                                               Rng& rng);

// Splits households into n_units contiguous clusters and sizes each unit
// proportionally to its cluster's mean demand; p_max = capacity / 2.
std::vector<model::BessUnit> allocate_bess(const std::vector<model::Household>& households,
                                           double fleet_total_E, int n_units);

// Embedded parametric base profiles (per upper-class household).
Series embedded_base_load(int T, ScenarioKind kind);
Series embedded_base_pv(int T);
Series embedded_base_price(int T);

// Reads base profiles from a CSV with header columns load[,pv][,price].
void load_base_csv(const std::string& path, int T, Series& load, Series& pv, Series& price);

Scenario build_scenario(const SynthConfig& config);

}  // namespace eqgrid::synth

#endif
