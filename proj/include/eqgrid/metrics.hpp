// Fairness and technical performance metrics: Gini, Lorenz, the
// socio-economic impact index, peak/solar/BESS statistics.
#ifndef EQGRID_METRICS_HPP
#define EQGRID_METRICS_HPP

#include <string>
#include <utility>
#include <vector>

#include "eqgrid/model.hpp"
#include "eqgrid/sched.hpp"

namespace eqgrid::metrics {

// Mean-absolute-difference Gini over a nonnegative vector; all-zero gives 0.
// Negative entries are a fault.
double gini(const std::vector<double>& values);

// Lorenz curve: n+1 points from (0,0) to (1,1), households sorted ascending.
std::vector<std::pair<double, double>> lorenz(const std::vector<double>& values);

// (1 - Pearson correlation(incomes, weights)) / 2; faults when either vector
// is constant (undefined correlation).
double seii(const std::vector<double>& incomes, const std::vector<double>& final_weights);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct MetricsReport {
    double gini = 0.0;
    std::vector<std::pair<double, double>> lorenz;
    double seii = 0.0;
    bool seii_defined = false;
    double peak_original = 0.0;
    double peak_optimized = 0.0;
    double peak_reduction_pct = 0.0;
    double solar_utilization_pct = 0.0;
    bool solar_available = false;
    double avg_bess_cycles = 0.0;
    double cooperative_gain = 0.0;
    double no_coop_cost = 0.0;
    double coop_cost = 0.0;
};

struct TechnicalMetrics {
    double peak_original = 0.0;
    double peak_optimized = 0.0;
    double peak_reduction_pct = 0.0;
    double solar_utilization_pct = 0.0;
    bool solar_available = false;
    double avg_bess_cycles = 0.0;
};

TechnicalMetrics technical_metrics(const sched::Schedule& schedule,
                                   const model::Scenario& scenario);

// Full report; seii is computed from incomes and final weights when they are
// non-constant, otherwise flagged undefined.
MetricsReport build_report(const sched::Schedule& schedule, const model::Scenario& scenario,
                           const sched::BaselineCosts& baseline,
                           const model::EquityWeights& final_weights);

std::string report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const std::string& text);
void write_report(const MetricsReport& report, const std::string& path);
void write_lorenz_csv(const std::vector<std::pair<double, double>>& points,
                      const std::string& path);
std::vector<std::pair<double, double>> read_lorenz_csv(const std::string& path);

}  // namespace eqgrid::metrics

#endif
