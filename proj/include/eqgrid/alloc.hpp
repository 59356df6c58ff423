// Weighted component allocation of the cooperative surplus: solar benefit,
// BESS cost, peak savings, and grid cost shares, normalized per component
// and combined into a per-household net share.
#ifndef EQGRID_ALLOC_HPP
#define EQGRID_ALLOC_HPP

#include <string>
#include <vector>

#include "eqgrid/model.hpp"
#include "eqgrid/sched.hpp"

namespace eqgrid::alloc {

using model::EquityWeights;

struct AllocationReport {
    std::vector<double> phi_solar, phi_bess, phi_peak, phi_grid;          // raw
    std::vector<double> hat_solar, hat_bess, hat_peak, hat_grid;          // normalized
    std::vector<double> net_share;
    double cooperative_cost = 0.0;
    double no_coop_cost = 0.0;
    double cooperative_gain = 0.0;
};

// Raw components. Each is proportional-only; magnitudes gain meaning after
// normalization.
std::vector<double> solar_component(const sched::Schedule& schedule,
                                    const model::Scenario& scenario,
                                    const EquityWeights& weights);
std::vector<double> bess_component(const sched::Schedule& schedule,
                                   const EquityWeights& weights, double c_bess);
std::vector<double> peak_component(const sched::Schedule& schedule,
                                   const EquityWeights& weights, double c_peak);
std::vector<double> grid_component(const sched::Schedule& schedule,
                                   const EquityWeights& weights, double c_grid);

// Normalizes each component to unit sum (all-zero components stay zero) and
// forms net_share = hat_solar + hat_peak - hat_bess - hat_grid. Negative raw
// entries are a fault.
AllocationReport net_shares(std::vector<double> phi_solar, std::vector<double> phi_bess,
                            std::vector<double> phi_peak, std::vector<double> phi_grid);

double cooperative_gain(double no_coop_total, double coop_total);

// Full pipeline on the final converged schedule.
AllocationReport build_report(const sched::Schedule& schedule,
                              const model::Scenario& scenario,
                              const EquityWeights& weights,
                              const sched::BaselineCosts& baseline);

std::string report_to_json(const AllocationReport& report);
AllocationReport report_from_json(const std::string& text);
void write_report(const AllocationReport& report, const std::string& path);

}  // namespace eqgrid::alloc

#endif
