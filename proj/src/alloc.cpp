#include "eqgrid/alloc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace eqgrid::alloc {

namespace {

double price_mean(const Series& prices) {
    double acc = 0.0;
    for (double p : prices) acc += p;
    return prices.empty() ? 0.0 : acc / static_cast<double>(prices.size());
}

std::vector<double> normalized(const std::vector<double>& raw) {
    double total = 0.0;
    for (double v : raw) {
        if (v < 0.0) throw Error("allocation: negative raw component");
        total += v;
    }
    std::vector<double> out(raw.size(), 0.0);
    if (total > 0.0)
        for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] / total;
    return out;
}

}  // namespace

std::vector<double> solar_component(const sched::Schedule& sched,
                                    const model::Scenario& sc,
                                    const EquityWeights& weights) {
    const int N = sc.num_households();
    const int T = sc.horizon();
    const double p_avg = price_mean(sc.prices);
    std::vector<double> phi(N, 0.0);
    for (int i = 0; i < N; ++i) {
        double intake = 0.0;
        for (int t = 0; t < T; ++t) intake += sched.solar_power(sc, i, t);
        phi[i] = intake * p_avg * weights[i];
    }
    return phi;
}

std::vector<double> bess_component(const sched::Schedule& sched,
                                   const EquityWeights& weights, double c_bess) {
    const int N = static_cast<int>(weights.size());
    std::vector<double> phi(N, 0.0);
    for (int i = 0; i < N; ++i) {
        if (!(weights[i] > 0.0)) throw Error("bess_component: weights must be positive");
        double throughput = 0.0;
        for (std::size_t b = 0; b < sched.p_charge.size(); ++b)
            for (double v : sched.p_charge[b][i]) throughput += v;
        for (std::size_t b = 0; b < sched.p_discharge.size(); ++b)
            for (double v : sched.p_discharge[b][i]) throughput += v;
        phi[i] = throughput * c_bess / weights[i];
    }
    return phi;
}

std::vector<double> peak_component(const sched::Schedule& sched,
                                   const EquityWeights& weights, double c_peak) {
    const int N = static_cast<int>(weights.size());
    std::vector<double> phi(N, 0.0);
    for (int i = 0; i < N; ++i) {
        double own_max = 0.0;
        for (double v : sched.p_grid[i]) own_max = std::max(own_max, v);
        // a household's own max cannot exceed the pool peak; clamp numerical noise
        phi[i] = std::max(0.0, (sched.p_peak - own_max) * c_peak * weights[i]);
    }
    return phi;
}

std::vector<double> grid_component(const sched::Schedule& sched,
                                   const EquityWeights& weights, double c_grid) {
    const int N = static_cast<int>(weights.size());
    std::vector<double> phi(N, 0.0);
    double weighted_total = 0.0;
    for (int i = 0; i < N; ++i) {
        double usage = 0.0;
        for (double v : sched.p_grid[i]) usage += v;
        weighted_total += usage * weights[i];
    }
    if (weighted_total <= 0.0) return phi;
    for (int i = 0; i < N; ++i) {
        double usage = 0.0;
        for (double v : sched.p_grid[i]) usage += v;
        phi[i] = usage * c_grid / weighted_total;
    }
    return phi;
}

AllocationReport net_shares(std::vector<double> phi_solar, std::vector<double> phi_bess,
                            std::vector<double> phi_peak, std::vector<double> phi_grid) {
    const std::size_t n = phi_solar.size();
    if (phi_bess.size() != n || phi_peak.size() != n || phi_grid.size() != n)
        throw Error("net_shares: component length mismatch");
    AllocationReport rep;
    rep.hat_solar = normalized(phi_solar);
    rep.hat_bess = normalized(phi_bess);
    rep.hat_peak = normalized(phi_peak);
    rep.hat_grid = normalized(phi_grid);
    rep.phi_solar = std::move(phi_solar);
    rep.phi_bess = std::move(phi_bess);
    rep.phi_peak = std::move(phi_peak);
    rep.phi_grid = std::move(phi_grid);
    rep.net_share.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        rep.net_share[i] =
            rep.hat_solar[i] + rep.hat_peak[i] - rep.hat_bess[i] - rep.hat_grid[i];
    return rep;
}

double cooperative_gain(double no_coop_total, double coop_total) {
    return no_coop_total - coop_total;
}

AllocationReport build_report(const sched::Schedule& sched, const model::Scenario& sc,
                              const EquityWeights& weights,
                              const sched::BaselineCosts& baseline) {
    const double p_avg = price_mean(sc.prices);
    AllocationReport rep = net_shares(solar_component(sched, sc, weights),
                                      bess_component(sched, weights, sc.params.c_bess),
                                      peak_component(sched, weights, sc.params.c_peak),
                                      grid_component(sched, weights, p_avg));
    double energy = 0.0;
    for (int i = 0; i < sc.num_households(); ++i)
        for (int t = 0; t < sc.horizon(); ++t) energy += sc.prices[t] * sched.p_grid[i][t];
    rep.cooperative_cost = energy + sc.params.c_peak * sched.p_peak;
    rep.no_coop_cost = baseline.grand_total;
    rep.cooperative_gain = cooperative_gain(rep.no_coop_cost, rep.cooperative_cost);
    return rep;
}

std::string report_to_json(const AllocationReport& rep) {
    nlohmann::json j;
    j["cooperative_cost"] = rep.cooperative_cost;
    j["no_coop_cost"] = rep.no_coop_cost;
    j["cooperative_gain"] = rep.cooperative_gain;
    j["households"] = nlohmann::json::array();
    for (std::size_t i = 0; i < rep.net_share.size(); ++i) {
        j["households"].push_back({{"id", i},
                                   {"phi_solar", rep.phi_solar[i]},
                                   {"phi_bess", rep.phi_bess[i]},
                                   {"phi_peak", rep.phi_peak[i]},
                                   {"phi_grid", rep.phi_grid[i]},
                                   {"hat_solar", rep.hat_solar[i]},
                                   {"hat_bess", rep.hat_bess[i]},
                                   {"hat_peak", rep.hat_peak[i]},
                                   {"hat_grid", rep.hat_grid[i]},
                                   {"net_share", rep.net_share[i]}});
    }
    return j.dump(2);
}

AllocationReport report_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("allocation JSON parse error: ") + e.what());
    }
    AllocationReport rep;
    rep.cooperative_cost = j.value("cooperative_cost", 0.0);
    rep.no_coop_cost = j.value("no_coop_cost", 0.0);
    rep.cooperative_gain = j.value("cooperative_gain", 0.0);
    for (const auto& h : j.value("households", nlohmann::json::array())) {
        rep.phi_solar.push_back(h.value("phi_solar", 0.0));
        rep.phi_bess.push_back(h.value("phi_bess", 0.0));
        rep.phi_peak.push_back(h.value("phi_peak", 0.0));
        rep.phi_grid.push_back(h.value("phi_grid", 0.0));
        rep.hat_solar.push_back(h.value("hat_solar", 0.0));
        rep.hat_bess.push_back(h.value("hat_bess", 0.0));
        rep.hat_peak.push_back(h.value("hat_peak", 0.0));
        rep.hat_grid.push_back(h.value("hat_grid", 0.0));
        rep.net_share.push_back(h.value("net_share", 0.0));
    }
    return rep;
}

void write_report(const AllocationReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << report_to_json(rep) << "\n";
}

}  // namespace eqgrid::alloc
