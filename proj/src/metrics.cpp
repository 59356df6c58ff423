#include "eqgrid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace eqgrid::metrics {

double gini(const std::vector<double>& values) {
    const int n = static_cast<int>(values.size());
    if (n == 0) throw Error("gini: empty vector");
    double mean = 0.0;
    for (double v : values) {
        if (v < 0.0) throw Error("gini: negative entry");
        mean += v;
    }
    mean /= n;
    if (mean == 0.0) return 0.0;
    double abs_sum = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) abs_sum += std::abs(values[i] - values[j]);
    return abs_sum / (2.0 * static_cast<double>(n) * n * mean);
}

std::vector<std::pair<double, double>> lorenz(const std::vector<double>& values) {
    const int n = static_cast<int>(values.size());
    if (n == 0) throw Error("lorenz: empty vector");
    std::vector<double> sorted(values);
    for (double v : sorted)
        if (v < 0.0) throw Error("lorenz: negative entry");
    std::sort(sorted.begin(), sorted.end());
    double total = 0.0;
    for (double v : sorted) total += v;
    if (total == 0.0) throw Error("lorenz: all-zero vector");

    std::vector<std::pair<double, double>> pts;
    pts.reserve(n + 1);
    pts.emplace_back(0.0, 0.0);
    double cum = 0.0;
    for (int i = 0; i < n; ++i) {
        cum += sorted[i];
        pts.emplace_back(static_cast<double>(i + 1) / n, cum / total);
    }
    return pts;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const int n = static_cast<int>(x.size());
    if (n != static_cast<int>(y.size()) || n < 2)
        throw Error("pearson: need two equal-length vectors of size >= 2");
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        throw Error("pearson: correlation undefined for a constant vector");
    return sxy / std::sqrt(sxx * syy);
}

double seii(const std::vector<double>& incomes, const std::vector<double>& weights) {
    return (1.0 - pearson(incomes, weights)) / 2.0;
}

TechnicalMetrics technical_metrics(const sched::Schedule& sched,
                                   const model::Scenario& sc) {
    TechnicalMetrics tm;
    const int N = sc.num_households();
    const int T = sc.horizon();

    for (int t = 0; t < T; ++t) {
        double demand = 0.0;
        for (int i = 0; i < N; ++i) demand += sc.households[i].demand[t];
        tm.peak_original = std::max(tm.peak_original, demand);
    }
    tm.peak_optimized = sched.p_peak;
    tm.peak_reduction_pct =
        tm.peak_original > 0.0
            ? (tm.peak_original - tm.peak_optimized) / tm.peak_original * 100.0
            : 0.0;

    double available = 0.0, allocated = 0.0;
    for (int s = 0; s < sc.num_solar(); ++s)
        for (int t = 0; t < T; ++t) {
            available += sc.solar[s].generation[t];
            for (int i = 0; i < N; ++i)
                allocated += sched.alpha[s][i][t] * sc.solar[s].generation[t];
        }
    tm.solar_available = available > 0.0;
    tm.solar_utilization_pct = tm.solar_available ? allocated / available * 100.0 : 0.0;

    const int B = sc.num_bess();
    if (B > 0) {
        double cycles = 0.0;
        for (int b = 0; b < B; ++b) {
            double discharged = 0.0;
            for (int i = 0; i < N; ++i)
                for (int t = 0; t < T; ++t) discharged += sched.p_discharge[b][i][t];
            cycles += discharged / sc.bess[b].capacity_E;
        }
        tm.avg_bess_cycles = cycles / B;
    }
    return tm;
}

MetricsReport build_report(const sched::Schedule& sched, const model::Scenario& sc,
                           const sched::BaselineCosts& baseline,
                           const model::EquityWeights& final_weights) {
    MetricsReport rep;
    const int N = sc.num_households();

    std::vector<double> access(N);
    for (int i = 0; i < N; ++i)
        access[i] = std::max(0.0, sched::renewable_access(sched, sc, i));
    rep.gini = gini(access);
    double total_access = 0.0;
    for (double a : access) total_access += a;
    if (total_access > 0.0) rep.lorenz = lorenz(access);

    std::vector<double> incomes(N);
    for (int i = 0; i < N; ++i) incomes[i] = sc.households[i].income;
    try {
        rep.seii = seii(incomes, final_weights);
        rep.seii_defined = true;
    } catch (const Error&) {
        rep.seii = 0.0;
        rep.seii_defined = false;
    }

    const TechnicalMetrics tm = technical_metrics(sched, sc);
    rep.peak_original = tm.peak_original;
    rep.peak_optimized = tm.peak_optimized;
    rep.peak_reduction_pct = tm.peak_reduction_pct;
    rep.solar_utilization_pct = tm.solar_utilization_pct;
    rep.solar_available = tm.solar_available;
    rep.avg_bess_cycles = tm.avg_bess_cycles;

    // real-dollar cooperative cost: unweighted energy plus the peak charge
    double energy = 0.0;
    for (int i = 0; i < N; ++i)
        for (int t = 0; t < sc.horizon(); ++t)
            energy += sc.prices[t] * sched.p_grid[i][t];
    rep.coop_cost = energy + sc.params.c_peak * sched.p_peak;
    rep.no_coop_cost = baseline.grand_total;
    rep.cooperative_gain = rep.no_coop_cost - rep.coop_cost;
    return rep;
}

std::string report_to_json(const MetricsReport& rep) {
    nlohmann::json j;
    j["gini"] = rep.gini;
    j["seii"] = rep.seii_defined ? nlohmann::json(rep.seii) : nlohmann::json(nullptr);
    j["peak_original_mw"] = rep.peak_original;
    j["peak_optimized_mw"] = rep.peak_optimized;
    j["peak_reduction_pct"] = rep.peak_reduction_pct;
    j["solar_utilization_pct"] =
        rep.solar_available ? nlohmann::json(rep.solar_utilization_pct)
                            : nlohmann::json(nullptr);
    j["avg_bess_cycles"] = rep.avg_bess_cycles;
    j["cooperative_gain"] = rep.cooperative_gain;
    j["no_coop_cost"] = rep.no_coop_cost;
    j["coop_cost"] = rep.coop_cost;
    return j.dump(2);
}

MetricsReport report_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("metrics JSON parse error: ") + e.what());
    }
    MetricsReport rep;
    rep.gini = j.value("gini", 0.0);
    if (j.contains("seii") && !j["seii"].is_null()) {
        rep.seii = j["seii"].get<double>();
        rep.seii_defined = true;
    }
    rep.peak_original = j.value("peak_original_mw", 0.0);
    rep.peak_optimized = j.value("peak_optimized_mw", 0.0);
    rep.peak_reduction_pct = j.value("peak_reduction_pct", 0.0);
    if (j.contains("solar_utilization_pct") && !j["solar_utilization_pct"].is_null()) {
        rep.solar_utilization_pct = j["solar_utilization_pct"].get<double>();
        rep.solar_available = true;
    }
    rep.avg_bess_cycles = j.value("avg_bess_cycles", 0.0);
    rep.cooperative_gain = j.value("cooperative_gain", 0.0);
    rep.no_coop_cost = j.value("no_coop_cost", 0.0);
    rep.coop_cost = j.value("coop_cost", 0.0);
    return rep;
}

void write_report(const MetricsReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << report_to_json(rep) << "\n";
}

void write_lorenz_csv(const std::vector<std::pair<double, double>>& pts,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "population_fraction,access_fraction\n";
    char buf[80];
    for (const auto& [x, y] : pts) {
        std::snprintf(buf, sizeof buf, "%.6f,%.6f\n", x, y);
        out << buf;
    }
}

std::vector<std::pair<double, double>> read_lorenz_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open lorenz CSV: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "population_fraction,access_fraction")
        throw IoError("lorenz CSV: unexpected header");
    std::vector<std::pair<double, double>> pts;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string a, b;
        std::getline(ls, a, ',');
        std::getline(ls, b, ',');
        pts.emplace_back(std::stod(a), std::stod(b));
    }
    return pts;
}

}  // namespace eqgrid::metrics
