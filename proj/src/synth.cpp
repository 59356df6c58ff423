#include "eqgrid/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace eqgrid::synth {

namespace {

// Desk-scale sizing constants. Together they put community demand around
// 6 MWh/day against roughly 7.2 MWh/day of PV and a 4 MWh BESS fleet, which
// keeps the default presets solvable without relaxation while High Demand
// (x1.5 load) runs into genuine overnight scarcity.
constexpr double kUpperDailyLoadMwh = 0.23;   // per upper-class household
constexpr double kOwnPvFraction = 0.2;        // household PV energy / own load energy
constexpr double kCommunalPvDailyMwh = 5.9;   // split across kNumCommunalSolar farms
constexpr int kNumCommunalSolar = 2;
constexpr double kFleetBessMwh = 4.0;
constexpr int kNumBessUnits = 5;

double gauss(double t, double center, double width) {
    const double d = t - center;
    return std::exp(-d * d / (2.0 * width * width));
}

Series load_shape(int T, ScenarioKind kind) {
    Series s(T);
    const bool weekend = (kind == ScenarioKind::Weekend);
    // Weekend: both peaks drift two hours later and the morning peak flattens.
    const double m_amp = weekend ? 0.2 : 0.4;
    const double m_center = weekend ? 10.5 : 8.5;
    const double m_width = weekend ? 3.0 : 2.0;
    const double e_center = weekend ? 21.0 : 19.0;
    for (int t = 0; t < T; ++t) {
        s[t] = 0.5 + m_amp * gauss(t, m_center, m_width) + 0.7 * gauss(t, e_center, 2.5);
    }
    return s;
}

Series pv_shape(int T) {
    Series s(T, 0.0);
    for (int t = 0; t < T; ++t) {
        if (t >= 6 && t <= 18) s[t] = std::sin(M_PI * (t - 6) / 12.0);
    }
    return s;
}

double series_sum(const Series& s) {
    double acc = 0.0;
    for (double v : s) acc += v;
    return acc;
}

void scale_to_energy(Series& s, double energy) {
    const double total = series_sum(s);
    if (total <= 0.0) return;
    const double k = energy / total;
    for (double& v : s) v *= k;
}

double clamp_to_bracket(double income, IncomeClass cls) {
    switch (cls) {
        case IncomeClass::Lower:
            return std::min(income, model::kIncomeLowerBound - 1.0);
        case IncomeClass::Middle:
            return std::clamp(income, model::kIncomeLowerBound, model::kIncomeUpperBound);
        case IncomeClass::Upper:
            return std::max(income, model::kIncomeUpperBound + 1.0);
    }
    return income;
}

}  // namespace

std::string to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::HighDemand: return "HighDemand";
        case ScenarioKind::LowDemand: return "LowDemand";
        case ScenarioKind::HighPrice: return "HighPrice";
        case ScenarioKind::HighSolar: return "HighSolar";
        case ScenarioKind::Weekday: return "Weekday";
        case ScenarioKind::Weekend: return "Weekend";
    }
    return "Weekday";
}

ScenarioKind scenario_kind_from_string(const std::string& s) {
    if (s == "HighDemand") return ScenarioKind::HighDemand;
    if (s == "LowDemand") return ScenarioKind::LowDemand;
    if (s == "HighPrice") return ScenarioKind::HighPrice;
    if (s == "HighSolar") return ScenarioKind::HighSolar;
    if (s == "Weekday") return ScenarioKind::Weekday;
    if (s == "Weekend") return ScenarioKind::Weekend;
    throw Error("unknown scenario kind: " + s);
}

double draw_income(IncomeClass cls, const SynthConfig& cfg, Rng& rng) {
    const LogNormalParams& p = cls == IncomeClass::Lower ? cfg.income_lower
                             : cls == IncomeClass::Middle ? cfg.income_middle
                                                          : cfg.income_upper;
    return rng.lognormal(p.mu_log, p.sigma_log);
}

ClassScaling class_scaling(IncomeClass cls) {
    switch (cls) {
        case IncomeClass::Upper: return {1.0, 1.0, 1.0, 1.0, 0.0};
        case IncomeClass::Middle: return {0.4, 0.8, 0.5, 0.9, 0.05};
        case IncomeClass::Lower: return {0.1, 0.3, 0.1, 0.4, 0.2};
    }
    return {1.0, 1.0, 1.0, 1.0, 0.0};
}

std::pair<Series, Series> scale_profiles(const Series& base_load, const Series& base_pv,
                                         double load_factor, double pv_factor,
                                         double noise_sigma, Rng& rng) {
    if (base_load.size() != base_pv.size())
        throw Error("scale_profiles: base series length mismatch");
    Series load(base_load.size()), pv(base_pv.size());
    for (std::size_t t = 0; t < base_load.size(); ++t) {
        double noise = noise_sigma > 0.0 ? 1.0 + rng.normal(0.0, noise_sigma) : 1.0;
        load[t] = std::max(0.0, base_load[t] * load_factor * noise);
        pv[t] = std::max(0.0, base_pv[t] * pv_factor);
    }
    return {std::move(load), std::move(pv)};
}

std::pair<Series, Series> scale_class_profiles(const Series& base_load,
                                               const Series& base_pv, IncomeClass cls,
                                               Rng& rng) {
    const ClassScaling cs = class_scaling(cls);
    const double load_factor = rng.uniform(cs.load_lo, cs.load_hi);
    const double pv_factor = rng.uniform(cs.pv_lo, cs.pv_hi);
    return scale_profiles(base_load, base_pv, load_factor, pv_factor, cs.noise_sigma, rng);
}

std::vector<model::BessUnit> allocate_bess(const std::vector<model::Household>& households,
                                           double fleet_total_E, int n_units) {
    if (households.empty()) throw Error("allocate_bess: empty household list");
    if (!(fleet_total_E > 0.0)) throw Error("allocate_bess: fleet capacity must be positive");
    if (n_units < 1) throw Error("allocate_bess: need at least one unit");

    const int n = static_cast<int>(households.size());
    const int units = std::min(n_units, n);
    std::vector<double> cluster_mean(units, 0.0);
    for (int u = 0; u < units; ++u) {
        const int lo = u * n / units;
        const int hi = (u + 1) * n / units;
        double acc = 0.0;
        for (int i = lo; i < hi; ++i) {
            const auto& d = households[i].demand;
            acc += d.empty() ? 0.0 : series_sum(d) / static_cast<double>(d.size());
        }
        cluster_mean[u] = acc / std::max(1, hi - lo);
    }
    double total_mean = 0.0;
    for (double v : cluster_mean) total_mean += v;

    std::vector<model::BessUnit> fleet(units);
    for (int u = 0; u < units; ++u) {
        auto& unit = fleet[u];
        unit.id = u;
        const double share = total_mean > 0.0 ? cluster_mean[u] / total_mean
                                              : 1.0 / static_cast<double>(units);
        unit.capacity_E = fleet_total_E * share;
        unit.p_max = unit.capacity_E / 2.0;
        unit.eta_c = unit.eta_d = 0.95;
        unit.soc_min_frac = 0.15;
        unit.soc_max_frac = 0.95;
        unit.soc_initial = 0.5 * unit.capacity_E;
    }
    return fleet;
}

Series embedded_base_load(int T, ScenarioKind kind) {
    Series s = load_shape(T, kind);
    scale_to_energy(s, kUpperDailyLoadMwh);
    return s;
}

Series embedded_base_pv(int T) {
    Series s = pv_shape(T);
    scale_to_energy(s, kOwnPvFraction * kUpperDailyLoadMwh);
    return s;
}

Series embedded_base_price(int T) {
    Series s(T);
    for (int t = 0; t < T; ++t)
        s[t] = 0.5 + 0.3 * gauss(t, 8.5, 2.0) + 0.6 * gauss(t, 19.0, 2.5);
    return s;
}

void load_base_csv(const std::string& path, int T, Series& load, Series& pv, Series& price) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open base profile CSV: " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("base CSV is empty: " + path);
    std::vector<std::string> headers;
    {
        std::stringstream hs(line);
        std::string cell;
        while (std::getline(hs, cell, ',')) headers.push_back(cell);
    }
    int load_col = -1, pv_col = -1, price_col = -1;
    for (std::size_t c = 0; c < headers.size(); ++c) {
        if (headers[c] == "load") load_col = static_cast<int>(c);
        else if (headers[c] == "pv") pv_col = static_cast<int>(c);
        else if (headers[c] == "price") price_col = static_cast<int>(c);
    }
    if (load_col < 0) throw IoError("base CSV needs a 'load' column: " + path);

    std::vector<Series> cols(headers.size());
    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string cell;
        std::size_t c = 0;
        while (std::getline(ls, cell, ',')) {
            if (c >= headers.size()) throw IoError("base CSV: too many cells in row");
            try {
                cols[c].push_back(std::stod(cell));
            } catch (...) {
                throw IoError("base CSV: unparsable number '" + cell + "'");
            }
            ++c;
        }
        if (c != headers.size()) throw IoError("base CSV: ragged row");
        ++row;
    }
    if (row != T)
        throw IoError("base CSV has " + std::to_string(row) + " rows, expected " +
                      std::to_string(T));
    load = cols[load_col];
    pv = pv_col >= 0 ? cols[pv_col] : embedded_base_pv(T);
    price = price_col >= 0 ? cols[price_col] : embedded_base_price(T);
}

Scenario build_scenario(const SynthConfig& cfg) {
    const int T = 24;
    const int n_total = cfg.n_upper + cfg.n_middle + cfg.n_lower;
    if (cfg.n_upper < 0 || cfg.n_middle < 0 || cfg.n_lower < 0 || n_total < 1)
        throw Error("build_scenario: class counts must be nonnegative with total >= 1");
    for (const auto& ln : {cfg.income_lower, cfg.income_middle, cfg.income_upper})
        if (!(ln.sigma_log > 0.0))
            throw Error("build_scenario: income log-sigma must be positive");

    Series base_load, base_pv, base_price;
    if (cfg.base_csv.empty()) {
        base_load = embedded_base_load(T, cfg.kind);
        base_pv = embedded_base_pv(T);
        base_price = embedded_base_price(T);
    } else {
        load_base_csv(cfg.base_csv, T, base_load, base_pv, base_price);
        if (cfg.kind == ScenarioKind::Weekend) {
            // weekend shape only exists for the embedded profiles; CSV input
            // is taken as-is
        }
    }

    // preset multipliers
    double load_mult = 1.0, pv_mult = 1.0;
    switch (cfg.kind) {
        case ScenarioKind::HighDemand: load_mult = 1.5; break;
        case ScenarioKind::LowDemand: load_mult = 0.6; break;
        case ScenarioKind::HighSolar: pv_mult = 1.8; break;
        default: break;
    }
    Series prices = base_price;
    if (cfg.kind == ScenarioKind::HighPrice) {
        for (int t = 0; t < T; ++t)
            prices[t] = 2.0 * base_price[t] * (t % 2 == 0 ? 0.5 : 1.5);
    }

    Scenario sc;
    sc.label = to_string(cfg.kind);
    sc.params.horizon_T = T;
    sc.prices = std::move(prices);

    struct Stratum {
        IncomeClass cls;
        int count;
    };
    const Stratum strata[3] = {{IncomeClass::Upper, cfg.n_upper},
                               {IncomeClass::Middle, cfg.n_middle},
                               {IncomeClass::Lower, cfg.n_lower}};

    Series scaled_load(base_load), scaled_pv(base_pv);
    for (int t = 0; t < T; ++t) {
        scaled_load[t] *= load_mult;
        scaled_pv[t] *= pv_mult;
    }

    int id = 0;
    for (const auto& stratum : strata) {
        for (int k = 0; k < stratum.count; ++k, ++id) {
            model::Household hh;
            hh.id = id;
            Rng income_rng(cfg.seed, static_cast<std::uint64_t>(id), "income");
            const double raw = draw_income(stratum.cls, cfg, income_rng);
            hh.income = clamp_to_bracket(raw, stratum.cls);
            hh.income_class = model::classify_income(hh.income);
            model::income_to_params(hh.income, hh.xi, hh.beta, hh.lambda);
            hh.weight = 1.0;

            Rng profile_rng(cfg.seed, static_cast<std::uint64_t>(id), "profiles");
            auto [load, pv] = scale_class_profiles(scaled_load, scaled_pv, stratum.cls,
                                                   profile_rng);
            hh.demand = std::move(load);
            sc.households.push_back(std::move(hh));

            model::SolarUnit own;
            own.id = id;
            own.generation = std::move(pv);
            sc.solar.push_back(std::move(own));
        }
    }

    // communal solar farms, ids following the household-owned units
    Series communal = pv_shape(T);
    scale_to_energy(communal, pv_mult * kCommunalPvDailyMwh / kNumCommunalSolar);
    for (int f = 0; f < kNumCommunalSolar; ++f) {
        model::SolarUnit farm;
        farm.id = id + f;
        farm.generation = communal;
        sc.solar.push_back(std::move(farm));
    }

    auto fleet = allocate_bess(sc.households, kFleetBessMwh, kNumBessUnits);
    sc.bess = std::move(fleet);

    const auto violations = model::validate(sc);
    if (!violations.empty()) {
        std::string msg = "generated scenario failed validation:";
        for (const auto& v : violations) msg += "\n  " + v.path + ": " + v.message;
        throw Error(msg);
    }
    return sc;
}

}  // namespace eqgrid::synth
