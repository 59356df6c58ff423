#include "eqgrid/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace eqgrid::model {

using nlohmann::json;

std::string to_string(IncomeClass c) {
    switch (c) {
        case IncomeClass::Lower: return "Lower";
        case IncomeClass::Middle: return "Middle";
        case IncomeClass::Upper: return "Upper";
    }
    return "Middle";
}

IncomeClass income_class_from_string(const std::string& s) {
    if (s == "Lower") return IncomeClass::Lower;
    if (s == "Middle") return IncomeClass::Middle;
    if (s == "Upper") return IncomeClass::Upper;
    throw Error("unknown income class: " + s);
}

IncomeClass classify_income(double income) {
    if (income < kIncomeLowerBound) return IncomeClass::Lower;
    if (income <= kIncomeUpperBound) return IncomeClass::Middle;
    return IncomeClass::Upper;
}

void income_to_params(double income, double& xi, double& beta, double& lambda) {
    switch (classify_income(income)) {
        case IncomeClass::Lower: xi = 50.0; beta = 10.0; lambda = 100.0; return;
        case IncomeClass::Middle: xi = 80.0; beta = 9.0; lambda = 60.0; return;
        case IncomeClass::Upper: xi = 100.0; beta = 8.0; lambda = 40.0; return;
    }
}

namespace {

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

void check_series(const Series& s, int T, const std::string& path,
                  std::vector<Violation>& out) {
    if (static_cast<int>(s.size()) != T) {
        out.push_back({path, "length " + std::to_string(s.size()) +
                                 " does not match horizon " + std::to_string(T)});
        return;
    }
    for (int t = 0; t < T; ++t) {
        if (!finite_nonneg(s[t])) {
            out.push_back({path + "[" + std::to_string(t) + "]",
                           "must be finite and nonnegative"});
        }
    }
}

}  // namespace

std::vector<Violation> validate(const Scenario& sc) {
    std::vector<Violation> out;
    const auto& gp = sc.params;
    const int T = gp.horizon_T;

    if (T < 1) out.push_back({"params.horizon_T", "must be >= 1"});
    if (!(gp.epsilon > 0.0 && gp.epsilon < 1.0))
        out.push_back({"params.epsilon", "must satisfy 0 < epsilon < 1"});
    if (!(gp.theta >= 0.0 && gp.theta <= 1.0))
        out.push_back({"params.theta", "must satisfy 0 <= theta <= 1"});
    if (!(gp.w_min < gp.w_max))
        out.push_back({"params.w_min", "w_min must be below w_max"});

    if (sc.households.empty()) out.push_back({"households", "need at least one household"});

    for (std::size_t i = 0; i < sc.households.size(); ++i) {
        const auto& hh = sc.households[i];
        const std::string base = "households[" + std::to_string(i) + "]";
        check_series(hh.demand, T, base + ".demand", out);
        if (!(hh.xi > 0.0)) out.push_back({base + ".xi", "must be positive"});
        if (!(hh.beta > 0.0)) out.push_back({base + ".beta", "must be positive"});
        if (!(hh.lambda > 0.0)) out.push_back({base + ".lambda", "must be positive"});
        if (!(hh.weight >= gp.w_min && hh.weight <= gp.w_max))
            out.push_back({base + ".weight", "outside [w_min, w_max]"});
        double xi, beta, lambda;
        income_to_params(hh.income, xi, beta, lambda);
        if (hh.xi != xi || hh.beta != beta || hh.lambda != lambda)
            out.push_back({base, "(xi, beta, lambda) inconsistent with income bracket"});
        if (hh.income_class != classify_income(hh.income))
            out.push_back({base + ".income_class", "inconsistent with income bracket"});
    }

    for (std::size_t s = 0; s < sc.solar.size(); ++s) {
        check_series(sc.solar[s].generation, T,
                     "solar[" + std::to_string(s) + "].generation", out);
    }

    double total_bess = 0.0;
    for (std::size_t b = 0; b < sc.bess.size(); ++b) {
        const auto& u = sc.bess[b];
        const std::string base = "bess[" + std::to_string(b) + "]";
        if (!(u.capacity_E > 0.0)) out.push_back({base + ".capacity_E", "must be positive"});
        if (!(u.p_max > 0.0)) out.push_back({base + ".p_max", "must be positive"});
        if (!(u.eta_c > 0.0 && u.eta_c <= 1.0))
            out.push_back({base + ".eta_c", "must be in (0, 1]"});
        if (!(u.eta_d > 0.0 && u.eta_d <= 1.0))
            out.push_back({base + ".eta_d", "must be in (0, 1]"});
        if (!(u.soc_min_frac >= 0.0 && u.soc_min_frac < u.soc_max_frac &&
              u.soc_max_frac <= 1.0))
            out.push_back({base, "need 0 <= soc_min_frac < soc_max_frac <= 1"});
        if (u.soc_initial < u.soc_min_frac * u.capacity_E - 1e-12 ||
            u.soc_initial > u.soc_max_frac * u.capacity_E + 1e-12)
            out.push_back({base + ".soc_initial", "outside the SOC band"});
        total_bess += u.capacity_E;
    }
    if (total_bess > kMaxCommunityBessMwh + 1e-9)
        out.push_back({"bess", "community capacity exceeds " +
                                   std::to_string(kMaxCommunityBessMwh) + " MWh"});

    check_series(sc.prices, T, "prices", out);
    return out;
}

// ---------------------------------------------------------------------------
// JSON serialization. Top-level keys: households, solar, bess, prices,
// params, label. All series are chronological arrays of length T.

namespace {

json params_to_json(const GlobalParams& p) {
    return json{{"horizon_T", p.horizon_T},
                {"epsilon", p.epsilon},
                {"theta", p.theta},
                {"omega", p.omega},
                {"c_peak", p.c_peak},
                {"c_bess", p.c_bess},
                {"r_max", p.r_max},
                {"tau_min", p.tau_min},
                {"pi_plus", p.pi_plus},
                {"pi_minus", p.pi_minus},
                {"terminal_soc_frac", p.terminal_soc_frac},
                {"w_min", p.w_min},
                {"w_max", p.w_max}};
}

GlobalParams params_from_json(const json& j) {
    GlobalParams p;
    p.horizon_T = j.value("horizon_T", p.horizon_T);
    p.epsilon = j.value("epsilon", p.epsilon);
    p.theta = j.value("theta", p.theta);
    p.omega = j.value("omega", p.omega);
    p.c_peak = j.value("c_peak", p.c_peak);
    p.c_bess = j.value("c_bess", p.c_bess);
    p.r_max = j.value("r_max", p.r_max);
    p.tau_min = j.value("tau_min", p.tau_min);
    p.pi_plus = j.value("pi_plus", p.pi_plus);
    p.pi_minus = j.value("pi_minus", p.pi_minus);
    p.terminal_soc_frac = j.value("terminal_soc_frac", p.terminal_soc_frac);
    p.w_min = j.value("w_min", p.w_min);
    p.w_max = j.value("w_max", p.w_max);
    return p;
}

}  // namespace

std::string to_json(const Scenario& sc) {
    json j;
    j["label"] = sc.label;
    j["params"] = params_to_json(sc.params);
    j["prices"] = sc.prices;
    j["households"] = json::array();
    for (const auto& hh : sc.households) {
        j["households"].push_back({{"id", hh.id},
                                   {"income", hh.income},
                                   {"income_class", to_string(hh.income_class)},
                                   {"demand", hh.demand},
                                   {"xi", hh.xi},
                                   {"beta", hh.beta},
                                   {"lambda", hh.lambda},
                                   {"weight", hh.weight}});
    }
    j["solar"] = json::array();
    for (const auto& s : sc.solar)
        j["solar"].push_back({{"id", s.id}, {"generation", s.generation}});
    j["bess"] = json::array();
    for (const auto& b : sc.bess) {
        j["bess"].push_back({{"id", b.id},
                             {"capacity_E", b.capacity_E},
                             {"p_max", b.p_max},
                             {"eta_c", b.eta_c},
                             {"eta_d", b.eta_d},
                             {"soc_min_frac", b.soc_min_frac},
                             {"soc_max_frac", b.soc_max_frac},
                             {"soc_initial", b.soc_initial}});
    }
    return j.dump(2);
}

Scenario scenario_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string("scenario JSON parse error: ") + e.what());
    }
    Scenario sc;
    try {
        sc.label = j.value("label", "");
        sc.params = params_from_json(j.value("params", json::object()));
        sc.prices = j.value("prices", Series{});
        for (const auto& h : j.value("households", json::array())) {
            Household hh;
            hh.id = h.value("id", 0);
            hh.income = h.value("income", 0.0);
            hh.income_class = income_class_from_string(h.value("income_class", "Middle"));
            hh.demand = h.value("demand", Series{});
            hh.xi = h.value("xi", 0.0);
            hh.beta = h.value("beta", 0.0);
            hh.lambda = h.value("lambda", 0.0);
            hh.weight = h.value("weight", 1.0);
            sc.households.push_back(std::move(hh));
        }
        for (const auto& s : j.value("solar", json::array())) {
            SolarUnit u;
            u.id = s.value("id", 0);
            u.generation = s.value("generation", Series{});
            sc.solar.push_back(std::move(u));
        }
        for (const auto& b : j.value("bess", json::array())) {
            BessUnit u;
            u.id = b.value("id", 0);
            u.capacity_E = b.value("capacity_E", 0.0);
            u.p_max = b.value("p_max", 0.0);
            u.eta_c = b.value("eta_c", 0.95);
            u.eta_d = b.value("eta_d", 0.95);
            u.soc_min_frac = b.value("soc_min_frac", 0.15);
            u.soc_max_frac = b.value("soc_max_frac", 0.95);
            u.soc_initial = b.contains("soc_initial") ? b["soc_initial"].get<double>()
                                                      : 0.5 * u.capacity_E;
            sc.bess.push_back(std::move(u));
        }
    } catch (const json::exception& e) {
        throw IoError(std::string("scenario JSON field error: ") + e.what());
    }
    return sc;
}

void save_scenario(const Scenario& sc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << to_json(sc) << "\n";
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return scenario_from_json(ss.str());
}

}  // namespace eqgrid::model
