// Test-only oracles, independent of the implementation paths they check:
// a coarse-grid brute force for tiny dispatch instances, a 1-D grid search
// for the standalone surplus, central finite differences for PPO gradients,
// and a classical coalition-enumeration Shapley value for toy games.
#ifndef EQGRID_TESTS_ORACLES_HPP
#define EQGRID_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "eqgrid/model.hpp"

namespace oracles {

using eqgrid::Series;
using eqgrid::model::Scenario;

// Brute-force minimum of the dispatch objective on tiny instances
// (N <= 2, T <= 3, B <= 1) generated with vacuous budget/floor/ramp rows and
// negligible beta/lambda, so balance bands, the solar pool, SOC dynamics,
// power caps, and the peak charge shape the optimum alone.
//
// The search enumerates the battery net action per hour (charge > 0,
// discharge < 0). Given the battery profile, the inner allocation is solved
// exactly: deliverable energy (usable solar + discharge) fills demand sinks
// in descending weight order up to each household's lower band, with the
// charging draw acting as one more sink at the cheapest weight; whatever
// each sink misses is imported. The objective is convex in the battery
// profile, so refining the grid box around the incumbent converges.
struct TinyDispatchResult {
    double objective = std::numeric_limits<double>::infinity();
    bool feasible = false;
};

namespace detail {

struct HourEval {
    double energy = 0.0;
    double grid_total = 0.0;
    bool feasible = false;
};

inline HourEval eval_hour(const Scenario& sc, const std::vector<double>& weights,
                          int h, double charge, double discharge, double pool) {
    HourEval out;
    const int N = sc.num_households();
    const double eps = sc.params.epsilon;
    double band_hi = 0.0;
    for (int i = 0; i < N; ++i) band_hi += sc.households[i].demand[h] * (1.0 + eps);
    const double w_min = *std::min_element(weights.begin(), weights.end());

    // discharged power must be absorbed by demand bands plus the charge draw
    if (discharge > band_hi + charge + 1e-9) return out;
    const double solar_used = std::min(pool, band_hi + charge - discharge);
    const double deliver = std::max(solar_used, 0.0) + discharge;

    struct Sink {
        double w, cap;
    };
    std::vector<Sink> sinks;
    for (int i = 0; i < N; ++i)
        sinks.push_back({weights[i], sc.households[i].demand[h] * (1.0 - eps)});
    sinks.push_back({w_min, charge});
    std::sort(sinks.begin(), sinks.end(), [](const Sink& a, const Sink& b) {
        return a.w > b.w;
    });
    double rest = deliver;
    for (const auto& sink : sinks) {
        const double got = std::min(rest, sink.cap);
        rest -= got;
        const double imported = sink.cap - got;
        out.energy += sink.w * sc.prices[h] * imported;
        out.grid_total += imported;
    }
    out.feasible = true;
    return out;
}

}  // namespace detail

inline TinyDispatchResult brute_force_dispatch(const Scenario& sc,
                                               const std::vector<double>& weights) {
    const int T = sc.horizon();
    const bool has_bess = !sc.bess.empty();
    const auto& gp = sc.params;

    Series pool(T, 0.0);
    for (const auto& su : sc.solar)
        for (int t = 0; t < T; ++t) pool[t] += su.generation[t];

    const double pmax = has_bess ? sc.bess[0].p_max : 0.0;
    const double cap = has_bess ? sc.bess[0].capacity_E : 0.0;

    TinyDispatchResult best;
    std::vector<double> best_u(T, 0.0);
    auto evaluate = [&](const std::vector<double>& u) {
        double soc = has_bess ? sc.bess[0].soc_initial : 0.0;
        double energy = 0.0, peak = 0.0;
        for (int h = 0; h < T; ++h) {
            if (has_bess) {
                soc += u[h] >= 0 ? sc.bess[0].eta_c * u[h] : u[h] / sc.bess[0].eta_d;
                if (soc < sc.bess[0].soc_min_frac * cap - 1e-9 ||
                    soc > sc.bess[0].soc_max_frac * cap + 1e-9)
                    return;
            }
            const auto he = detail::eval_hour(sc, weights, h, std::max(u[h], 0.0),
                                              std::max(-u[h], 0.0), pool[h]);
            if (!he.feasible) return;
            energy += he.energy;
            peak = std::max(peak, he.grid_total);
        }
        if (has_bess && soc < gp.terminal_soc_frac * cap - 1e-9) return;
        const double obj = energy + gp.c_peak * peak;
        if (obj < best.objective) {
            best.objective = obj;
            best.feasible = true;
            best_u = u;
        }
    };

    std::vector<double> u(T, 0.0);
    if (!has_bess) {
        evaluate(u);
        return best;
    }

    // box refinement around the incumbent; the objective is convex in the
    // battery profile, so shrinking boxes converge to the optimum
    std::vector<double> center(T, 0.0);
    double radius = pmax;
    const int side = 13;  // points per dimension per round
    for (int round = 0; round < 11; ++round) {
        std::vector<int> idx(T, 0);
        for (;;) {
            for (int h = 0; h < T; ++h) {
                const double lo = std::max(center[h] - radius, -pmax);
                const double hi = std::min(center[h] + radius, pmax);
                u[h] = lo + (hi - lo) * idx[h] / (side - 1);
            }
            evaluate(u);
            int d = 0;
            while (d < T && ++idx[d] == side) idx[d++] = 0;
            if (d == T) break;
        }
        if (!best.feasible) break;
        center = best_u;
        radius /= 3.0;  // new box spans +-2 cells of the previous grid
    }
    return best;
}

// 1-D grid search for the per-step standalone surplus.
inline double outside_option_grid(const eqgrid::model::Household& hh,
                                  const Series& own_solar,
                                  const eqgrid::model::GlobalParams& gp,
                                  double d_max = 200.0, double step = 1e-3) {
    double total = 0.0;
    for (std::size_t t = 0; t < own_solar.size(); ++t) {
        double best = -std::numeric_limits<double>::infinity();
        for (double d = 0.0; d <= d_max; d += step) {
            const double z = d - own_solar[t];
            const double import = std::max(z, 0.0);
            const double nem = z >= 0 ? gp.pi_plus * z : gp.pi_minus * z;
            if (nem > hh.xi + 1e-12) continue;  // per-step budget
            const double value = hh.beta * d - hh.lambda * import - nem - own_solar[t];
            best = std::max(best, value);
        }
        total += best;
    }
    return total;
}

// Central finite differences of a scalar function of a parameter vector.
inline std::vector<double> finite_difference(const std::function<double()>& eval,
                                             std::vector<double>& params, double h = 1e-5) {
    std::vector<double> grad(params.size());
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double keep = params[k];
        params[k] = keep + h;
        const double up = eval();
        params[k] = keep - h;
        const double dn = eval();
        params[k] = keep;
        grad[k] = (up - dn) / (2.0 * h);
    }
    return grad;
}

// Classical Shapley value by coalition enumeration (n small).
inline std::vector<double> shapley_value(int n, const std::function<double(unsigned)>& v) {
    std::vector<double> fact(n + 1, 1.0);
    for (int k = 1; k <= n; ++k) fact[k] = fact[k - 1] * k;
    std::vector<double> phi(n, 0.0);
    for (unsigned coalition = 0; coalition < (1u << n); ++coalition) {
        const int size = __builtin_popcount(coalition);
        for (int i = 0; i < n; ++i) {
            if (coalition & (1u << i)) continue;
            const double weight = fact[size] * fact[n - size - 1] / fact[n];
            phi[i] += weight * (v(coalition | (1u << i)) - v(coalition));
        }
    }
    return phi;
}

}  // namespace oracles

#endif
