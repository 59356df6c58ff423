#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "eqgrid/metrics.hpp"
#include "eqgrid/rng.hpp"
#include "eqgrid/synth.hpp"

using namespace eqgrid;
using namespace eqgrid::metrics;

namespace {

double lorenz_auc(const std::vector<std::pair<double, double>>& pts) {
    double area = 0.0;
    for (std::size_t k = 1; k < pts.size(); ++k) {
        const auto& [x0, y0] = pts[k - 1];
        const auto& [x1, y1] = pts[k];
        area += 0.5 * (y0 + y1) * (x1 - x0);
    }
    return area;
}

}  // namespace

TEST_CASE("gini closed forms") {
    CHECK(gini({1, 1, 1, 1}) == doctest::Approx(0.0));
    CHECK(gini({0, 1}) == doctest::Approx(0.5));
    CHECK(gini({0, 0, 0, 1}) == doctest::Approx(0.75));
    CHECK(gini({0, 0}) == doctest::Approx(0.0));  // all-zero convention
    CHECK_THROWS_AS(gini({1.0, -0.1}), Error);
}

TEST_CASE("gini is scale and permutation invariant") {
    Rng rng(3, 0, "gini");
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(rng.index(20));
        std::vector<double> v(n);
        for (auto& x : v) x = rng.uniform(0.0, 10.0);
        const double g = gini(v);
        std::vector<double> scaled(v);
        for (auto& x : scaled) x *= 3.7;
        CHECK(gini(scaled) == doctest::Approx(g).epsilon(1e-12));
        std::vector<double> shuffled(v);
        for (int k = n - 1; k > 0; --k)
            std::swap(shuffled[k], shuffled[rng.index(k + 1)]);
        CHECK(gini(shuffled) == doctest::Approx(g).epsilon(1e-12));
        CHECK(g >= 0.0);
        CHECK(g <= 1.0);
    }
}

TEST_CASE("lorenz endpoints and known shapes") {
    const auto diag = lorenz({1, 1});
    REQUIRE(diag.size() == 3);
    CHECK(diag[0] == std::pair{0.0, 0.0});
    CHECK(diag[1].first == doctest::Approx(0.5));
    CHECK(diag[1].second == doctest::Approx(0.5));
    CHECK(diag[2].second == doctest::Approx(1.0));

    const auto skew = lorenz({0, 1});
    CHECK(skew[1].first == doctest::Approx(0.5));
    CHECK(skew[1].second == doctest::Approx(0.0));
    CHECK(skew[2].second == doctest::Approx(1.0));
}

TEST_CASE("lorenz curves stay below the diagonal and nondecreasing") {
    Rng rng(5, 0, "lorenz");
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> v(10);
        for (auto& x : v) x = rng.uniform(0.01, 5.0);
        const auto pts = lorenz(v);
        CHECK(pts.front() == std::pair{0.0, 0.0});
        CHECK(pts.back().first == doctest::Approx(1.0));
        CHECK(pts.back().second == doctest::Approx(1.0));
        for (std::size_t k = 1; k < pts.size(); ++k) {
            CHECK(pts[k].second >= pts[k - 1].second - 1e-12);
            CHECK(pts[k].second <= pts[k].first + 1e-12);
        }
    }
}

TEST_CASE("pairwise gini equals one minus twice the lorenz area") {
    Rng rng(7, 0, "cross");
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> v(50);
        for (auto& x : v) x = rng.uniform(0.01, 3.0);
        const double g = gini(v);
        const double auc = lorenz_auc(lorenz(v));
        CHECK(std::abs(g - (1.0 - 2.0 * auc)) < 1e-9);
    }
}

TEST_CASE("socio-economic impact index from correlation") {
    CHECK(seii({1, 2, 3}, {3, 2, 1}) == doctest::Approx(1.0));
    CHECK(seii({1, 2, 3}, {1, 2, 3}) == doctest::Approx(0.0));
    const double rho = -std::sqrt(3.0) / 2.0;  // incomes [1,2,3], weights [2,2,1]
    CHECK(seii({1, 2, 3}, {2, 2, 1}) == doctest::Approx((1.0 - rho) / 2.0).epsilon(1e-9));
    CHECK(seii({1, 2, 3}, {2, 2, 1}) == doctest::Approx(0.933).epsilon(1e-3));
    CHECK_THROWS_AS(seii({1, 1, 1}, {1, 2, 3}), Error);
    CHECK_THROWS_AS(seii({1, 2}, {1}), Error);
}

TEST_CASE("technical metrics follow their definitions") {
    synth::SynthConfig cfg;
    cfg.seed = 21;
    cfg.n_upper = 1;
    cfg.n_middle = 1;
    cfg.n_lower = 1;
    const auto sc = synth::build_scenario(cfg);
    const model::EquityWeights w(sc.num_households(), 1.0);
    auto schedule = sched::solve(sched::build_problem(sc, w));
    REQUIRE(schedule.status != sched::ScheduleStatus::Infeasible);
    const auto tm = technical_metrics(schedule, sc);

    double demand_peak = 0.0;
    for (int t = 0; t < sc.horizon(); ++t) {
        double d = 0.0;
        for (const auto& hh : sc.households) d += hh.demand[t];
        demand_peak = std::max(demand_peak, d);
    }
    CHECK(tm.peak_original == doctest::Approx(demand_peak));
    CHECK(tm.peak_reduction_pct ==
          doctest::Approx((demand_peak - schedule.p_peak) / demand_peak * 100.0));
    CHECK(tm.solar_available);
    CHECK(tm.solar_utilization_pct >= 0.0);
    CHECK(tm.solar_utilization_pct <= 100.0 + 1e-9);
}

TEST_CASE("degenerate technical cases") {
    // no reduction when the peak stays
    sched::Schedule s;
    s.status = sched::ScheduleStatus::Optimal;
    s.p_grid.assign(1, Series{1.0, 0.5});
    s.alpha.assign(1, std::vector<Series>(1, Series{1.0, 1.0}));
    s.p_charge.assign(1, std::vector<Series>(1, Series{0.0, 0.0}));
    s.p_discharge.assign(1, std::vector<Series>(1, Series{0.5, 0.5}));
    s.soc.assign(1, Series{1.0, 1.0});
    s.p_peak = 1.0;

    model::Scenario sc;
    sc.params.horizon_T = 2;
    sc.prices = {1.0, 1.0};
    model::Household hh;
    hh.id = 0;
    hh.demand = {1.0, 0.5};
    sc.households.push_back(hh);
    model::SolarUnit su;
    su.id = 1;
    su.generation = {0.3, 0.2};
    sc.solar.push_back(su);
    model::BessUnit u;
    u.id = 0;
    u.capacity_E = 2.0;
    u.p_max = 1.0;
    sc.bess.push_back(u);

    const auto tm = technical_metrics(s, sc);
    CHECK(tm.peak_reduction_pct == doctest::Approx(0.0));
    // alpha = 1 everywhere: every unit of generation is allocated
    CHECK(tm.solar_utilization_pct == doctest::Approx(100.0));
    // one battery of capacity 2 discharging 1.0 total: half a cycle
    CHECK(tm.avg_bess_cycles == doctest::Approx(0.5));

    // absent solar reports not-applicable
    sc.solar.clear();
    s.alpha.clear();
    const auto tm2 = technical_metrics(s, sc);
    CHECK_FALSE(tm2.solar_available);
}

TEST_CASE("metrics report serializes and parses back") {
    MetricsReport rep;
    rep.gini = 0.12;
    rep.seii = 0.7;
    rep.seii_defined = true;
    rep.peak_original = 2.0;
    rep.peak_optimized = 0.5;
    rep.peak_reduction_pct = 75.0;
    rep.solar_available = false;
    rep.cooperative_gain = 42.0;
    const auto back = report_from_json(report_to_json(rep));
    CHECK(back.gini == doctest::Approx(0.12));
    CHECK(back.seii_defined);
    CHECK(back.seii == doctest::Approx(0.7));
    CHECK_FALSE(back.solar_available);
    CHECK(back.cooperative_gain == doctest::Approx(42.0));

    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "eqgrid_metrics_test";
    fs::create_directories(dir);
    const auto path = (dir / "lorenz.csv").string();
    write_lorenz_csv({{0, 0}, {0.5, 0.2}, {1, 1}}, path);
    const auto pts = read_lorenz_csv(path);
    REQUIRE(pts.size() == 3);
    CHECK(pts[1].second == doctest::Approx(0.2));
}
