#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "eqgrid/alloc.hpp"
#include "eqgrid/rng.hpp"
#include "eqgrid/synth.hpp"
#include "oracles.hpp"

using namespace eqgrid;
using namespace eqgrid::alloc;
using sched::Schedule;

namespace {

// Hand-sized schedule over N households, one solar unit, one battery, T=2.
Schedule hand_schedule(int n) {
    Schedule s;
    s.status = sched::ScheduleStatus::Optimal;
    s.p_grid.assign(n, Series(2, 0.0));
    s.alpha.assign(1, std::vector<Series>(n, Series(2, 0.0)));
    s.p_charge.assign(1, std::vector<Series>(n, Series(2, 0.0)));
    s.p_discharge.assign(1, std::vector<Series>(n, Series(2, 0.0)));
    s.soc.assign(1, Series(2, 0.5));
    return s;
}

model::Scenario hand_scenario(int n) {
    model::Scenario sc;
    sc.params.horizon_T = 2;
    sc.prices = {10.0, 30.0};  // p_avg = 20
    for (int i = 0; i < n; ++i) {
        model::Household hh;
        hh.id = i;
        hh.income = 100000;
        hh.demand = {1.0, 1.0};
        sc.households.push_back(hh);
    }
    model::SolarUnit su;
    su.id = n;
    su.generation = {1.0, 2.0};
    sc.solar.push_back(su);
    model::BessUnit u;
    u.id = 0;
    u.capacity_E = 1.0;
    u.p_max = 0.5;
    sc.bess.push_back(u);
    return sc;
}

}  // namespace

TEST_CASE("normalization and net shares") {
    auto rep = net_shares({2, 3, 5}, {0, 0, 0}, {0, 0, 0}, {0, 0, 0});
    CHECK(rep.hat_solar[0] == doctest::Approx(0.2));
    CHECK(rep.hat_solar[1] == doctest::Approx(0.3));
    CHECK(rep.hat_solar[2] == doctest::Approx(0.5));
    // zero-total components normalize to all-zeros, so only solar remains
    double net_sum = 0.0;
    for (double v : rep.net_share) net_sum += v;
    CHECK(net_sum == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : rep.hat_bess) CHECK(v == 0.0);
}

TEST_CASE("uniform components cancel to zero net shares") {
    std::vector<double> u{1, 1, 1, 1};
    auto rep = net_shares(u, u, u, u);
    for (double v : rep.net_share) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("net shares always sum to zero") {
    Rng rng(5, 0, "alloc");
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.index(6));
        auto draw = [&] {
            std::vector<double> v(n);
            for (auto& x : v) x = rng.uniform(0.0, 5.0);
            return v;
        };
        auto rep = net_shares(draw(), draw(), draw(), draw());
        double sum = 0.0;
        for (double v : rep.net_share) sum += v;
        CHECK(std::abs(sum) < 1e-9);
        for (double v : rep.hat_solar) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("negative raw component is a fault") {
    CHECK_THROWS_AS(net_shares({-1, 2}, {0, 0}, {0, 0}, {0, 0}), Error);
}

TEST_CASE("solar component is proportional to intake and weight") {
    auto sc = hand_scenario(2);
    auto s = hand_schedule(2);
    // equal intake of 0.5 units of generation each hour
    s.alpha[0][0] = {0.25, 0.25};
    s.alpha[0][1] = {0.25, 0.25};
    const auto phi = solar_component(s, sc, {1.0, 2.0});
    CHECK(phi[1] == doctest::Approx(2.0 * phi[0]).epsilon(1e-12));

    const auto none = solar_component(hand_schedule(2), sc, {1.0, 2.0});
    CHECK(none[0] == 0.0);
    CHECK(none[1] == 0.0);
}

TEST_CASE("bess component shares inversely with weight") {
    auto s = hand_schedule(2);
    s.p_charge[0][0] = {0.2, 0.0};
    s.p_charge[0][1] = {0.2, 0.0};
    s.p_discharge[0][0] = {0.0, 0.1};
    s.p_discharge[0][1] = {0.0, 0.1};
    const auto phi = bess_component(s, {1.0, 2.0}, 0.1);
    CHECK(phi[0] == doctest::Approx(2.0 * phi[1]).epsilon(1e-12));

    const auto none = bess_component(hand_schedule(2), {1.0, 2.0}, 0.1);
    CHECK(none[0] == 0.0);
    CHECK_THROWS_AS(bess_component(s, {0.0, 1.0}, 0.1), Error);
}

TEST_CASE("peak component rewards distance from the pool peak") {
    auto s = hand_schedule(2);
    s.p_grid[0] = {0.1, 0.2};
    s.p_grid[1] = {0.8, 0.3};
    s.p_peak = 0.9;
    const auto phi = peak_component(s, {1.0, 1.0}, 1.0);
    CHECK(phi[0] == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(phi[1] == doctest::Approx(0.1).epsilon(1e-12));

    // single household: own max equals the pool peak
    auto solo = hand_schedule(1);
    solo.p_grid[0] = {0.4, 0.2};
    solo.p_peak = 0.4;
    const auto phi1 = peak_component(solo, {1.0}, 1.0);
    CHECK(phi1[0] == doctest::Approx(0.0));
}

TEST_CASE("grid component uses weighted usage as denominator") {
    auto s = hand_schedule(2);
    s.p_grid[0] = {0.5, 0.5};
    s.p_grid[1] = {0.5, 0.5};
    const auto phi = grid_component(s, {1.0, 1.0}, 20.0);
    CHECK(phi[0] == doctest::Approx(phi[1]).epsilon(1e-12));

    const auto none = grid_component(hand_schedule(2), {1.0, 1.0}, 20.0);
    CHECK(none[0] == 0.0);
}

TEST_CASE("three-household hand-computed components") {
    auto sc = hand_scenario(3);
    auto s = hand_schedule(3);
    // intake in MWh over both hours: h0 gets 0.5, h1 gets 1.0, h2 gets 1.5
    s.alpha[0][0] = {0.5, 0.0};   // 0.5 of hour-0 generation (1.0)
    s.alpha[0][1] = {0.0, 0.5};   // 1.0 of hour-1 generation (2.0)
    s.alpha[0][2] = {0.5, 0.5};   // 0.5 + 1.0
    const std::vector<double> w{1.0, 1.5, 0.5};
    const auto phi = solar_component(s, sc, w);
    // p_avg = 20: raw = intake * 20 * w
    CHECK(phi[0] == doctest::Approx(0.5 * 20 * 1.0));
    CHECK(phi[1] == doctest::Approx(1.0 * 20 * 1.5));
    CHECK(phi[2] == doctest::Approx(1.5 * 20 * 0.5));

    s.p_grid[0] = {0.2, 0.2};
    s.p_grid[1] = {0.1, 0.0};
    s.p_grid[2] = {0.4, 0.1};
    const auto grid = grid_component(s, w, 20.0);
    const double weighted = 0.4 * 1.0 + 0.1 * 1.5 + 0.5 * 0.5;
    CHECK(grid[0] == doctest::Approx(0.4 * 20.0 / weighted));
    CHECK(grid[1] == doctest::Approx(0.1 * 20.0 / weighted));
    CHECK(grid[2] == doctest::Approx(0.5 * 20.0 / weighted));
}

TEST_CASE("cooperative gain is plain subtraction") {
    CHECK(cooperative_gain(36752.44, 30271.08) == doctest::Approx(6481.36).epsilon(1e-12));
    CHECK(cooperative_gain(10466.38, 4749.24) == doctest::Approx(5717.14).epsilon(1e-12));
    CHECK(cooperative_gain(123.45, 123.45) == doctest::Approx(0.0));
}

TEST_CASE("normalized shares are scale invariant") {
    Rng rng(6, 0, "scale");
    std::vector<double> solar(4), bess(4), peak(4), grid(4);
    for (auto* v : {&solar, &bess, &peak, &grid})
        for (auto& x : *v) x = rng.uniform(0.1, 3.0);
    const auto a = net_shares(solar, bess, peak, grid);
    const double c = 7.3;
    for (auto* v : {&solar, &bess, &peak, &grid})
        for (auto& x : *v) x *= c;
    const auto b = net_shares(solar, bess, peak, grid);
    for (int i = 0; i < 4; ++i) {
        CHECK(a.hat_solar[i] == doctest::Approx(b.hat_solar[i]).epsilon(1e-12));
        CHECK(a.net_share[i] == doctest::Approx(b.net_share[i]).epsilon(1e-12));
    }
}

TEST_CASE("raising a weight shifts shares in its favor at fixed schedule") {
    auto sc = hand_scenario(2);
    auto s = hand_schedule(2);
    s.alpha[0][0] = {0.3, 0.3};
    s.alpha[0][1] = {0.3, 0.3};
    s.p_charge[0][0] = {0.1, 0.0};
    s.p_charge[0][1] = {0.1, 0.0};
    s.p_grid[0] = {0.3, 0.3};
    s.p_grid[1] = {0.3, 0.3};
    s.p_peak = 0.7;

    std::vector<double> w{1.0, 1.0};
    const auto before = net_shares(solar_component(s, sc, w), bess_component(s, w, 0.1),
                                   peak_component(s, w, 8700.0), grid_component(s, w, 20.0));
    w[1] = 1.5;
    const auto after = net_shares(solar_component(s, sc, w), bess_component(s, w, 0.1),
                                  peak_component(s, w, 8700.0), grid_component(s, w, 20.0));
    CHECK(after.hat_solar[1] > before.hat_solar[1]);
    CHECK(after.hat_peak[1] > before.hat_peak[1]);
    CHECK(after.hat_bess[1] < before.hat_bess[1]);
}

TEST_CASE("allocation report survives a JSON round trip") {
    synth::SynthConfig cfg;
    cfg.seed = 13;
    cfg.n_upper = 1;
    cfg.n_middle = 2;
    cfg.n_lower = 1;
    const auto sc = synth::build_scenario(cfg);
    const model::EquityWeights w(sc.num_households(), 1.0);
    auto schedule = sched::solve(sched::build_problem(sc, w));
    REQUIRE(schedule.status != sched::ScheduleStatus::Infeasible);
    const auto baseline = sched::baseline_costs(sc);
    const auto rep = build_report(schedule, sc, w, baseline);
    const auto back = report_from_json(report_to_json(rep));
    CHECK(back.net_share.size() == rep.net_share.size());
    CHECK(back.cooperative_gain == doctest::Approx(rep.cooperative_gain));
    CHECK(rep.cooperative_gain ==
          doctest::Approx(rep.no_coop_cost - rep.cooperative_cost).epsilon(1e-12));
}

TEST_CASE("proportional shares differ from the classical Shapley value") {
    // three-player toy cost game: v(S) = sum of members' stand-alone costs
    // minus a pooling discount that grows with coalition size
    const std::vector<double> standalone{10.0, 6.0, 2.0};
    auto v = [&](unsigned mask) {
        double sum = 0.0;
        int size = 0;
        for (int i = 0; i < 3; ++i)
            if (mask & (1u << i)) {
                sum += standalone[i];
                ++size;
            }
        const double discount = size >= 2 ? 2.0 * (size - 1) : 0.0;
        return sum - discount;
    };
    const auto phi = oracles::shapley_value(3, v);
    // efficiency: the grand-coalition value is fully distributed
    CHECK(phi[0] + phi[1] + phi[2] == doctest::Approx(v(0b111)).epsilon(1e-9));
    // the proportional rule splits by stand-alone share instead
    const double total = standalone[0] + standalone[1] + standalone[2];
    std::vector<double> proportional;
    for (double s : standalone) proportional.push_back(v(0b111) * s / total);
    bool differs = false;
    for (int i = 0; i < 3; ++i)
        if (std::abs(phi[i] - proportional[i]) > 1e-9) differs = true;
    CHECK(differs);
}
