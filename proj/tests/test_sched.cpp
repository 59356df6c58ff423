#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "eqgrid/metrics.hpp"
#include "eqgrid/rng.hpp"
#include "eqgrid/sched.hpp"
#include "eqgrid/synth.hpp"
#include "instances.hpp"
#include "oracles.hpp"

using namespace eqgrid;
using namespace eqgrid::sched;
using instances::make_household;
using instances::random_weights;
using instances::tiny_scenario;
using model::GlobalParams;
using model::Household;
using model::Scenario;

TEST_CASE("utility substitutes exactly") {
    Household hh = make_household(0, 100000, {1.0});
    CHECK(utility(hh, 1.0, 0.0) == doctest::Approx(10.0));
    CHECK(utility(hh, 1.0, 0.1) == doctest::Approx(0.0));
    Household mid = make_household(1, 200000, {1.0});
    CHECK(utility(mid, 2.0, 0.05) == doctest::Approx(15.0));
}

TEST_CASE("NEM price is piecewise in the sign of net import") {
    GlobalParams gp;
    CHECK(nem_price(1.0, gp) == doctest::Approx(0.4));
    CHECK(nem_price(-1.0, gp) == doctest::Approx(-0.2));
    CHECK(nem_price(0.0, gp) == doctest::Approx(0.0));
}

TEST_CASE("outside option matches the grid-search oracle at the budget cap") {
    GlobalParams gp;
    Household hh = make_household(0, 100000, {1.0, 1.0});
    hh.lambda = 1e-12;  // the documented lambda = 0 limit
    hh.beta = 10.0;
    hh.xi = 50.0;
    Series no_solar(2, 0.0);
    const double lp_value = outside_option(hh, no_solar, {10.0, 10.0}, gp);
    const double oracle = oracles::outside_option_grid(hh, no_solar, gp, 200.0, 1e-3);
    // closed form: d = xi/pi_plus per step, value (beta - pi_plus) * d
    const double closed = 2.0 * (10.0 - 0.4) * (50.0 / 0.4);
    CHECK(lp_value == doctest::Approx(closed).epsilon(1e-6));
    CHECK(lp_value == doctest::Approx(oracle).epsilon(1e-3));
}

TEST_CASE("outside option is zero without appetite or solar") {
    GlobalParams gp;
    Household hh = make_household(0, 100000, {1.0});
    hh.beta = 1e-9;
    Series no_solar(1, 0.0);
    CHECK(outside_option(hh, no_solar, {10.0}, gp) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("self-consumption cancels the NEM term") {
    GlobalParams gp;
    Household hh = make_household(0, 100000, {1.0});
    hh.beta = 1e-9;  // the optimum sits at z = 0 -> d = own solar
    hh.lambda = 100.0;
    Series own{2.0};
    const double value = outside_option(hh, own, {10.0}, gp);
    const double oracle = oracles::outside_option_grid(hh, own, gp, 20.0, 1e-4);
    CHECK(value == doctest::Approx(oracle).epsilon(1e-4));
    // at d = own solar: utility beta*2 ~ 0, import 0, NEM 0, minus solar
    CHECK(value == doctest::Approx(gp.pi_minus * 2.0 - 2.0).epsilon(1e-6));
}

TEST_CASE("problem size follows the documented closed forms") {
    SUBCASE("single household, single hour, no DERs") {
        Scenario sc = tiny_scenario(1, 1, 1, false, false);
        const auto w = model::EquityWeights{1.0};
        auto dp = build_problem(sc, w);
        CHECK(dp.lp.num_cols() == 3);  // grid import, peak, equity penalty
        CHECK(dp.lp.num_rows() == 7);
        CHECK(dp.lp.num_cols() == expected_cols(1, 0, 0, 1));
        CHECK(dp.lp.num_rows() == expected_rows(1, 0, 0, 1));
    }
    SUBCASE("full fifty-household scenario") {
        synth::SynthConfig cfg;
        cfg.seed = 1;
        const Scenario sc = synth::build_scenario(cfg);
        const model::EquityWeights w(sc.num_households(), 1.0);
        auto dp = build_problem(sc, w);
        CHECK(dp.lp.num_cols() ==
              expected_cols(sc.num_households(), sc.num_solar(), sc.num_bess(), sc.horizon()));
        CHECK(dp.lp.num_rows() ==
              expected_rows(sc.num_households(), sc.num_solar(), sc.num_bess(), sc.horizon()));
    }
}

TEST_CASE("degenerate balance tolerance pins supply to demand") {
    Scenario sc = tiny_scenario(2, 1, 2, false, false);
    sc.params.epsilon = 1e-9;
    const model::EquityWeights w{1.0};
    auto dp = build_problem(sc, w);
    auto schedule = solve(dp);
    REQUIRE(schedule.status != ScheduleStatus::Infeasible);
    for (int t = 0; t < 2; ++t)
        CHECK(schedule.p_grid[0][t] ==
              doctest::Approx(sc.households[0].demand[t]).epsilon(1e-6));
}

TEST_CASE("no-DER instance follows the closed-form dispatch") {
    // D = [1,1], prices [10,20]: P_grid = (1-eps) each hour, peak likewise
    Scenario sc = tiny_scenario(3, 1, 2, false, false);
    sc.households[0].demand = {1.0, 1.0};
    sc.prices = {10.0, 20.0};
    sc.params.c_peak = 8.7;
    const model::EquityWeights w{1.0};
    auto schedule = solve(build_problem(sc, w));
    const double eps = sc.params.epsilon;
    CHECK(schedule.p_grid[0][0] == doctest::Approx(1.0 - eps).epsilon(1e-6));
    CHECK(schedule.p_grid[0][1] == doctest::Approx(1.0 - eps).epsilon(1e-6));
    CHECK(schedule.p_peak == doctest::Approx(1.0 - eps).epsilon(1e-6));
    CHECK(schedule.cost_energy == doctest::Approx(30.0 * (1.0 - eps)).epsilon(1e-6));
    const auto bf = oracles::brute_force_dispatch(sc, w);
    REQUIRE(bf.feasible);
    CHECK(schedule.objective ==
          doctest::Approx(bf.objective).epsilon(0.01));
}

TEST_CASE("zero demand gives the all-zero schedule") {
    Scenario sc = tiny_scenario(4, 1, 2, false, false);
    sc.households[0].demand = {0.0, 0.0};
    const model::EquityWeights w{1.0};
    auto schedule = solve(build_problem(sc, w));
    REQUIRE(schedule.status != ScheduleStatus::Infeasible);
    CHECK(schedule.objective == doctest::Approx(0.0).epsilon(1e-9));
    for (double v : schedule.p_grid[0]) CHECK(v == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("battery arbitrage charges cheap hours and discharges dear ones") {
    Scenario sc = tiny_scenario(5, 1, 2, false, true);
    sc.households[0].demand = {0.2, 0.2};
    sc.prices = {1.0, 100.0};
    sc.params.c_peak = 0.0;
    sc.bess[0].capacity_E = 1.0;
    sc.bess[0].p_max = 0.5;
    sc.bess[0].eta_c = sc.bess[0].eta_d = 0.9;
    sc.bess[0].soc_initial = 0.5;
    const model::EquityWeights w{1.0};
    auto schedule = solve(build_problem(sc, w));
    REQUIRE(schedule.status != ScheduleStatus::Infeasible);
    double charge_h0 = 0.0, discharge_h1 = 0.0;
    for (int i = 0; i < 1; ++i) {
        charge_h0 += schedule.p_charge[0][i][0];
        discharge_h1 += schedule.p_discharge[0][i][1];
    }
    CHECK(charge_h0 > 0.0);
    CHECK(discharge_h1 > 0.0);
    const auto bf = oracles::brute_force_dispatch(sc, w);
    REQUIRE(bf.feasible);
    CHECK(schedule.objective <= bf.objective * 1.01 + 1e-9);
    CHECK(schedule.objective >= bf.objective * 0.99 - 1e-9);
}

TEST_CASE("randomized tiny instances match the brute force within one percent") {
    int solved = 0;
    for (std::uint64_t seed = 10; seed < 22; ++seed) {
        const int n = 1 + static_cast<int>(seed % 2);
        const int t = 2 + static_cast<int>(seed % 2);
        const bool solar = seed % 3 != 0;
        const bool bess = seed % 2 == 0;
        Scenario sc = tiny_scenario(seed, n, t, solar, bess);
        const auto w = random_weights(seed, n);
        auto schedule = solve(build_problem(sc, w));
        REQUIRE(schedule.status != ScheduleStatus::Infeasible);
        const auto bf = oracles::brute_force_dispatch(sc, w);
        REQUIRE(bf.feasible);
        const double rel =
            std::abs(schedule.objective - bf.objective) / std::max(1e-9, bf.objective);
        CHECK(rel < 0.01);
        ++solved;
    }
    CHECK(solved == 12);
}

TEST_CASE("raising a weight never raises that household's grid spend") {
    Scenario sc = tiny_scenario(31, 2, 2, true, false);
    model::EquityWeights w{1.0, 1.0};
    auto low = solve(build_problem(sc, w));
    w[1] = 1.8;
    auto high = solve(build_problem(sc, w));
    auto spend = [&](const Schedule& s, int i) {
        double acc = 0.0;
        for (int t = 0; t < sc.horizon(); ++t) acc += sc.prices[t] * s.p_grid[i][t];
        return acc;
    };
    CHECK(spend(high, 1) <= spend(low, 1) + 1e-6);
}

TEST_CASE("renewable access without DERs is zero") {
    Scenario sc = tiny_scenario(6, 2, 2, false, false);
    const model::EquityWeights w{1.0, 1.0};
    auto schedule = solve(build_problem(sc, w));
    CHECK(renewable_access(schedule, sc, 0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(renewable_access(schedule, sc, 1) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("renewable access reproduces a hand-built allocation") {
    // two households, one hour; hand-assign alpha on a schedule
    Scenario sc = tiny_scenario(7, 2, 1, true, false);
    sc.households[0].demand = {0.2};
    sc.households[1].demand = {0.1};
    sc.solar[0].generation = {0.12};
    Schedule s;
    s.status = ScheduleStatus::Optimal;
    s.p_grid = {{0.12}, {0.06}};
    s.alpha.assign(1, std::vector<Series>(2, Series(1, 0.0)));
    s.alpha[0][0][0] = 2.0 / 3.0;  // 0.08 MW
    s.alpha[0][1][0] = 1.0 / 3.0;  // 0.04 MW
    CHECK(renewable_access(s, sc, 0) == doctest::Approx(0.08 / 0.2));
    CHECK(renewable_access(s, sc, 1) == doctest::Approx(0.04 / 0.1));
}

TEST_CASE("zero-demand household has zero access by definition") {
    Scenario sc = tiny_scenario(8, 2, 2, true, false);
    sc.households[1].demand = {0.0, 0.0};
    const model::EquityWeights w{1.0, 1.0};
    auto schedule = solve(build_problem(sc, w));
    CHECK(renewable_access(schedule, sc, 1) == 0.0);
}

TEST_CASE("baseline costs follow the no-cooperation arithmetic") {
    SUBCASE("single household without PV") {
        Scenario sc = tiny_scenario(9, 1, 2, false, false);
        sc.households[0].demand = {1.0, 1.0};
        sc.prices = {10.0, 20.0};
        sc.params.c_peak = 8700.0;
        const auto base = baseline_costs(sc);
        CHECK(base.energy[0] == doctest::Approx(30.0));
        CHECK(base.peak_charge[0] == doctest::Approx(8700.0));
        CHECK(base.grand_total == doctest::Approx(8730.0));
    }
    SUBCASE("full self-supply zeroes both terms") {
        Scenario sc = tiny_scenario(10, 1, 2, true, false);
        sc.households[0].demand = {0.1, 0.1};
        sc.solar[0].id = 0;  // owned by the household
        sc.solar[0].generation = {0.2, 0.2};
        const auto base = baseline_costs(sc);
        CHECK(base.total[0] == doctest::Approx(0.0));
    }
    SUBCASE("totals equal the sum of households") {
        synth::SynthConfig cfg;
        cfg.seed = 2;
        const auto sc = synth::build_scenario(cfg);
        const auto base = baseline_costs(sc);
        double total = 0.0;
        for (double v : base.total) total += v;
        CHECK(std::abs(total - base.grand_total) < 1e-9);
    }
}

TEST_CASE("recovery ladder reports the relaxed families") {
    // an unreachable utility floor forces floor slack after dropping
    // individual rationality
    Scenario sc = tiny_scenario(12, 1, 2, false, false);
    sc.households[0].demand = {0.5, 0.5};
    sc.households[0].beta = 10.0;
    sc.households[0].lambda = 100.0;
    sc.params.omega = 1.0;  // beta*d - lambda*P can never reach 1 here
    const model::EquityWeights w{1.0};
    auto schedule = solve(build_problem(sc, w));
    REQUIRE(schedule.status == ScheduleStatus::RelaxedFeasible);
    CHECK(static_cast<int>(schedule.relax_rung) >= 2);
    CHECK(schedule.floor_slack_total > 0.0);
    bool names_floor = false;
    for (const auto& name : schedule.relaxed_constraints)
        if (name.rfind("floor", 0) == 0) names_floor = true;
    CHECK(names_floor);
}

TEST_CASE("solver failures are distinct from infeasibility") {
    // the ladder cannot fix an over-constrained balance: demand needs more
    // power than the ramp rows allow between consecutive hours
    Scenario sc = tiny_scenario(13, 1, 2, false, false);
    sc.households[0].demand = {1.0, 10.0};
    sc.params.r_max = 0.0001;  // freezes grid import between hours
    const model::EquityWeights w{1.0};
    auto schedule = solve(build_problem(sc, w));
    CHECK(schedule.status == ScheduleStatus::Infeasible);
}

TEST_CASE("strict exclusivity removes simultaneous charge/discharge") {
    Scenario sc = tiny_scenario(14, 1, 2, false, true);
    sc.households[0].demand = {0.2, 0.2};
    sc.prices = {1.0, 50.0};
    const model::EquityWeights w{1.0};
    auto dp = build_problem(sc, w);
    auto relaxed = solve(dp);
    auto strict = solve_strict_exclusive(dp);
    REQUIRE(strict.status != ScheduleStatus::Infeasible);
    for (int b = 0; b < 1; ++b)
        for (int t = 0; t < 2; ++t) {
            double c = 0.0, d = 0.0;
            for (int i = 0; i < 1; ++i) {
                c += strict.p_charge[b][i][t];
                d += strict.p_discharge[b][i][t];
            }
            CHECK(std::min(c, d) < 1e-6);
        }
    CHECK(strict.objective >= relaxed.objective - 1e-7);
}

TEST_CASE("preset schedules satisfy every dispatch invariant") {
    synth::SynthConfig cfg;
    cfg.seed = 1;
    cfg.kind = synth::ScenarioKind::Weekday;
    const Scenario sc = synth::build_scenario(cfg);
    const model::EquityWeights w(sc.num_households(), 1.0);
    auto schedule = solve(build_problem(sc, w));
    REQUIRE(schedule.status == ScheduleStatus::Optimal);
    const auto res = compute_residuals(schedule, sc);
    CHECK(res.balance <= 1e-6);
    CHECK(res.soc_recursion <= 1e-6);
    CHECK(res.soc_bounds <= 1e-6);
    CHECK(res.terminal_soc <= 1e-6);
    CHECK(res.ramp <= 1e-6);
    CHECK(res.peak_coupling <= 1e-6);
    CHECK(res.budget <= 1e-6);
    CHECK(res.solar_pool <= 1e-9);
    CHECK(schedule.objective ==
          doctest::Approx(schedule.cost_energy + schedule.cost_peak +
                          schedule.cost_equity)
              .epsilon(1e-9));
    // alpha fractions are a valid pool split
    for (int s = 0; s < sc.num_solar(); ++s)
        for (int t = 0; t < sc.horizon(); ++t) {
            double sum = 0.0;
            for (int i = 0; i < sc.num_households(); ++i) sum += schedule.alpha[s][i][t];
            CHECK(sum <= 1.0 + 1e-9);
        }
}

TEST_CASE("schedule CSV round-trips through the reader") {
    Scenario sc = tiny_scenario(15, 2, 2, true, true);
    const model::EquityWeights w{1.0, 1.0};
    auto schedule = solve(build_problem(sc, w));
    REQUIRE(schedule.status != ScheduleStatus::Infeasible);
    namespace fs = std::filesystem;
    const auto path =
        (fs::temp_directory_path() / "eqgrid_sched_roundtrip.csv").string();
    write_schedule_csv(schedule, path);
    const auto back = read_schedule_csv(path);
    CHECK(back.p_grid.size() == schedule.p_grid.size());
    CHECK(back.p_peak == doctest::Approx(schedule.p_peak).epsilon(1e-5));
    for (std::size_t i = 0; i < schedule.p_grid.size(); ++i)
        for (std::size_t t = 0; t < schedule.p_grid[i].size(); ++t)
            CHECK(back.p_grid[i][t] ==
                  doctest::Approx(schedule.p_grid[i][t]).epsilon(1e-5));
}
