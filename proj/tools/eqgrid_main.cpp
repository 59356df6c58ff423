// Command-line entry point: scenario synthesis, single equity-loop runs, the
// six-scenario matrix, and metric recomputation from artifacts.
//
// Exit codes: 0 success, 1 domain failure (dispatch infeasible after the
// recovery ladder), 2 usage or input errors.
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "eqgrid/engine.hpp"

using namespace eqgrid;

namespace {

int cmd_synth(const std::string& kind, std::uint64_t seed, const std::string& base_csv,
              const std::string& out_path) {
    synth::SynthConfig cfg;
    cfg.seed = seed;
    cfg.kind = synth::scenario_kind_from_string(kind);
    cfg.base_csv = base_csv;
    const model::Scenario sc = synth::build_scenario(cfg);
    if (out_path.empty()) {
        std::printf("%s\n", model::to_json(sc).c_str());
    } else {
        model::save_scenario(sc, out_path);
        std::printf("wrote %s (%d households, %d solar units, %d BESS units)\n",
                    out_path.c_str(), sc.num_households(), sc.num_solar(), sc.num_bess());
    }
    return 0;
}

int cmd_run(const std::string& scenario_file, const std::string& scenario_kind,
            std::uint64_t seed, int iterations, const std::string& out_dir) {
    engine::RunConfig cfg;
    cfg.scenario_path = scenario_file;
    cfg.synth.seed = seed;
    if (!scenario_kind.empty())
        cfg.synth.kind = synth::scenario_kind_from_string(scenario_kind);
    cfg.ppo.max_iterations = iterations;
    cfg.out_dir = out_dir;
    const engine::RunArtifacts art = engine::run(cfg);
    std::printf("run %s: status=%s iterations=%zu gini=%.6f objective=%.6f\n",
                art.scenario.label.c_str(), engine::to_string(art.status).c_str(),
                art.history.size(), art.metrics.gini, art.final_schedule.objective);
    std::printf("artifacts in %s\n", art.run_dir.c_str());
    if (art.status == engine::RunStatus::Aborted) {
        std::fprintf(stderr, "aborted: %s\n", art.abort_reason.c_str());
        return 1;
    }
    return 0;
}

int cmd_matrix(std::uint64_t seed, int iterations, const std::string& out_dir) {
    rl::PpoConfig ppo;
    ppo.max_iterations = iterations;
    const auto rows = engine::run_matrix(seed, out_dir, ppo);
    bool any_abort = false;
    for (const auto& r : rows) {
        std::printf("%-11s status=%-15s gain=%10.4f peak_red=%6.2f%% gini=%.4f\n",
                    r.scenario.c_str(), engine::to_string(r.status).c_str(),
                    r.cooperative_gain, r.peak_reduction_pct, r.gini);
        any_abort |= r.status == engine::RunStatus::Aborted;
    }
    std::printf("summary in %s/summary.csv\n", out_dir.c_str());
    return any_abort ? 1 : 0;
}

int cmd_metrics(const std::string& schedule_csv, const std::string& scenario_json,
                const std::string& summary_json, const std::string& out_path) {
    const model::Scenario sc = model::load_scenario(scenario_json);
    const sched::Schedule sched = sched::read_schedule_csv(schedule_csv);
    const sched::BaselineCosts baseline = sched::baseline_costs(sc);

    model::EquityWeights weights(sc.num_households(), 1.0);
    bool have_weights = false;
    if (!summary_json.empty()) {
        std::ifstream in(summary_json);
        if (!in) throw IoError("cannot open summary: " + summary_json);
        std::stringstream ss;
        ss << in.rdbuf();
        const auto j = nlohmann::json::parse(ss.str());
        weights = j.value("final_weights", weights);
        have_weights = true;
    }
    metrics::MetricsReport rep = metrics::build_report(sched, sc, baseline, weights);
    if (!have_weights) rep.seii_defined = false;  // uniform placeholder weights
    const std::string text = metrics::report_to_json(rep);
    if (out_path.empty()) {
        std::printf("%s\n", text.c_str());
    } else {
        metrics::write_report(rep, out_path);
        std::printf("wrote %s\n", out_path.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Equity-aware community microgrid scheduling engine"};
    app.require_subcommand(1);

    std::string kind = "Weekday", base_csv, out_path;
    std::uint64_t seed = 1;
    auto* s_synth = app.add_subcommand("synth", "Generate a scenario JSON");
    s_synth->add_option("--scenario", kind,
                        "Preset: HighDemand|LowDemand|HighPrice|HighSolar|Weekday|Weekend")
        ->capture_default_str();
    s_synth->add_option("--seed", seed, "Random seed")->capture_default_str();
    s_synth->add_option("--base-csv", base_csv,
                        "Base profile CSV (header: load[,pv][,price]; 24 hourly rows)");
    s_synth->add_option("--out", out_path, "Output path (stdout when omitted)");

    std::string scenario_file, run_kind;
    std::uint64_t run_seed = 1;
    int iterations = 10;
    std::string run_out = "out";
    auto* s_run = app.add_subcommand("run", "Run the equity loop on one scenario");
    s_run->add_option("--scenario-file", scenario_file, "Scenario JSON produced by synth");
    s_run->add_option("--scenario", run_kind, "Preset to synthesize when no file is given");
    s_run->add_option("--seed", run_seed, "Seed (synthesis and agents)")
        ->capture_default_str();
    s_run->add_option("--iterations", iterations, "Equity-loop iteration cap K")
        ->capture_default_str();
    s_run->add_option("--out", run_out, "Output directory")->capture_default_str();

    std::uint64_t matrix_seed = 1;
    int matrix_iterations = 10;
    std::string matrix_out = "out";
    auto* s_matrix = app.add_subcommand("matrix", "Run all six presets");
    s_matrix->add_option("--seed", matrix_seed, "Shared seed")->capture_default_str();
    s_matrix->add_option("--iterations", matrix_iterations, "Equity-loop iteration cap K")
        ->capture_default_str();
    s_matrix->add_option("--out", matrix_out, "Output directory")->capture_default_str();

    std::string m_schedule, m_scenario, m_summary, m_out;
    auto* s_metrics =
        app.add_subcommand("metrics", "Recompute the metrics report from artifacts");
    s_metrics->add_option("--schedule", m_schedule, "schedule.csv from a run")->required();
    s_metrics->add_option("--scenario", m_scenario, "scenario.json from a run")->required();
    s_metrics->add_option("--summary", m_summary,
                          "schedule_summary.json (supplies final weights for SEII)");
    s_metrics->add_option("--out", m_out, "Output path (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // exits 0 with usage text
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (s_synth->parsed()) return cmd_synth(kind, seed, base_csv, out_path);
        if (s_run->parsed())
            return cmd_run(scenario_file, run_kind, run_seed, iterations, run_out);
        if (s_matrix->parsed()) return cmd_matrix(matrix_seed, matrix_iterations, matrix_out);
        if (s_metrics->parsed()) return cmd_metrics(m_schedule, m_scenario, m_summary, m_out);
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
