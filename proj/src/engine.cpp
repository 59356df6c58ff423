#include "eqgrid/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

namespace eqgrid::engine {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(RunStatus s) {
    switch (s) {
        case RunStatus::Optimal: return "Optimal";
        case RunStatus::RelaxedFeasible: return "RelaxedFeasible";
        case RunStatus::Aborted: return "Aborted";
    }
    return "Aborted";
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("digest: cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 14];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize k = 0; k < in.gcount(); ++k) {
            h ^= static_cast<unsigned char>(buf[k]);
            h *= 0x100000001b3ULL;
        }
    }
    char hex[20];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

namespace {

void write_history_jsonl(const std::vector<rl::IterationRecord>& history,
                         const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (const auto& rec : history) {
        json j;
        j["iteration"] = rec.iteration;
        j["gini"] = rec.gini;
        j["objective"] = rec.objective;
        j["relax_rung"] = rec.relax_rung;
        j["weights"] = rec.weights;
        j["rewards"] = rec.rewards;
        j["kl"] = rec.kl;
        j["any_early_stop"] = rec.any_early_stop;
        out << j.dump() << "\n";
    }
}

void write_manifest(const std::string& dir, bool complete, const std::string& status,
                    const std::string& note) {
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name == "manifest.json") continue;
        names.push_back(name);
    }
    std::sort(names.begin(), names.end());
    json j;
    j["complete"] = complete;
    j["status"] = status;
    if (!note.empty()) j["note"] = note;
    j["files"] = json::array();
    for (const auto& name : names) {
        const std::string full = dir + "/" + name;
        j["files"].push_back({{"path", name},
                              {"bytes", fs::file_size(full)},
                              {"digest", file_digest(full)}});
    }
    std::ofstream out(dir + "/manifest.json");
    if (!out) throw IoError("cannot open for writing: " + dir + "/manifest.json");
    out << j.dump(2) << "\n";
}

}  // namespace

RunArtifacts run(const RunConfig& cfg) {
    for (const auto& f : cfg.formats)
        if (f != "json" && f != "csv" && f != "jsonl")
            throw Error("run config: unknown report format '" + f + "'");
    const auto wants = [&](const char* fmt) {
        for (const auto& f : cfg.formats)
            if (f == fmt) return true;
        return false;
    };

    RunArtifacts art;
    art.scenario = cfg.scenario_path.empty() ? synth::build_scenario(cfg.synth)
                                             : model::load_scenario(cfg.scenario_path);
    if (cfg.params_override) {
        const int T = art.scenario.params.horizon_T;
        art.scenario.params = *cfg.params_override;
        art.scenario.params.horizon_T = T;  // the horizon belongs to the data
    }
    {
        const auto violations = model::validate(art.scenario);
        if (!violations.empty()) {
            std::string msg = "scenario failed validation:";
            for (const auto& v : violations) msg += "\n  " + v.path + ": " + v.message;
            throw Error(msg);
        }
    }

    const std::string label = cfg.label.empty() ? art.scenario.label : cfg.label;
    art.run_dir = cfg.out_dir + "/run/" + label;
    fs::create_directories(art.run_dir);
    if (wants("json")) model::save_scenario(art.scenario, art.run_dir + "/scenario.json");

    try {
        rl::EquityLoopResult loop =
            rl::run_equity_loop(art.scenario, cfg.ppo, cfg.synth.seed);
        art.history = std::move(loop.history);
        art.final_schedule = std::move(loop.final_schedule);
        art.final_weights = std::move(loop.final_weights);
    } catch (const Error& e) {
        art.status = RunStatus::Aborted;
        art.abort_reason = e.what();
        if (wants("jsonl"))
            write_history_jsonl(art.history, art.run_dir + "/history.jsonl");
        write_manifest(art.run_dir, false, to_string(art.status), art.abort_reason);
        return art;
    }

    const sched::BaselineCosts baseline = sched::baseline_costs(art.scenario);
    art.allocation = alloc::build_report(art.final_schedule, art.scenario,
                                         art.final_weights, baseline);
    art.metrics = metrics::build_report(art.final_schedule, art.scenario, baseline,
                                        art.final_weights);
    art.status = art.final_schedule.status == sched::ScheduleStatus::Optimal
                     ? RunStatus::Optimal
                     : RunStatus::RelaxedFeasible;

    if (wants("jsonl")) write_history_jsonl(art.history, art.run_dir + "/history.jsonl");
    if (wants("csv"))
        sched::write_schedule_csv(art.final_schedule, art.run_dir + "/schedule.csv");
    if (wants("json")) {
        sched::write_schedule_summary(art.final_schedule, art.scenario,
                                      art.final_weights,
                                      art.run_dir + "/schedule_summary.json");
        alloc::write_report(art.allocation, art.run_dir + "/allocation.json");
        metrics::write_report(art.metrics, art.run_dir + "/metrics.json");
    }
    if (wants("csv"))
        metrics::write_lorenz_csv(art.metrics.lorenz, art.run_dir + "/lorenz.csv");
    write_manifest(art.run_dir, true, to_string(art.status), "");
    return art;
}

std::vector<MatrixRow> run_matrix(std::uint64_t seed, const std::string& out_dir,
                                  const rl::PpoConfig& ppo) {
    const synth::ScenarioKind kinds[6] = {
        synth::ScenarioKind::HighDemand, synth::ScenarioKind::LowDemand,
        synth::ScenarioKind::HighPrice,  synth::ScenarioKind::HighSolar,
        synth::ScenarioKind::Weekday,    synth::ScenarioKind::Weekend};

    std::vector<MatrixRow> rows;
    for (const auto kind : kinds) {
        MatrixRow row;
        row.scenario = synth::to_string(kind);
        try {
            RunConfig cfg;
            cfg.synth.seed = seed;
            cfg.synth.kind = kind;
            cfg.ppo = ppo;
            cfg.out_dir = out_dir;
            const RunArtifacts art = run(cfg);
            row.status = art.status;
            if (art.status == RunStatus::Aborted) {
                row.error = art.abort_reason;
            } else {
                const auto& m = art.metrics;
                row.no_coop_cost = m.no_coop_cost;
                row.coop_cost = m.coop_cost;
                row.cooperative_gain = m.cooperative_gain;
                const int n = art.scenario.num_households();
                row.avg_gain_per_participant = n > 0 ? m.cooperative_gain / n : 0.0;
                row.peak_original = m.peak_original;
                row.peak_optimized = m.peak_optimized;
                row.peak_reduction_pct = m.peak_reduction_pct;
                row.solar_utilization_pct = m.solar_utilization_pct;
                row.solar_available = m.solar_available;
                row.gini = m.gini;
                row.seii = m.seii;
                row.seii_defined = m.seii_defined;
                row.avg_bess_cycles = m.avg_bess_cycles;
                const sched::BaselineCosts baseline = sched::baseline_costs(art.scenario);
                row.baseline_energy_cost = baseline.total_energy;
                double energy = 0.0;
                for (int i = 0; i < art.scenario.num_households(); ++i)
                    for (int t = 0; t < art.scenario.horizon(); ++t)
                        energy += art.scenario.prices[t] * art.final_schedule.p_grid[i][t];
                row.optimized_energy_cost = energy;
                row.optimized_peak_charge =
                    art.scenario.params.c_peak * art.final_schedule.p_peak;
            }
        } catch (const std::exception& e) {
            row.status = RunStatus::Aborted;
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    write_matrix_summary(rows, out_dir);
    return rows;
}

void write_matrix_summary(const std::vector<MatrixRow>& rows, const std::string& dir) {
    fs::create_directories(dir);
    {
        std::ofstream out(dir + "/summary.csv");
        if (!out) throw IoError("cannot open for writing: " + dir + "/summary.csv");
        out << "scenario,status,no_coop_cost,baseline_energy_cost,optimized_energy_cost,"
               "optimized_peak_charge,coop_cost,cooperative_gain,avg_gain_per_participant,"
               "peak_original_mw,peak_optimized_mw,peak_reduction_pct,"
               "solar_utilization_pct,avg_bess_cycles,gini,seii\n";
        char buf[512];
        for (const auto& r : rows) {
            std::string solar = r.solar_available ? [&] {
                char b[32];
                std::snprintf(b, sizeof b, "%.6f", r.solar_utilization_pct);
                return std::string(b);
            }() : std::string("n/a");
            std::string seii = r.seii_defined ? [&] {
                char b[32];
                std::snprintf(b, sizeof b, "%.6f", r.seii);
                return std::string(b);
            }() : std::string("n/a");
            std::snprintf(buf, sizeof buf,
                          "%s,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%s,"
                          "%.6f,%.6f,%s\n",
                          r.scenario.c_str(), to_string(r.status).c_str(), r.no_coop_cost,
                          r.baseline_energy_cost, r.optimized_energy_cost,
                          r.optimized_peak_charge, r.coop_cost, r.cooperative_gain,
                          r.avg_gain_per_participant, r.peak_original, r.peak_optimized,
                          r.peak_reduction_pct, solar.c_str(), r.avg_bess_cycles, r.gini,
                          seii.c_str());
            out << buf;
        }
    }
    json j = json::array();
    for (const auto& r : rows) {
        json row;
        row["scenario"] = r.scenario;
        row["status"] = to_string(r.status);
        row["no_coop_cost"] = r.no_coop_cost;
        row["baseline_energy_cost"] = r.baseline_energy_cost;
        row["optimized_energy_cost"] = r.optimized_energy_cost;
        row["optimized_peak_charge"] = r.optimized_peak_charge;
        row["coop_cost"] = r.coop_cost;
        row["cooperative_gain"] = r.cooperative_gain;
        row["avg_gain_per_participant"] = r.avg_gain_per_participant;
        row["peak_original_mw"] = r.peak_original;
        row["peak_optimized_mw"] = r.peak_optimized;
        row["peak_reduction_pct"] = r.peak_reduction_pct;
        row["solar_utilization_pct"] =
            r.solar_available ? json(r.solar_utilization_pct) : json(nullptr);
        row["avg_bess_cycles"] = r.avg_bess_cycles;
        row["gini"] = r.gini;
        row["seii"] = r.seii_defined ? json(r.seii) : json(nullptr);
        if (!r.error.empty()) row["error"] = r.error;
        j.push_back(std::move(row));
    }
    std::ofstream out(dir + "/summary.json");
    if (!out) throw IoError("cannot open for writing: " + dir + "/summary.json");
    out << j.dump(2) << "\n";
}

}  // namespace eqgrid::engine
