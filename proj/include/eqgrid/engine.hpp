// End-to-end orchestration: synthesize or load a scenario, run the equity
// loop, allocate the cooperative surplus, compute metrics, and write every
// artifact with a digest manifest.
#ifndef EQGRID_ENGINE_HPP
#define EQGRID_ENGINE_HPP

#include <optional>
#include <string>
#include <vector>

#include "eqgrid/alloc.hpp"
#include "eqgrid/metrics.hpp"
#include "eqgrid/rl.hpp"
#include "eqgrid/synth.hpp"

namespace eqgrid::engine {

struct RunConfig {
    synth::SynthConfig synth;
    rl::PpoConfig ppo;
    std::optional<model::GlobalParams> params_override;
    std::string scenario_path;  // when set, loads instead of synthesizing
    std::string out_dir;
    std::string label;          // defaults to the scenario label
    // artifact formats to emit; must be a subset of {json, csv, jsonl}
    std::vector<std::string> formats{"json", "csv", "jsonl"};
};

enum class RunStatus { Optimal, RelaxedFeasible, Aborted };

std::string to_string(RunStatus s);

struct RunArtifacts {
    RunStatus status = RunStatus::Aborted;
    model::Scenario scenario;
    std::vector<rl::IterationRecord> history;
    sched::Schedule final_schedule;
    model::EquityWeights final_weights;
    alloc::AllocationReport allocation;
    metrics::MetricsReport metrics;
    std::string run_dir;
    std::string abort_reason;
};

// Executes the four phases in order and writes
//   <out>/run/<label>/{scenario.json, history.jsonl, schedule.csv,
//   schedule_summary.json, allocation.json, metrics.json, lorenz.csv,
//   manifest.json}.
// A solver abort flushes the partial artifacts with an incomplete manifest
// before the status is reported.
RunArtifacts run(const RunConfig& config);

struct MatrixRow {
    std::string scenario;
    RunStatus status = RunStatus::Aborted;
    double no_coop_cost = 0.0;
    double baseline_energy_cost = 0.0;
    double optimized_energy_cost = 0.0;
    double optimized_peak_charge = 0.0;
    double coop_cost = 0.0;
    double cooperative_gain = 0.0;
    double avg_gain_per_participant = 0.0;
    double peak_original = 0.0;
    double peak_optimized = 0.0;
    double peak_reduction_pct = 0.0;
    double solar_utilization_pct = 0.0;
    bool solar_available = false;
    double gini = 0.0;
    double seii = 0.0;
    bool seii_defined = false;
    double avg_bess_cycles = 0.0;
    std::string error;
};

// Runs all six presets with a shared seed; failures are recorded per row and
// do not stop the other presets. Writes <out>/summary.csv and summary.json.
std::vector<MatrixRow> run_matrix(std::uint64_t seed, const std::string& out_dir,
                                  const rl::PpoConfig& ppo = {});

// 64-bit FNV-1a digest of a file's bytes, hex-encoded.
std::string file_digest(const std::string& path);

void write_matrix_summary(const std::vector<MatrixRow>& rows, const std::string& dir);

}  // namespace eqgrid::engine

#endif
