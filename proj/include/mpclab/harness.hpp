#pragma once

#include "mpclab/mlp.hpp"
#include "mpclab/online_mpc.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mpclab {

struct SweepGrid {
    std::vector<double> epsilons{0.0, 0.01, 0.02, 0.05, 0.1, 0.5, 1.0};
    std::vector<NoiseSetting> settings{NoiseSetting::DisturbanceOnly, NoiseSetting::AllData};
    std::vector<int> T_values{20, 40, 60, 80, 100, 120, 140, 160, 180, 200};
    std::vector<int> k_values{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    std::vector<double> horizon_fractions{0.1, 0.5, 1.0};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};

    void validate() const;
};

/// Settings shared by every run of a sweep.
struct RunContext {
    double dt = 0.1;
    Vec2 x0 = Vec2::Zero();
    double disturbance_std = 0.2;
    double state_blowup_threshold = 1e6;
    double control_blowup_threshold = 1e6;
    /// Worker threads; output is independent of this value.
    int jobs = 1;
    /// Optional line-per-cell progress log.
    std::ostream* log = nullptr;

    SystemSpec system(int T, std::uint64_t seed) const;
    MpcConfig mpc(int k) const;
};

/// Noise seed of a run: substream_seed(seed, "run", {fnv1a64(experiment)}).
/// The noise stream further mixes in the setting and epsilon; T and k are not
/// mixed, so cells that differ only in horizon or episode length see the same
/// realized predictions (shorter episodes a prefix of longer ones).
std::uint64_t run_noise_seed(std::uint64_t seed, std::string_view experiment);

struct ResultRow {
    std::string experiment;
    std::string setting;
    double epsilon = 0.0;
    std::optional<double> horizon_fraction;
    int T = 0;
    int k = 0;
    std::uint64_t seed = 0;
    double cost_alg = 0.0;
    double cost_opt = 0.0;
    double regret = 0.0;
    bool diverged = false;
    std::optional<int> divergence_step;
};

/// One online run on a seeded instance with injected noise.
ResultRow run_cell(const std::string& experiment, NoiseSetting setting, double epsilon, int T,
                   int k, std::uint64_t seed, const RunContext& ctx,
                   RunRecord* record = nullptr);

/// Rows ordered by (setting, epsilon, T, fraction) in grid order.
std::vector<ResultRow> sweep_regret_vs_T(const SweepGrid& grid, std::uint64_t base_seed,
                                         const RunContext& ctx);

struct PerStepRow {
    std::string setting;
    double epsilon = 0.0;
    int k = 0;
    int t = 0;
    double e_t = 0.0;  // +inf from the divergence step onwards
};

struct PerStepMean {
    std::string setting;
    double epsilon = 0.0;
    int k = 0;
    double mean_e_t = 0.0;  // +inf for diverged runs
    bool diverged = false;
};

struct PerStepResult {
    std::vector<PerStepRow> rows;
    std::vector<PerStepMean> means;
};

/// Per-step errors over (setting, epsilon, k) for a single episode length.
PerStepResult sweep_per_step_error(const SweepGrid& grid, int T, std::uint64_t base_seed,
                                   const RunContext& ctx);

struct TableCell {
    std::string setting;
    double epsilon = 0.0;
    int k = 0;
    double mean_regret = 0.0;  // over non-diverged seeds, NaN if none
    double std_regret = 0.0;   // sample std, NaN with fewer than 2 values
    int n_diverged = 0;
    int n_runs = 0;
};

struct RegretTable {
    std::vector<ResultRow> runs;
    std::vector<TableCell> cells;
};

RegretTable regret_table(const SweepGrid& grid, int T, const RunContext& ctx);

struct NnRegretRow {
    long step = 0;
    int k = 0;
    double regret = 0.0;
    bool diverged = false;
};

/// One online run per (checkpoint, k) on the given instance.
std::vector<NnRegretRow> nn_evaluate(const GroundTruth& truth,
                                     const std::vector<Checkpoint>& checkpoints,
                                     const std::vector<int>& k_values, const RunContext& ctx);

struct NnExperiment {
    GroundTruth truth;
    TrainResult training;
    std::vector<NnRegretRow> rows;
};

NnExperiment nn_experiment(int T, std::uint64_t seed, const TrainConfig& cfg,
                           const std::vector<int>& k_values, const RunContext& ctx);

/// Runs fn(0..n-1) on `jobs` threads; rethrows the first exception.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

// CSV rendering. Doubles use the shortest round-trip form; the divergence
// sentinel is written as "inf".
std::string format_double(double v);
std::string regret_curve_csv(const std::vector<ResultRow>& rows);
std::string per_step_csv(const std::vector<PerStepRow>& rows);
std::string per_step_mean_csv(const std::vector<PerStepMean>& means);
std::string table_mean_csv(const std::vector<TableCell>& cells);
std::string table_std_csv(const std::vector<TableCell>& cells);
std::string nn_error_csv(const std::vector<Checkpoint>& checkpoints);
std::string nn_regret_csv(const std::vector<NnRegretRow>& rows);

} // namespace mpclab
