#include "mpclab/harness.hpp"

#include "mpclab/seed.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace mpclab {

void SweepGrid::validate() const {
    if (epsilons.empty() || settings.empty() || T_values.empty() || k_values.empty() ||
        horizon_fractions.empty() || seeds.empty())
        throw std::invalid_argument("sweep grid lists must be non-empty");
    for (double e : epsilons)
        if (!(e >= 0.0) || !std::isfinite(e))
            throw std::invalid_argument("epsilon must be >= 0, got " + std::to_string(e));
    for (int T : T_values)
        if (T < 1) throw std::invalid_argument("T must be >= 1, got " + std::to_string(T));
    for (int k : k_values)
        if (k < 1) throw std::invalid_argument("horizon must be >= 1, got " + std::to_string(k));
    for (double f : horizon_fractions)
        if (!(f > 0.0) || !std::isfinite(f))
            throw std::invalid_argument("horizon fraction must be positive, got " + std::to_string(f));
    for (std::size_t i = 0; i < seeds.size(); ++i)
        for (std::size_t j = i + 1; j < seeds.size(); ++j)
            if (seeds[i] == seeds[j]) throw std::invalid_argument("seeds must be distinct");
}

SystemSpec RunContext::system(int T, std::uint64_t seed) const {
    SystemSpec spec;
    spec.T = T;
    spec.dt = dt;
    spec.x0 = x0;
    spec.disturbance_std = disturbance_std;
    spec.base_seed = seed;
    spec.validate();
    return spec;
}

MpcConfig RunContext::mpc(int k) const {
    MpcConfig cfg;
    cfg.k = k;
    cfg.state_blowup_threshold = state_blowup_threshold;
    cfg.control_blowup_threshold = control_blowup_threshold;
    cfg.validate();
    return cfg;
}

std::uint64_t run_noise_seed(std::uint64_t seed, std::string_view experiment) {
    return substream_seed(seed, "run", {fnv1a64(experiment)});
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers =
        std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    pool.clear();
    if (error) std::rethrow_exception(error);
}

namespace {

class Logger {
public:
    explicit Logger(std::ostream* out) : out_(out) {}
    void line(const std::string& s) {
        if (!out_) return;
        std::lock_guard lock(mutex_);
        *out_ << s << '\n';
    }

private:
    std::ostream* out_;
    std::mutex mutex_;
};

std::string describe(const ResultRow& r) {
    std::ostringstream os;
    os << r.experiment << " setting=" << r.setting << " eps=" << format_double(r.epsilon)
       << " T=" << r.T << " k=" << r.k << " seed=" << r.seed << " regret="
       << format_double(r.regret) << (r.diverged ? " (diverged)" : "");
    return os.str();
}

// Instances and clairvoyant solutions are shared by every cell using them.
struct Instance {
    GroundTruth truth;
    AffinePolicy policy;
    double cost_opt = 0.0;
};

Instance make_instance(const RunContext& ctx, int T, std::uint64_t seed) {
    Instance inst;
    inst.truth = build_ground_truth(ctx.system(T, seed));
    const OfflineSolution opt = solve_offline(inst.truth);
    inst.policy = opt.policy;
    inst.cost_opt = opt.trajectory.total_cost;
    return inst;
}

ResultRow run_on_instance(const Instance& inst, const std::string& experiment,
                          NoiseSetting setting, double epsilon, int k, std::uint64_t seed,
                          const RunContext& ctx, RunRecord* record) {
    const PredictedData pred =
        inject_noise(inst.truth, epsilon, setting, run_noise_seed(seed, experiment));
    RunRecord rec = run_online(inst.truth, inst.policy, pred, ctx.x0, ctx.mpc(k));
    ResultRow row;
    row.experiment = experiment;
    row.setting = std::string(to_string(setting));
    row.epsilon = epsilon;
    row.T = inst.truth.horizon();
    row.k = k;
    row.seed = seed;
    row.cost_alg = rec.cost_alg;
    row.cost_opt = inst.cost_opt;
    row.regret = dynamic_regret(rec.cost_alg, inst.cost_opt);
    row.diverged = rec.diverged;
    row.divergence_step = rec.divergence_step;
    if (record) *record = std::move(rec);
    return row;
}

} // namespace

ResultRow run_cell(const std::string& experiment, NoiseSetting setting, double epsilon, int T,
                   int k, std::uint64_t seed, const RunContext& ctx, RunRecord* record) {
    const Instance inst = make_instance(ctx, T, seed);
    return run_on_instance(inst, experiment, setting, epsilon, k, seed, ctx, record);
}

std::vector<ResultRow> sweep_regret_vs_T(const SweepGrid& grid, std::uint64_t base_seed,
                                         const RunContext& ctx) {
    grid.validate();
    std::vector<Instance> instances;
    for (int T : grid.T_values) instances.push_back(make_instance(ctx, T, base_seed));

    struct Cell {
        NoiseSetting setting;
        double epsilon;
        std::size_t instance;
        double fraction;
    };
    std::vector<Cell> cells;
    for (NoiseSetting s : grid.settings)
        for (double eps : grid.epsilons)
            for (std::size_t i = 0; i < grid.T_values.size(); ++i)
                for (double f : grid.horizon_fractions) cells.push_back({s, eps, i, f});

    std::vector<ResultRow> rows(cells.size());
    Logger log(ctx.log);
    parallel_for(cells.size(), ctx.jobs, [&](std::size_t i) {
        const Cell& c = cells[i];
        const Instance& inst = instances[c.instance];
        const int k = horizon_from_fraction(c.fraction, inst.truth.horizon());
        rows[i] = run_on_instance(inst, "regret_curve", c.setting, c.epsilon, k, base_seed, ctx,
                                  nullptr);
        rows[i].horizon_fraction = c.fraction;
        log.line(describe(rows[i]));
    });
    return rows;
}

PerStepResult sweep_per_step_error(const SweepGrid& grid, int T, std::uint64_t base_seed,
                                   const RunContext& ctx) {
    grid.validate();
    const Instance inst = make_instance(ctx, T, base_seed);

    struct Cell {
        NoiseSetting setting;
        double epsilon;
        int k;
    };
    std::vector<Cell> cells;
    for (NoiseSetting s : grid.settings)
        for (double eps : grid.epsilons)
            for (int k : grid.k_values) cells.push_back({s, eps, k});

    std::vector<RunRecord> records(cells.size());
    Logger log(ctx.log);
    parallel_for(cells.size(), ctx.jobs, [&](std::size_t i) {
        const Cell& c = cells[i];
        const ResultRow row =
            run_on_instance(inst, "per_step", c.setting, c.epsilon, c.k, base_seed, ctx, &records[i]);
        log.line(describe(row));
    });

    PerStepResult out;
    const double inf = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const Cell& c = cells[i];
        const RunRecord& rec = records[i];
        const std::string setting(to_string(c.setting));
        double sum = 0.0;
        for (int t = 0; t < T; ++t) {
            const double e = rec.diverged ? (t < static_cast<int>(rec.per_step_errors.size())
                                                 ? rec.per_step_errors[t]
                                                 : inf)
                                          : rec.per_step_errors[t];
            out.rows.push_back({setting, c.epsilon, c.k, t, e});
            sum += e;
        }
        out.means.push_back({setting, c.epsilon, c.k, rec.diverged ? inf : sum / T, rec.diverged});
    }
    return out;
}

RegretTable regret_table(const SweepGrid& grid, int T, const RunContext& ctx) {
    grid.validate();
    std::vector<Instance> instances;
    for (std::uint64_t seed : grid.seeds) instances.push_back(make_instance(ctx, T, seed));

    struct Cell {
        NoiseSetting setting;
        double epsilon;
        int k;
        std::size_t seed_index;
    };
    std::vector<Cell> cells;
    for (NoiseSetting s : grid.settings)
        for (double eps : grid.epsilons)
            for (int k : grid.k_values)
                for (std::size_t si = 0; si < grid.seeds.size(); ++si) cells.push_back({s, eps, k, si});

    RegretTable table;
    table.runs.resize(cells.size());
    Logger log(ctx.log);
    parallel_for(cells.size(), ctx.jobs, [&](std::size_t i) {
        const Cell& c = cells[i];
        table.runs[i] = run_on_instance(instances[c.seed_index], "regret_table", c.setting,
                                        c.epsilon, c.k, grid.seeds[c.seed_index], ctx, nullptr);
        log.line(describe(table.runs[i]));
    });

    const std::size_t n_seeds = grid.seeds.size();
    for (std::size_t first = 0; first < table.runs.size(); first += n_seeds) {
        TableCell cell;
        cell.setting = table.runs[first].setting;
        cell.epsilon = table.runs[first].epsilon;
        cell.k = table.runs[first].k;
        cell.n_runs = static_cast<int>(n_seeds);
        std::vector<double> finite;
        for (std::size_t j = first; j < first + n_seeds; ++j) {
            if (table.runs[j].diverged)
                ++cell.n_diverged;
            else
                finite.push_back(table.runs[j].regret);
        }
        const double nan = std::numeric_limits<double>::quiet_NaN();
        cell.mean_regret = nan;
        cell.std_regret = nan;
        if (!finite.empty()) {
            double sum = 0.0;
            for (double v : finite) sum += v;
            cell.mean_regret = sum / static_cast<double>(finite.size());
        }
        if (finite.size() >= 2) {
            double ss = 0.0;
            for (double v : finite) ss += (v - cell.mean_regret) * (v - cell.mean_regret);
            cell.std_regret = std::sqrt(ss / static_cast<double>(finite.size() - 1));
        }
        table.cells.push_back(cell);
    }
    return table;
}

std::vector<NnRegretRow> nn_evaluate(const GroundTruth& truth,
                                     const std::vector<Checkpoint>& checkpoints,
                                     const std::vector<int>& k_values, const RunContext& ctx) {
    const OfflineSolution opt = solve_offline(truth);
    std::vector<PredictedData> preds;
    for (const Checkpoint& c : checkpoints) preds.push_back(predict_problem_data(c.net, truth.spec));

    std::vector<NnRegretRow> rows(checkpoints.size() * k_values.size());
    Logger log(ctx.log);
    parallel_for(rows.size(), ctx.jobs, [&](std::size_t i) {
        const std::size_t ci = i / k_values.size();
        const int k = k_values[i % k_values.size()];
        const RunRecord rec = run_online(truth, opt.policy, preds[ci], truth.spec.x0, ctx.mpc(k));
        rows[i] = {checkpoints[ci].step, k, dynamic_regret(rec.cost_alg, opt.trajectory.total_cost),
                   rec.diverged};
        log.line("nn step=" + std::to_string(rows[i].step) + " k=" + std::to_string(k) +
                 " regret=" + format_double(rows[i].regret) + (rec.diverged ? " (diverged)" : ""));
    });
    return rows;
}

NnExperiment nn_experiment(int T, std::uint64_t seed, const TrainConfig& cfg,
                           const std::vector<int>& k_values, const RunContext& ctx) {
    NnExperiment out;
    out.truth = build_ground_truth(ctx.system(T, seed));
    out.training = train(out.truth, cfg);
    out.rows = nn_evaluate(out.truth, out.training.checkpoints, k_values, ctx);
    return out;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string opt_int(const std::optional<int>& v) { return v ? std::to_string(*v) : ""; }

} // namespace

std::string regret_curve_csv(const std::vector<ResultRow>& rows) {
    std::string out =
        "experiment,setting,epsilon,horizon_fraction,T,k,seed,cost_alg,cost_opt,regret,diverged,"
        "divergence_step\n";
    for (const ResultRow& r : rows) {
        out += r.experiment + ',' + r.setting + ',' + format_double(r.epsilon) + ',' +
               (r.horizon_fraction ? format_double(*r.horizon_fraction) : "") + ',' +
               std::to_string(r.T) + ',' + std::to_string(r.k) + ',' + std::to_string(r.seed) +
               ',' + format_double(r.cost_alg) + ',' + format_double(r.cost_opt) + ',' +
               format_double(r.regret) + ',' + (r.diverged ? "1" : "0") + ',' +
               opt_int(r.divergence_step) + '\n';
    }
    return out;
}

std::string per_step_csv(const std::vector<PerStepRow>& rows) {
    std::string out = "setting,epsilon,k,t,e_t\n";
    for (const PerStepRow& r : rows)
        out += r.setting + ',' + format_double(r.epsilon) + ',' + std::to_string(r.k) + ',' +
               std::to_string(r.t) + ',' + format_double(r.e_t) + '\n';
    return out;
}

std::string per_step_mean_csv(const std::vector<PerStepMean>& means) {
    std::string out = "setting,epsilon,k,mean_e_t,diverged\n";
    for (const PerStepMean& m : means)
        out += m.setting + ',' + format_double(m.epsilon) + ',' + std::to_string(m.k) + ',' +
               format_double(m.mean_e_t) + ',' + (m.diverged ? "1" : "0") + '\n';
    return out;
}

std::string table_mean_csv(const std::vector<TableCell>& cells) {
    std::string out = "setting,epsilon,k,mean_regret,n_diverged\n";
    for (const TableCell& c : cells)
        out += c.setting + ',' + format_double(c.epsilon) + ',' + std::to_string(c.k) + ',' +
               format_double(c.mean_regret) + ',' + std::to_string(c.n_diverged) + '\n';
    return out;
}

std::string table_std_csv(const std::vector<TableCell>& cells) {
    std::string out = "setting,epsilon,k,std_regret,n_diverged\n";
    for (const TableCell& c : cells)
        out += c.setting + ',' + format_double(c.epsilon) + ',' + std::to_string(c.k) + ',' +
               format_double(c.std_regret) + ',' + std::to_string(c.n_diverged) + '\n';
    return out;
}

std::string nn_error_csv(const std::vector<Checkpoint>& checkpoints) {
    std::string out = "step,mean_pred_error\n";
    for (const Checkpoint& c : checkpoints)
        out += std::to_string(c.step) + ',' + format_double(c.mean_error) + '\n';
    return out;
}

std::string nn_regret_csv(const std::vector<NnRegretRow>& rows) {
    std::string out = "step,k,regret,diverged\n";
    for (const NnRegretRow& r : rows)
        out += std::to_string(r.step) + ',' + std::to_string(r.k) + ',' + format_double(r.regret) +
               ',' + (r.diverged ? "1" : "0") + '\n';
    return out;
}

} // namespace mpclab
