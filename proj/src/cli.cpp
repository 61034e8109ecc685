#include "mpclab/cli.hpp"

#include "mpclab/harness.hpp"
#include "mpclab/serialize.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <algorithm>
#include <iostream>
#include <optional>
#include <set>
#include <thread>

namespace mpclab {

namespace {

namespace fs = std::filesystem;

/// Every tunable value. Defaults are overridden by the config file, which is
/// overridden by flags.
struct CliConfig {
    int T = 100;
    double dt = 0.1;
    Vec2 x0 = Vec2::Zero();
    double disturbance_std = 0.2;
    std::uint64_t seed = 0;
    std::optional<std::vector<std::uint64_t>> seed_list;
    int n_seeds = 5;
    std::optional<double> epsilon;
    std::optional<std::string> setting;
    std::optional<int> horizon;
    std::optional<double> horizon_frac;
    SweepGrid grid;
    TrainConfig train;
    double state_blowup_threshold = 1e6;
    double control_blowup_threshold = 1e6;
    int jobs = std::max(1u, std::thread::hardware_concurrency());
    std::optional<std::string> out;
};

const std::set<std::string> kConfigKeys{
    "T",        "dt",       "x0",          "disturbance_std",   "seed",
    "seeds",    "epsilon",  "setting",     "horizon",           "horizon_frac",
    "epsilons", "settings", "T_values",    "k_values",          "horizon_fractions",
    "jobs",     "out",      "total_steps", "checkpoint_steps",  "learning_rate",
    "init_seed", "state_blowup_threshold", "control_blowup_threshold"};

void apply_config_file(const fs::path& path, CliConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file '" + path.string() + "'");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw std::runtime_error("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw std::runtime_error("config file must hold a JSON object");
    for (const auto& [key, _] : j.items())
        if (!kConfigKeys.contains(key)) throw std::runtime_error("unknown config key '" + key + "'");

    try {
        if (j.contains("T")) cfg.T = j["T"].get<int>();
        if (j.contains("dt")) cfg.dt = j["dt"].get<double>();
        if (j.contains("x0")) {
            const auto v = j["x0"].get<std::vector<double>>();
            if (v.size() != 2) throw std::runtime_error("config key 'x0' needs 2 entries");
            cfg.x0 = {v[0], v[1]};
        }
        if (j.contains("disturbance_std")) cfg.disturbance_std = j["disturbance_std"].get<double>();
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("seeds")) {
            if (j["seeds"].is_array())
                cfg.seed_list = j["seeds"].get<std::vector<std::uint64_t>>();
            else
                cfg.n_seeds = j["seeds"].get<int>();
        }
        if (j.contains("epsilon")) cfg.epsilon = j["epsilon"].get<double>();
        if (j.contains("setting")) cfg.setting = j["setting"].get<std::string>();
        if (j.contains("horizon")) cfg.horizon = j["horizon"].get<int>();
        if (j.contains("horizon_frac")) cfg.horizon_frac = j["horizon_frac"].get<double>();
        if (j.contains("epsilons")) cfg.grid.epsilons = j["epsilons"].get<std::vector<double>>();
        if (j.contains("settings")) {
            cfg.grid.settings.clear();
            for (const auto& s : j["settings"].get<std::vector<std::string>>())
                cfg.grid.settings.push_back(parse_noise_setting(s));
        }
        if (j.contains("T_values")) cfg.grid.T_values = j["T_values"].get<std::vector<int>>();
        if (j.contains("k_values")) cfg.grid.k_values = j["k_values"].get<std::vector<int>>();
        if (j.contains("horizon_fractions"))
            cfg.grid.horizon_fractions = j["horizon_fractions"].get<std::vector<double>>();
        if (j.contains("jobs")) cfg.jobs = j["jobs"].get<int>();
        if (j.contains("out")) cfg.out = j["out"].get<std::string>();
        if (j.contains("total_steps")) cfg.train.total_steps = j["total_steps"].get<long>();
        if (j.contains("checkpoint_steps"))
            cfg.train.checkpoint_steps = j["checkpoint_steps"].get<std::vector<long>>();
        if (j.contains("learning_rate")) cfg.train.learning_rate = j["learning_rate"].get<double>();
        if (j.contains("init_seed")) cfg.train.init_seed = j["init_seed"].get<std::uint64_t>();
        if (j.contains("state_blowup_threshold"))
            cfg.state_blowup_threshold = j["state_blowup_threshold"].get<double>();
        if (j.contains("control_blowup_threshold"))
            cfg.control_blowup_threshold = j["control_blowup_threshold"].get<double>();
    } catch (const Json::exception& e) {
        throw std::runtime_error(std::string("bad config value: ") + e.what());
    }
}

/// Raw flag values; only flags that were actually given override the config.
struct Flags {
    int T = 0;
    double dt = 0.0;
    double epsilon = 0.0;
    std::string setting;
    int horizon = 0;
    double horizon_frac = 0.0;
    std::uint64_t seed = 0;
    int seeds = 0;
    std::string out;
    std::string config;
    int jobs = 0;
    long steps = 0;
};

struct FlagOptions {
    CLI::Option* T;
    CLI::Option* dt;
    CLI::Option* epsilon;
    CLI::Option* setting;
    CLI::Option* horizon;
    CLI::Option* horizon_frac;
    CLI::Option* seed;
    CLI::Option* seeds;
    CLI::Option* out;
    CLI::Option* config;
    CLI::Option* jobs;
    CLI::Option* steps = nullptr;
};

FlagOptions add_flags(CLI::App* app, Flags& f) {
    FlagOptions o{};
    o.T = app->add_option("--T", f.T, "Episode length (discrete steps)");
    o.dt = app->add_option("--dt", f.dt, "System time step");
    o.epsilon = app->add_option("--epsilon", f.epsilon, "Noise strength (half-width of U(-eps, eps))");
    o.setting = app->add_option("--setting", f.setting, "Noise setting: disturbance | all");
    o.horizon = app->add_option("--horizon", f.horizon, "Prediction horizon k (steps)");
    o.horizon_frac = app->add_option("--horizon-frac", f.horizon_frac, "Prediction horizon as a fraction of T");
    o.seed = app->add_option("--seed", f.seed, "Base seed");
    o.seeds = app->add_option("--seeds", f.seeds, "Number of seeds (seed, seed+1, ...)");
    o.out = app->add_option("--out", f.out, "Output directory");
    o.config = app->add_option("--config", f.config, "JSON config file (flags override its values)");
    o.jobs = app->add_option("--jobs", f.jobs, "Worker threads (output does not depend on it)");
    return o;
}

CliConfig resolve(const Flags& f, const FlagOptions& o) {
    CliConfig cfg;
    if (o.config->count()) apply_config_file(f.config, cfg);
    if (o.T->count()) cfg.T = f.T;
    if (o.dt->count()) cfg.dt = f.dt;
    if (o.epsilon->count()) cfg.epsilon = f.epsilon;
    if (o.setting->count()) cfg.setting = f.setting;
    if (o.horizon->count()) cfg.horizon = f.horizon;
    if (o.horizon_frac->count()) cfg.horizon_frac = f.horizon_frac;
    if (o.seed->count()) cfg.seed = f.seed;
    if (o.seeds->count()) {
        cfg.n_seeds = f.seeds;
        cfg.seed_list.reset();
    }
    if (o.out->count()) cfg.out = f.out;
    if (o.jobs->count()) cfg.jobs = f.jobs;
    if (o.steps && o.steps->count()) {
        cfg.train.total_steps = f.steps;
        auto& ck = cfg.train.checkpoint_steps;
        std::erase_if(ck, [&](long s) { return s >= f.steps; });
        ck.push_back(f.steps);
    }

    // single values narrow the sweep grids
    if (cfg.epsilon) cfg.grid.epsilons = {*cfg.epsilon};
    if (cfg.setting) cfg.grid.settings = {parse_noise_setting(*cfg.setting)};
    if (cfg.horizon) cfg.grid.k_values = {*cfg.horizon};
    if (cfg.horizon_frac) cfg.grid.horizon_fractions = {*cfg.horizon_frac};
    if (!cfg.seed_list) {
        if (cfg.n_seeds < 1) throw std::invalid_argument("--seeds must be >= 1, got " + std::to_string(cfg.n_seeds));
        cfg.seed_list.emplace();
        for (int i = 0; i < cfg.n_seeds; ++i) cfg.seed_list->push_back(cfg.seed + static_cast<std::uint64_t>(i));
    }
    cfg.grid.seeds = *cfg.seed_list;

    if (cfg.epsilon && !(*cfg.epsilon >= 0.0))
        throw std::invalid_argument("invalid --epsilon " + format_double(*cfg.epsilon) + ": must be >= 0");
    if (cfg.horizon && *cfg.horizon < 1)
        throw std::invalid_argument("invalid --horizon " + std::to_string(*cfg.horizon) + ": must be >= 1");
    if (cfg.horizon_frac && !(*cfg.horizon_frac > 0.0))
        throw std::invalid_argument("invalid --horizon-frac " + format_double(*cfg.horizon_frac) +
                                    ": must be > 0");
    if (cfg.jobs < 1) throw std::invalid_argument("invalid --jobs " + std::to_string(cfg.jobs) + ": must be >= 1");
    if (!(cfg.state_blowup_threshold > 0.0) || !(cfg.control_blowup_threshold > 0.0))
        throw std::invalid_argument("blow-up thresholds must be positive");
    cfg.grid.validate();
    return cfg;
}

RunContext context(const CliConfig& cfg, std::ostream& err) {
    RunContext ctx;
    ctx.dt = cfg.dt;
    ctx.x0 = cfg.x0;
    ctx.disturbance_std = cfg.disturbance_std;
    ctx.state_blowup_threshold = cfg.state_blowup_threshold;
    ctx.control_blowup_threshold = cfg.control_blowup_threshold;
    ctx.jobs = cfg.jobs;
    ctx.log = &err;
    ctx.system(cfg.T, cfg.seed);  // validates T, dt, disturbance_std
    return ctx;
}

fs::path output_dir(const CliConfig& cfg) {
    const fs::path dir = cfg.out.value_or(".");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw std::runtime_error("cannot create output directory '" + dir.string() + "'");
    return dir;
}

/// Single-shot commands print JSON to `out` unless --out names a directory.
void emit_json(const CliConfig& cfg, const Json& j, const std::string& file, std::ostream& out,
               std::ostream& err) {
    const std::string text = j.dump(2) + "\n";
    if (!cfg.out) {
        out << text;
        return;
    }
    const fs::path path = output_dir(cfg) / file;
    write_text_file(path, text);
    err << "wrote " << path.string() << '\n';
}

void write_csv(const fs::path& dir, const std::string& name, const std::string& text, std::ostream& err) {
    write_text_file(dir / name, text);
    err << "wrote " << (dir / name).string() << '\n';
}

int horizon_for(const CliConfig& cfg) {
    if (cfg.horizon) return *cfg.horizon;
    if (cfg.horizon_frac) return horizon_from_fraction(*cfg.horizon_frac, cfg.T);
    return 10;
}

void cmd_ground_truth(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
    const RunContext ctx = context(cfg, err);
    emit_json(cfg, to_json(build_ground_truth(ctx.system(cfg.T, cfg.seed))), "ground_truth.json", out, err);
}

void cmd_solve_offline(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
    const RunContext ctx = context(cfg, err);
    const GroundTruth truth = build_ground_truth(ctx.system(cfg.T, cfg.seed));
    const OfflineSolution opt = solve_offline(truth);
    Json j = to_json(opt.trajectory);
    j["T"] = cfg.T;
    j["seed"] = cfg.seed;
    j["cost_opt"] = opt.trajectory.total_cost;
    emit_json(cfg, j, "offline.json", out, err);
}

void cmd_run_online(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
    RunContext ctx = context(cfg, err);
    ctx.log = nullptr;
    const NoiseSetting setting = parse_noise_setting(cfg.setting.value_or("disturbance"));
    RunRecord rec;
    const ResultRow row = run_cell("run_online", setting, cfg.epsilon.value_or(0.0), cfg.T,
                                   horizon_for(cfg), cfg.seed, ctx, &rec);
    Json j = to_json(rec);
    j["cost_opt"] = row.cost_opt;
    j["regret"] = std::isfinite(row.regret) ? Json(row.regret) : Json("inf");
    emit_json(cfg, j, "run_online.json", out, err);
}

void cmd_sweep_regret(const CliConfig& cfg, std::ostream&, std::ostream& err) {
    const RunContext ctx = context(cfg, err);
    const fs::path dir = output_dir(cfg);
    write_csv(dir, "regret_curve.csv", regret_curve_csv(sweep_regret_vs_T(cfg.grid, cfg.seed, ctx)), err);
}

void cmd_sweep_per_step(const CliConfig& cfg, std::ostream&, std::ostream& err) {
    const RunContext ctx = context(cfg, err);
    const fs::path dir = output_dir(cfg);
    const PerStepResult res = sweep_per_step_error(cfg.grid, cfg.T, cfg.seed, ctx);
    write_csv(dir, "per_step.csv", per_step_csv(res.rows), err);
    write_csv(dir, "per_step_mean.csv", per_step_mean_csv(res.means), err);
}

void cmd_regret_table(const CliConfig& cfg, std::ostream&, std::ostream& err) {
    const RunContext ctx = context(cfg, err);
    const fs::path dir = output_dir(cfg);
    const RegretTable table = regret_table(cfg.grid, cfg.T, ctx);
    write_csv(dir, "table_mean.csv", table_mean_csv(table.cells), err);
    write_csv(dir, "table_std.csv", table_std_csv(table.cells), err);
    write_csv(dir, "table_runs.csv", regret_curve_csv(table.runs), err);
}

void cmd_nn_train(const CliConfig& cfg, std::ostream&, std::ostream& err) {
    const RunContext ctx = context(cfg, err);
    const fs::path dir = output_dir(cfg);
    const GroundTruth truth = build_ground_truth(ctx.system(cfg.T, cfg.seed));
    err << "training " << cfg.train.total_steps << " steps on T=" << cfg.T << '\n';
    const TrainResult res = train(truth, cfg.train);
    write_checkpoints(dir / "checkpoints", res.checkpoints);
    Json run{{"T", cfg.T}, {"dt", cfg.dt}, {"seed", cfg.seed}};
    write_text_file(dir / "checkpoints" / "instance.json", run.dump(2) + "\n");
    write_csv(dir, "nn_error.csv", nn_error_csv(res.checkpoints), err);
}

void cmd_nn_eval(const CliConfig& cfg, std::ostream&, std::ostream& err) {
    CliConfig resolved = cfg;
    const fs::path dir = output_dir(cfg);
    // The instance defaults to the one the checkpoints were trained on.
    std::ifstream inst(dir / "checkpoints" / "instance.json");
    if (inst) {
        const Json j = Json::parse(inst);
        resolved.T = j.at("T").get<int>();
        resolved.dt = j.at("dt").get<double>();
        resolved.seed = j.at("seed").get<std::uint64_t>();
    }
    const RunContext ctx = context(resolved, err);
    const std::vector<Checkpoint> ckpts = read_checkpoints(dir / "checkpoints");
    const GroundTruth truth = build_ground_truth(ctx.system(resolved.T, resolved.seed));
    write_csv(dir, "nn_regret.csv", nn_regret_csv(nn_evaluate(truth, ckpts, cfg.grid.k_values, ctx)), err);
}

std::vector<char*> as_argv(std::vector<std::string>& args) {
    std::vector<char*> argv;
    for (std::string& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    return argv;
}

} // namespace

int run_cli(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Online MPC dynamic-regret laboratory for a time-varying LQR system", "mpclab"};
    app.require_subcommand(1);

    using Handler = void (*)(const CliConfig&, std::ostream&, std::ostream&);
    struct Command {
        const char* name;
        const char* help;
        Handler handler;
        bool train_flags;
    };
    const std::vector<Command> commands{
        {"ground-truth", "Emit the ground-truth problem data as JSON", cmd_ground_truth, false},
        {"solve-offline", "Solve the clairvoyant optimum and emit its trajectory", cmd_solve_offline, false},
        {"run-online", "Run one online MPC episode and emit its record", cmd_run_online, false},
        {"sweep-regret", "Regret versus episode length (regret_curve.csv)", cmd_sweep_regret, false},
        {"sweep-per-step", "Per-step error versus horizon (per_step.csv)", cmd_sweep_per_step, false},
        {"regret-table", "Mean/std regret over seeds (table_mean.csv, table_std.csv)", cmd_regret_table, false},
        {"nn-train", "Train the neural predictor (nn_error.csv, checkpoints/)", cmd_nn_train, true},
        {"nn-eval", "Online MPC with trained checkpoints (nn_regret.csv)", cmd_nn_eval, false},
    };

    std::vector<Flags> flags(commands.size());
    std::vector<FlagOptions> options;
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < commands.size(); ++i) {
        CLI::App* sub = app.add_subcommand(commands[i].name, commands[i].help);
        options.push_back(add_flags(sub, flags[i]));
        if (commands[i].train_flags)
            options.back().steps = sub->add_option("--steps", flags[i].steps, "Total gradient steps");
        subs.push_back(sub);
    }
    CLI::App* version = app.add_subcommand("version", "Print the version");

    std::vector<std::string> args = args_in;
    args.insert(args.begin(), "mpclab");
    std::vector<char*> argv = as_argv(args);
    try {
        app.parse(static_cast<int>(args.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, err, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, err, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, err, err);
        err << app.help();
        return 2;
    }

    if (version->parsed()) {
        out << "mpclab " << kVersion << '\n';
        return 0;
    }
    try {
        for (std::size_t i = 0; i < commands.size(); ++i) {
            if (!subs[i]->parsed()) continue;
            const CliConfig cfg = resolve(flags[i], options[i]);
            commands[i].handler(cfg, out, err);
            return 0;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args(argv + std::min(argc, 1), argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

} // namespace mpclab
