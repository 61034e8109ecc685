#include "mpclab/serialize.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace mpclab {

namespace {

Json mat_json(const Mat2& m) {
    const auto rm = to_row_major(m);
    return Json::array({rm[0], rm[1], rm[2], rm[3]});
}

Json vec_json(const Vec2& v) { return Json::array({v[0], v[1]}); }

Mat2 mat_from(const Json& j) {
    const auto v = j.get<std::vector<double>>();
    return from_row_major(v);
}

Vec2 vec_from(const Json& j) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 2) throw DimensionMismatch("2-vector needs 2 entries");
    return {v[0], v[1]};
}

Json number_or_sentinel(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return nullptr;
    return v;
}

Json problem_json(const ProblemData& data) {
    Json stages = Json::array();
    for (const StageData& s : data.stages) {
        stages.push_back({{"Q", mat_json(s.Q)},
                          {"R", mat_json(s.R)},
                          {"xbar", vec_json(s.xbar)},
                          {"A", mat_json(s.A)},
                          {"B", mat_json(s.B)},
                          {"w", vec_json(s.w)}});
    }
    return stages;
}

void read_problem(const Json& j, ProblemData& out) {
    out.stages.clear();
    for (const Json& s : j.at("stages")) {
        out.stages.push_back({mat_from(s.at("Q")), mat_from(s.at("R")), vec_from(s.at("xbar")),
                              mat_from(s.at("A")), mat_from(s.at("B")), vec_from(s.at("w"))});
    }
    out.P_terminal = mat_from(j.at("P_terminal"));
    out.xbar_terminal = vec_from(j.at("xbar_terminal"));
}

Json vec_list(const std::vector<Vec2>& xs) {
    Json out = Json::array();
    for (const Vec2& x : xs) out.push_back(vec_json(x));
    return out;
}

} // namespace

Json to_json(const GroundTruth& truth) {
    Json j;
    j["T"] = truth.spec.T;
    j["dt"] = truth.spec.dt;
    j["x0"] = vec_json(truth.spec.x0);
    j["stages"] = problem_json(truth);
    j["P_terminal"] = mat_json(truth.P_terminal);
    j["xbar_terminal"] = vec_json(truth.xbar_terminal);
    return j;
}

GroundTruth ground_truth_from_json(const Json& j) {
    GroundTruth g;
    g.spec.T = j.at("T").get<int>();
    g.spec.dt = j.at("dt").get<double>();
    g.spec.x0 = vec_from(j.at("x0"));
    read_problem(j, g);
    if (g.horizon() != g.spec.T)
        throw DimensionMismatch("ground truth lists " + std::to_string(g.horizon()) +
                                " stages but T = " + std::to_string(g.spec.T));
    return g;
}

Json to_json(const PredictedData& pred) {
    Json j;
    j["T"] = pred.horizon();
    j["stages"] = problem_json(pred);
    j["P_terminal"] = mat_json(pred.P_terminal);
    j["xbar_terminal"] = vec_json(pred.xbar_terminal);
    j["epsilon"] = number_or_sentinel(pred.epsilon);
    j["setting"] = pred.source();
    j["noise_seed"] = pred.noise_seed;
    return j;
}

PredictedData predicted_data_from_json(const Json& j) {
    PredictedData p;
    read_problem(j, p);
    p.epsilon = j.at("epsilon").is_null() ? std::nan("") : j.at("epsilon").get<double>();
    const auto setting = j.at("setting").get<std::string>();
    if (setting == "nn")
        p.setting = std::nullopt;
    else
        p.setting = parse_noise_setting(setting);
    p.noise_seed = j.at("noise_seed").get<std::uint64_t>();
    return p;
}

Json to_json(const Trajectory& traj) {
    return {{"states", vec_list(traj.states)},
            {"controls", vec_list(traj.controls)},
            {"stage_costs", traj.stage_costs},
            {"terminal_cost", traj.terminal_cost},
            {"total_cost", traj.total_cost}};
}

Json to_json(const RunRecord& rec) {
    Json j;
    j["T"] = rec.T;
    j["k"] = rec.k;
    j["epsilon"] = number_or_sentinel(rec.epsilon);
    j["setting"] = rec.setting;
    j["truth_seed"] = rec.truth_seed;
    j["noise_seed"] = rec.noise_seed;
    j["states"] = vec_list(rec.states);
    j["controls"] = vec_list(rec.controls);
    j["per_step_errors"] = rec.per_step_errors;
    j["cost_alg"] = number_or_sentinel(rec.cost_alg);
    j["diverged"] = rec.diverged;
    j["divergence_step"] = rec.divergence_step ? Json(*rec.divergence_step) : Json(nullptr);
    if (rec.diverged) j["divergence_reason"] = rec.divergence_reason;
    return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint files are written in native little-endian order");

std::string checkpoint_file(long step) { return "step_" + std::to_string(step) + ".bin"; }

} // namespace

void write_checkpoints(const std::filesystem::path& dir, const std::vector<Checkpoint>& ckpts) {
    std::filesystem::create_directories(dir);
    Json manifest;
    manifest["format"] = "float64-le";
    manifest["layer_order"] = "for each layer: W (out x in, row-major) then b (out)";
    manifest["snapshots"] = Json::array();
    for (const Checkpoint& c : ckpts) {
        std::ofstream out(dir / checkpoint_file(c.step), std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write checkpoint in '" + dir.string() + "'");
        for (const DenseLayer& l : c.net.layers()) {
            for (Eigen::Index r = 0; r < l.W.rows(); ++r)
                for (Eigen::Index col = 0; col < l.W.cols(); ++col) {
                    const double v = l.W(r, col);
                    out.write(reinterpret_cast<const char*>(&v), sizeof v);
                }
            out.write(reinterpret_cast<const char*>(l.b.data()),
                      static_cast<std::streamsize>(l.b.size() * sizeof(double)));
        }
        if (!out) throw std::runtime_error("failed writing checkpoint " + std::to_string(c.step));
        manifest["snapshots"].push_back({{"step", c.step},
                                         {"file", checkpoint_file(c.step)},
                                         {"layer_sizes", c.net.sizes()},
                                         {"mean_error", c.mean_error},
                                         {"loss", c.loss}});
    }
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<Checkpoint> read_checkpoints(const std::filesystem::path& dir) {
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw std::runtime_error("no checkpoint manifest in '" + dir.string() + "'");
    const Json manifest = Json::parse(mf);
    std::vector<Checkpoint> out;
    for (const Json& snap : manifest.at("snapshots")) {
        Checkpoint c;
        c.step = snap.at("step").get<long>();
        c.mean_error = snap.at("mean_error").get<double>();
        c.loss = snap.at("loss").get<double>();
        c.net = Mlp(snap.at("layer_sizes").get<std::vector<int>>());
        std::ifstream in(dir / snap.at("file").get<std::string>(), std::ios::binary);
        if (!in) throw std::runtime_error("missing checkpoint file for step " + std::to_string(c.step));
        for (DenseLayer& l : c.net.layers()) {
            for (Eigen::Index r = 0; r < l.W.rows(); ++r)
                for (Eigen::Index col = 0; col < l.W.cols(); ++col)
                    in.read(reinterpret_cast<char*>(&l.W(r, col)), sizeof(double));
            in.read(reinterpret_cast<char*>(l.b.data()),
                    static_cast<std::streamsize>(l.b.size() * sizeof(double)));
        }
        if (!in) throw std::runtime_error("truncated checkpoint file for step " + std::to_string(c.step));
        out.push_back(std::move(c));
    }
    return out;
}

} // namespace mpclab
