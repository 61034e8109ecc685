#pragma once

#include "mpclab/mlp.hpp"
#include "mpclab/online_mpc.hpp"

#include <json.hpp>

#include <filesystem>
#include <vector>

namespace mpclab {

using Json = nlohmann::json;

// Matrices are written as flat row-major arrays of 4 entries.
Json to_json(const GroundTruth& truth);
GroundTruth ground_truth_from_json(const Json& j);

/// Ground-truth schema plus "epsilon" (null for learned predictions),
/// "setting" and "noise_seed".
Json to_json(const PredictedData& pred);
PredictedData predicted_data_from_json(const Json& j);

Json to_json(const Trajectory& traj);
Json to_json(const RunRecord& rec);

/// Checkpoints go to `dir` as one little-endian float64 file per snapshot
/// (layer by layer: W row-major, then b) plus manifest.json listing layer
/// order, shapes, steps and mean errors.
void write_checkpoints(const std::filesystem::path& dir, const std::vector<Checkpoint>& ckpts);
std::vector<Checkpoint> read_checkpoints(const std::filesystem::path& dir);

/// Writes `text` to `path`, throwing std::runtime_error if the file cannot be
/// written.
void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace mpclab
