#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <json.hpp>

#include "stnn/dataset.hpp"
#include "stnn/model.hpp"
#include "stnn/synthetic.hpp"

namespace stnn {

// Trained model plus everything needed to forecast from it without the
// original inputs.
struct Checkpoint {
    Variant variant = Variant::stnn;
    ModelState state;
    RelationSet relations;  // exactly as used in the dynamics
    std::optional<NormalizationRecord> norm;
    double lambda = 0.0;
    double gamma = 0.0;
    std::uint64_t seed = 0;
};

nlohmann::ordered_json to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const StnnParameters& p);
StnnParameters params_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const LatentState& z);
LatentState latent_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

void save_ground_truth(const std::filesystem::path& path, const GroundTruth& truth);
GroundTruth load_ground_truth(const std::filesystem::path& path);

// Latent trajectory as CSV, one row per step, n*N columns.
void save_latent_csv(const std::filesystem::path& path, const LatentState& z);

void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace stnn
