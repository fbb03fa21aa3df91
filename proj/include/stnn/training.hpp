#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "stnn/dataset.hpp"
#include "stnn/model.hpp"
#include "stnn/rng.hpp"

namespace stnn {

struct TrainingConfig {
    Variant variant = Variant::stnn;
    std::size_t latent_dim = 10;
    double lambda = 1.0;
    double gamma = 0.0;
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::size_t batch_pairs = 32;
    std::size_t epochs = 500;
    std::uint64_t seed = 0;
    // Rescale the global gradient to this norm when it is exceeded; <= 0 disables.
    double clip_norm = 0.0;
    // When gamma > 0, keep relation weights that reach zero at exactly zero
    // (orthant-wise L1 handling). Plain sign subgradients otherwise.
    bool orthant_l1 = true;
    Execution execution = Execution::parallel;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    LossBreakdown loss;     // full objective on the training window
    double grad_norm = 0.0; // mean global gradient norm over the epoch's iterations
    double seconds = 0.0;   // wall clock for the epoch
};

struct TrainingTrace {
    std::vector<EpochRecord> epochs;
};

struct TrainResult {
    ModelState state;
    TrainingTrace trace;
};

// B transition indices drawn uniformly with replacement from [0, T-2]; index t
// denotes the pair (Z_t, Z_{t+1}).
std::vector<std::size_t> sample_pairs(std::size_t T, std::size_t B, Rng& rng);

// One Nesterov update given the gradient evaluated at the look-ahead point
// x + momentum * v:  v <- momentum * v - lr * grad;  x <- x + v.
void nag_step(std::span<double> x, std::span<const double> grad, std::span<double> velocity, double lr,
              double momentum);
void nag_step(ModelState& state, const ModelState& grad, ModelState& velocity, double lr, double momentum);

// state + momentum * velocity, block by block.
ModelState look_ahead(const ModelState& state, const ModelState& velocity, double momentum);

// Trains from a fresh initialization. Throws DivergenceError naming the epoch
// when any loss or parameter becomes non-finite.
TrainResult train(const SeriesTensor& x, const RelationSet& relations, const TrainingConfig& cfg);
// Same, starting from a given state instead of a fresh initialization.
TrainResult train(const SeriesTensor& x, const RelationSet& relations, const TrainingConfig& cfg, ModelState initial);

void write_trace_csv(const std::filesystem::path& path, const TrainingTrace& trace, bool with_timing);

struct GradCheckConfig {
    std::size_t n = 4, m = 2, N = 3, T = 6, relations = 2;
    Variant variant = Variant::stnn;
    double lambda = 1.0;
    double gamma = 0.0;
    std::uint64_t seed = 0;
    double step = 1e-6;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_block;
    std::size_t entries_checked = 0;
};

// Compares every analytic gradient entry with central finite differences, on
// both the full objective and a sampled pair subset. Relative error is
// |a - f| / max(1e-8, |a| + |f|).
GradCheckReport grad_check(const GradCheckConfig& cfg);

}  // namespace stnn
