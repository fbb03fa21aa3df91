#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "stnn/dataset.hpp"
#include "stnn/model.hpp"

namespace stnn {

enum class SyntheticKind { teacher_stnn, grid_diffusion };
std::string to_string(SyntheticKind k);
SyntheticKind parse_synthetic_kind(const std::string& s);

struct Edge {
    std::size_t i = 0;  // receiving series
    std::size_t j = 0;  // influencing series
    double weight = 1.0;
};

struct SyntheticSpec {
    SyntheticKind kind = SyntheticKind::grid_diffusion;
    std::size_t grid_rows = 0;   // lattice topology when non-zero
    std::size_t grid_cols = 0;
    std::size_t n = 0;           // required with an explicit edge list
    std::vector<Edge> edges;
    std::size_t m = 1;
    std::size_t N = 3;           // teacher latent dimension
    std::size_t T = 100;
    double noise_std = 0.01;
    std::uint64_t seed = 0;
    double alpha = 0.5;          // diffusion mixing rate
    double teacher_gain = 1.3;   // spectral scale of the teacher's intra-series map
    double teacher_coupling = 1.0;
    std::optional<std::vector<double>> initial_state;  // diffusion start, n*m values

    std::size_t series_count() const;
};

struct GroundTruth {
    SyntheticKind kind = SyntheticKind::grid_diffusion;
    std::uint64_t seed = 0;
    std::size_t n = 0;
    std::vector<Edge> adjacency;
    // teacher_stnn only: generating parameters and the noise-free latent path.
    std::optional<StnnParameters> teacher;
    std::optional<LatentState> latent;

    Matrix adjacency_matrix() const;
};

struct SyntheticData {
    SeriesTensor series;
    RelationSet relations;  // the raw generating adjacency, one relation
    GroundTruth truth;
};

// teacher_stnn: Z_0 random, Z_{t+1} = tanh(Z_t Theta0 + W~ Z_t Theta1) with W~
// the row-normalized adjacency, X_t = Z_t D + b + noise.
// grid_diffusion: x_{t+1} = (1 - alpha) x_t + alpha W~ x_t + noise, per dimension.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace stnn
