#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stnn/dataset.hpp"
#include "stnn/matrix.hpp"
#include "stnn/rng.hpp"

namespace stnn {

// Which mixing matrix enters the relational term of the dynamics:
//   stnn       W
//   stnn_r     W (.) Gamma
//   stnn_d     Gamma (no prior)
//   stnn_gate  W with row i scaled by sigmoid(w_r . Z_t[i] + b_r)
enum class Variant { stnn, stnn_r, stnn_d, stnn_gate };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);
bool uses_gamma(Variant v);

// Learned latent trajectory: one n x N matrix per time step.
struct LatentState {
    std::vector<Matrix> z;

    std::size_t steps() const noexcept { return z.size(); }
    std::size_t series() const noexcept { return z.empty() ? 0 : z.front().rows(); }
    std::size_t dims() const noexcept { return z.empty() ? 0 : z.front().cols(); }
};

// One logistic gate per relation: weights[r] has length N, biases[r] is scalar.
struct DynamicGateParams {
    std::vector<std::vector<double>> weights;
    std::vector<double> biases;
};

struct StnnParameters {
    Matrix theta0;                        // N x N, intra-series transition
    std::vector<Matrix> thetas;           // N x N per relation
    Matrix decoder_weight;                // N x m, shared by all series
    std::vector<double> decoder_bias;     // m
    std::optional<std::vector<Matrix>> gammas;  // n x n per relation
    std::optional<DynamicGateParams> gate;

    std::size_t latent_dim() const noexcept { return theta0.rows(); }
    std::size_t output_dim() const noexcept { return decoder_bias.size(); }
    std::size_t relation_count() const noexcept { return thetas.size(); }
};

// Everything the optimizer updates. Gradients and optimizer velocities use the
// same layout.
struct ModelState {
    LatentState latent;
    StnnParameters params;
};

// Mutable/const views over every learnable array in a fixed order: latent
// slices, theta0, thetas, decoder weight, decoder bias, gammas, gate weights,
// gate biases.
std::vector<std::span<double>> blocks(ModelState& s);
std::vector<std::span<const double>> blocks(const ModelState& s);
ModelState zeros_like(const ModelState& s);
bool all_finite(const ModelState& s);
double squared_norm(const ModelState& s);

struct LossBreakdown {
    double reconstruction = 0.0;  // mean squared decoding error
    double dynamics = 0.0;        // mean over pairs of ||Z_{t+1} - g(Z_t)||^2, before lambda
    double l1_gamma = 0.0;        // sum of |Gamma| entries, before gamma
    double total = 0.0;
};

struct ObjectiveWeights {
    double lambda = 1.0;
    double gamma = 0.0;
};

enum class Execution { serial, parallel };

ModelState init_model(std::size_t n, std::size_t m, std::size_t N, const RelationSet& relations,
                      Variant variant, std::size_t T, const Rng& rng);

// Per-relation matrices gating W by the receiving series' latent state.
std::vector<Matrix> dynamic_gate(const Matrix& zt, const StnnParameters& params,
                                 const RelationSet& relations);

// M^(r) used in the relational term for the given variant at state zt.
std::vector<Matrix> mixing_matrices(const Matrix& zt, const StnnParameters& params,
                                    const RelationSet& relations, Variant variant);

// g(Z_t) = tanh(Z_t Theta0 + sum_r M^(r) Z_t Theta_r)
Matrix dynamics_step(const Matrix& zt, const StnnParameters& params, const RelationSet& relations,
                     Variant variant);

// X~_t = Z_t D + 1 b^T
Matrix decode(const Matrix& zt, const StnnParameters& params);

// Without `pairs` the full objective is evaluated: reconstruction averaged over
// all T steps, dynamics over all T-1 transitions. With `pairs` (0-based t,
// meaning the transition t -> t+1, duplicates allowed) reconstruction is
// averaged over both endpoints of every pair and dynamics over the pairs.
LossBreakdown loss(const SeriesTensor& x, const LatentState& z, const StnnParameters& params,
                   const RelationSet& relations, Variant variant, ObjectiveWeights w,
                   std::optional<std::span<const std::size_t>> pairs = std::nullopt);

// Exact gradient of `loss(...).total` with respect to every block of the
// model state. Pair contributions are summed in ascending pair order, so the
// serial and parallel paths agree bitwise.
ModelState gradients(const SeriesTensor& x, const LatentState& z, const StnnParameters& params,
                     const RelationSet& relations, Variant variant, ObjectiveWeights w,
                     std::optional<std::span<const std::size_t>> pairs = std::nullopt,
                     Execution exec = Execution::parallel);

struct Correlations {
    std::vector<std::string> labels;
    std::vector<Matrix> matrices;        // effective n x n per relation
    std::vector<std::size_t> dominant;   // per series, relation with largest row |weight| sum
};

Correlations extract_correlations(const StnnParameters& params, const RelationSet& relations,
                                  Variant variant);

// Dominant relation per series for a set of effective matrices.
std::vector<std::size_t> dominant_relation(const std::vector<Matrix>& matrices);

void validate_shapes(const LatentState& z, const StnnParameters& params, const RelationSet& relations,
                     Variant variant);

}  // namespace stnn
