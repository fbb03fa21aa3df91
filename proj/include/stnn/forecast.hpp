#pragma once

#include <cstddef>
#include <vector>

#include "stnn/dataset.hpp"
#include "stnn/model.hpp"

namespace stnn {

// Closed-loop rollout from the last latent slice: returns g(Z_T), g(g(Z_T)), ...
std::vector<Matrix> rollout(const Matrix& z_last, const StnnParameters& params, const RelationSet& relations,
                            Variant variant, std::size_t horizon);

// Decoded predictions for T+1 .. T+horizon.
SeriesTensor forecast(const ModelState& model, const RelationSet& relations, Variant variant,
                      std::size_t horizon);

struct RmseReport {
    std::vector<double> per_horizon;  // sqrt(mean over n*m squared errors) at each step
    double overall = 0.0;             // mean of per_horizon
};

RmseReport rmse(const SeriesTensor& pred, const SeriesTensor& truth);

// Every column predicts its training-window mean.
SeriesTensor mean_baseline(const SeriesTensor& train, std::size_t horizon);

struct ArConfig {
    std::size_t lags = 2;
    bool intercept = true;
};

struct ArFit {
    std::vector<double> coefficients;  // lag 1 first
    double intercept = 0.0;
};

// Least squares of x_t on (x_{t-1}, ..., x_{t-R}, 1) via ridge-stabilized
// normal equations (1e-8 on the diagonal).
ArFit ar_fit(std::span<const double> series, const ArConfig& cfg);

// Independent AR per (series, dimension) column, forecast recursively.
SeriesTensor ar_fit_predict(const SeriesTensor& train, const ArConfig& cfg, std::size_t horizon);

}  // namespace stnn
