#include "stnn/forecast.hpp"

#include <cmath>

#include "stnn/error.hpp"

namespace stnn {

std::vector<Matrix> rollout(const Matrix& z_last, const StnnParameters& params, const RelationSet& relations,
                            Variant variant, std::size_t horizon) {
    if (horizon < 1) throw ArgumentError("forecast: horizon must be at least 1");
    std::vector<Matrix> out;
    out.reserve(horizon);
    Matrix z = z_last;
    for (std::size_t h = 0; h < horizon; ++h) {
        z = dynamics_step(z, params, relations, variant);
        out.push_back(z);
    }
    return out;
}

SeriesTensor forecast(const ModelState& model, const RelationSet& relations, Variant variant,
                      std::size_t horizon) {
    if (model.latent.steps() == 0) throw StateError("forecast: model has no latent state");
    const auto path = rollout(model.latent.z.back(), model.params, relations, variant, horizon);
    SeriesTensor out(horizon, model.latent.series(), model.params.output_dim());
    for (std::size_t h = 0; h < horizon; ++h) out.set_frame(h, decode(path[h], model.params));
    return out;
}

RmseReport rmse(const SeriesTensor& pred, const SeriesTensor& truth) {
    if (pred.steps() != truth.steps() || pred.series() != truth.series() || pred.dims() != truth.dims()) {
        throw ShapeError("rmse: prediction and truth shapes differ");
    }
    RmseReport r;
    const std::size_t cols = pred.columns();
    for (std::size_t t = 0; t < pred.steps(); ++t) {
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            const double e = pred.col(t, c) - truth.col(t, c);
            s += e * e;
        }
        r.per_horizon.push_back(std::sqrt(s / static_cast<double>(cols)));
    }
    for (double v : r.per_horizon) r.overall += v;
    if (!r.per_horizon.empty()) r.overall /= static_cast<double>(r.per_horizon.size());
    return r;
}

SeriesTensor mean_baseline(const SeriesTensor& train, std::size_t horizon) {
    if (train.steps() == 0) throw ArgumentError("mean baseline: empty training window");
    SeriesTensor out(horizon, train.series(), train.dims());
    for (std::size_t c = 0; c < train.columns(); ++c) {
        double s = 0.0;
        for (std::size_t t = 0; t < train.steps(); ++t) s += train.col(t, c);
        const double mean = s / static_cast<double>(train.steps());
        for (std::size_t h = 0; h < horizon; ++h) out.col(h, c) = mean;
    }
    return out;
}

ArFit ar_fit(std::span<const double> series, const ArConfig& cfg) {
    const std::size_t R = cfg.lags;
    if (R < 1) throw ArgumentError("ar: need at least one lag");
    if (series.size() <= R + 1) {
        throw ArgumentError("ar: training length " + std::to_string(series.size()) + " too short for " +
                            std::to_string(R) + " lags");
    }
    const std::size_t p = R + (cfg.intercept ? 1 : 0);
    Matrix xtx(p, p);
    std::vector<double> xty(p, 0.0), row(p, 1.0);
    for (std::size_t t = R; t < series.size(); ++t) {
        for (std::size_t l = 0; l < R; ++l) row[l] = series[t - 1 - l];
        for (std::size_t a = 0; a < p; ++a) {
            xty[a] += row[a] * series[t];
            for (std::size_t b = 0; b < p; ++b) xtx(a, b) += row[a] * row[b];
        }
    }
    const auto beta = solve_spd(xtx, xty, 1e-8);
    ArFit fit;
    fit.coefficients.assign(beta.begin(), beta.begin() + static_cast<std::ptrdiff_t>(R));
    if (cfg.intercept) fit.intercept = beta[R];
    return fit;
}

SeriesTensor ar_fit_predict(const SeriesTensor& train, const ArConfig& cfg, std::size_t horizon) {
    SeriesTensor out(horizon, train.series(), train.dims());
    std::vector<double> col(train.steps());
    for (std::size_t c = 0; c < train.columns(); ++c) {
        for (std::size_t t = 0; t < train.steps(); ++t) col[t] = train.col(t, c);
        const ArFit fit = ar_fit(col, cfg);
        std::vector<double> hist = col;
        for (std::size_t h = 0; h < horizon; ++h) {
            double y = fit.intercept;
            for (std::size_t l = 0; l < cfg.lags; ++l) y += fit.coefficients[l] * hist[hist.size() - 1 - l];
            hist.push_back(y);
            out.col(h, c) = y;
        }
    }
    return out;
}

}  // namespace stnn
