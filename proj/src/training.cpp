#include "stnn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "stnn/csv.hpp"
#include "stnn/error.hpp"

namespace stnn {

std::vector<std::size_t> sample_pairs(std::size_t T, std::size_t B, Rng& rng) {
    if (T < 2) throw ArgumentError("sample_pairs: need T >= 2");
    if (B < 1) throw ArgumentError("sample_pairs: need B >= 1");
    std::vector<std::size_t> out(B);
    for (auto& t : out) t = static_cast<std::size_t>(rng.index(T - 1));
    return out;
}

void nag_step(std::span<double> x, std::span<const double> grad, std::span<double> velocity, double lr,
              double momentum) {
    if (x.size() != grad.size() || x.size() != velocity.size()) throw ShapeError("nag_step: block size mismatch");
    for (std::size_t k = 0; k < x.size(); ++k) {
        velocity[k] = momentum * velocity[k] - lr * grad[k];
        x[k] += velocity[k];
    }
}

void nag_step(ModelState& state, const ModelState& grad, ModelState& velocity, double lr, double momentum) {
    auto xs = blocks(state);
    auto gs = blocks(grad);
    auto vs = blocks(velocity);
    if (xs.size() != gs.size() || xs.size() != vs.size()) throw ShapeError("nag_step: block layout mismatch");
    for (std::size_t b = 0; b < xs.size(); ++b) nag_step(xs[b], gs[b], vs[b], lr, momentum);
}

ModelState look_ahead(const ModelState& state, const ModelState& velocity, double momentum) {
    ModelState out = state;
    if (momentum == 0.0) return out;
    auto xs = blocks(out);
    auto vs = blocks(velocity);
    for (std::size_t b = 0; b < xs.size(); ++b)
        for (std::size_t k = 0; k < xs[b].size(); ++k) xs[b][k] += momentum * vs[b][k];
    return out;
}

namespace {

// At entries where the look-ahead weight is exactly zero, replace the gradient
// by the minimum-norm subgradient of smooth + gamma * |.|.
void orthant_gradient(const ModelState& ahead, ModelState& grad, double gamma) {
    if (!ahead.params.gammas) return;
    for (std::size_t r = 0; r < ahead.params.gammas->size(); ++r) {
        auto x = (*ahead.params.gammas)[r].data();
        auto g = (*grad.params.gammas)[r].data();
        for (std::size_t k = 0; k < x.size(); ++k) {
            if (x[k] != 0.0) continue;
            const double mag = std::abs(g[k]) - gamma;
            g[k] = mag > 0.0 ? std::copysign(mag, g[k]) : 0.0;
        }
    }
}

// Entries whose sign flipped during the step are set to zero and stopped.
void orthant_project(const std::vector<Matrix>& before, ModelState& state, ModelState& velocity) {
    for (std::size_t r = 0; r < before.size(); ++r) {
        auto old = before[r].data();
        auto x = (*state.params.gammas)[r].data();
        auto v = (*velocity.params.gammas)[r].data();
        for (std::size_t k = 0; k < x.size(); ++k) {
            if (old[k] * x[k] < 0.0) {
                x[k] = 0.0;
                v[k] = 0.0;
            }
        }
    }
}

}  // namespace

TrainResult train(const SeriesTensor& x, const RelationSet& relations, const TrainingConfig& cfg) {
    if (x.steps() < 2) throw ArgumentError("train: need at least 2 time steps");
    return train(x, relations, cfg,
                 init_model(x.series(), x.dims(), cfg.latent_dim, relations, cfg.variant, x.steps(),
                            Rng(cfg.seed).split(streams::kInit)));
}

TrainResult train(const SeriesTensor& x, const RelationSet& relations, const TrainingConfig& cfg, ModelState initial) {
    const std::size_t T = x.steps();
    if (T < 2) throw ArgumentError("train: need at least 2 time steps");
    if (!(cfg.learning_rate > 0.0)) throw ArgumentError("train: learning rate must be positive");
    if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) throw ArgumentError("train: momentum must lie in [0, 1)");
    if (cfg.batch_pairs < 1) throw ArgumentError("train: batch size must be positive");

    const Rng root(cfg.seed);
    TrainResult result;
    validate_shapes(initial.latent, initial.params, relations, cfg.variant);
    if (initial.latent.steps() != T || initial.latent.series() != x.series() ||
        initial.params.output_dim() != x.dims())
        throw ShapeError("train: initial state does not match the series");
    result.state = std::move(initial);
    if (cfg.epochs == 0) return result;

    Rng pair_rng = root.split(streams::kPairs);
    ModelState velocity = zeros_like(result.state);
    const ObjectiveWeights weights{cfg.lambda, cfg.gamma};
    const std::size_t iterations = (T - 1 + cfg.batch_pairs - 1) / cfg.batch_pairs;
    auto& state = result.state;
    const bool orthant = cfg.orthant_l1 && cfg.gamma > 0.0 && uses_gamma(cfg.variant) && state.params.gammas;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        double norm_sum = 0.0;
        for (std::size_t it = 0; it < iterations; ++it) {
            const auto pairs = sample_pairs(T, cfg.batch_pairs, pair_rng);
            const ModelState ahead = look_ahead(state, velocity, cfg.momentum);
            ModelState grad = gradients(x, ahead.latent, ahead.params, relations, cfg.variant, weights,
                                        std::span<const std::size_t>(pairs), cfg.execution);
            const double norm = std::sqrt(squared_norm(grad));
            if (!std::isfinite(norm)) throw DivergenceError("non-finite gradient", epoch);
            if (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) {
                const double scale = cfg.clip_norm / norm;
                for (auto b : blocks(grad))
                    for (auto& v : b) v *= scale;
            }
            norm_sum += norm;
            if (orthant) {
                orthant_gradient(ahead, grad, cfg.gamma);
                const std::vector<Matrix> before = *state.params.gammas;
                nag_step(state, grad, velocity, cfg.learning_rate, cfg.momentum);
                orthant_project(before, state, velocity);
            } else {
                nag_step(state, grad, velocity, cfg.learning_rate, cfg.momentum);
            }
            if (!all_finite(state)) throw DivergenceError("non-finite parameter", epoch);
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = loss(x, state.latent, state.params, relations, cfg.variant, weights);
        if (!std::isfinite(rec.loss.total)) throw DivergenceError("non-finite loss", epoch);
        rec.grad_norm = norm_sum / static_cast<double>(iterations);
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.trace.epochs.push_back(rec);
    }
    return result;
}

void write_trace_csv(const std::filesystem::path& path, const TrainingTrace& trace, bool with_timing) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "epoch,reconstruction,dynamics,l1,total,grad_norm,seconds\n";
    for (const auto& e : trace.epochs) {
        out << e.epoch << ',' << csv::format(e.loss.reconstruction) << ',' << csv::format(e.loss.dynamics) << ','
            << csv::format(e.loss.l1_gamma) << ',' << csv::format(e.loss.total) << ','
            << csv::format(e.grad_norm) << ',' << csv::format(with_timing ? e.seconds : 0.0) << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

namespace {

std::vector<std::string> block_names(const ModelState& s) {
    std::vector<std::string> names;
    for (std::size_t t = 0; t < s.latent.steps(); ++t) names.push_back("z[" + std::to_string(t) + "]");
    const auto& p = s.params;
    names.emplace_back("theta0");
    for (std::size_t r = 0; r < p.thetas.size(); ++r) names.push_back("theta[" + std::to_string(r) + "]");
    names.emplace_back("decoder_weight");
    names.emplace_back("decoder_bias");
    if (p.gammas)
        for (std::size_t r = 0; r < p.gammas->size(); ++r) names.push_back("gamma[" + std::to_string(r) + "]");
    if (p.gate) {
        for (std::size_t r = 0; r < p.gate->weights.size(); ++r)
            names.push_back("gate_weight[" + std::to_string(r) + "]");
        names.emplace_back("gate_bias");
    }
    return names;
}

RelationSet random_relations(std::size_t n, std::size_t count, Rng& rng) {
    RelationSet rel(n);
    for (std::size_t r = 0; r < count; ++r) {
        Matrix w(n, n);
        for (auto& v : w.data()) v = rng.uniform() < 0.6 ? rng.uniform() : 0.0;
        rel.add({"r" + std::to_string(r), row_normalize(w), Provenance::normalized_raw});
    }
    return rel;
}

double away_from_zero(Rng& rng) {
    const double mag = 0.5 + rng.uniform();
    return rng.uniform() < 0.5 ? -mag : mag;
}

}  // namespace

GradCheckReport grad_check(const GradCheckConfig& cfg) {
    Rng rng = Rng(cfg.seed).split(streams::kGradCheck);
    const RelationSet rel = random_relations(cfg.n, cfg.relations, rng);
    ModelState s = init_model(cfg.n, cfg.m, cfg.N, rel, cfg.variant, cfg.T, rng.split(streams::kInit));
    // Move away from the near-identity initialization so every block has
    // gradients of comparable magnitude.
    for (auto& zt : s.latent.z)
        for (auto& v : zt.data()) v = rng.normal(0.0, 0.5);
    for (auto& v : s.params.theta0.data()) v = rng.normal(0.0, 0.5);
    for (auto& th : s.params.thetas)
        for (auto& v : th.data()) v = rng.normal(0.0, 0.5);
    for (auto& v : s.params.decoder_weight.data()) v = rng.normal(0.0, 0.5);
    for (auto& v : s.params.decoder_bias) v = rng.normal(0.0, 0.1);
    if (s.params.gammas)
        for (auto& g : *s.params.gammas)
            for (auto& v : g.data()) v = away_from_zero(rng);
    if (s.params.gate) {
        for (auto& w : s.params.gate->weights)
            for (auto& v : w) v = rng.normal(0.0, 0.5);
        for (auto& b : s.params.gate->biases) b = rng.normal(0.0, 0.5);
    }
    SeriesTensor x(cfg.T, cfg.n, cfg.m);
    for (auto& v : x.values()) v = rng.uniform();

    const ObjectiveWeights w{cfg.lambda, cfg.gamma};
    const auto pairs = sample_pairs(cfg.T, std::max<std::size_t>(2, cfg.T / 2), rng);
    const auto names = block_names(s);

    GradCheckReport report;
    for (int mode = 0; mode < 2; ++mode) {
        std::optional<std::span<const std::size_t>> subset;
        if (mode == 1) subset = std::span<const std::size_t>(pairs);
        const ModelState analytic = gradients(x, s.latent, s.params, rel, cfg.variant, w, subset);
        const auto ga = blocks(analytic);
        ModelState probe = s;
        auto ps = blocks(probe);
        for (std::size_t b = 0; b < ps.size(); ++b) {
            for (std::size_t k = 0; k < ps[b].size(); ++k) {
                const double orig = ps[b][k];
                ps[b][k] = orig + cfg.step;
                const double up = loss(x, probe.latent, probe.params, rel, cfg.variant, w, subset).total;
                ps[b][k] = orig - cfg.step;
                const double down = loss(x, probe.latent, probe.params, rel, cfg.variant, w, subset).total;
                ps[b][k] = orig;
                const double fd = (up - down) / (2.0 * cfg.step);
                const double a = ga[b][k];
                const double err = std::abs(a - fd) / std::max(1e-8, std::abs(a) + std::abs(fd));
                ++report.entries_checked;
                if (err > report.max_rel_error) {
                    report.max_rel_error = err;
                    report.worst_block = names[b] + (mode == 1 ? " (pairs)" : " (full)");
                }
            }
        }
    }
    return report;
}

}  // namespace stnn
