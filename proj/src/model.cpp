#include "stnn/model.hpp"

#include <cmath>

#include "stnn/error.hpp"

namespace stnn {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::stnn: return "stnn";
        case Variant::stnn_r: return "stnn-r";
        case Variant::stnn_d: return "stnn-d";
        case Variant::stnn_gate: return "stnn-gate";
    }
    return "stnn";
}

Variant parse_variant(const std::string& s) {
    if (s == "stnn") return Variant::stnn;
    if (s == "stnn-r") return Variant::stnn_r;
    if (s == "stnn-d") return Variant::stnn_d;
    if (s == "stnn-gate") return Variant::stnn_gate;
    throw ConfigError("unknown variant '" + s + "' (expected stnn, stnn-r, stnn-d or stnn-gate)");
}

bool uses_gamma(Variant v) { return v == Variant::stnn_r || v == Variant::stnn_d; }

namespace {

template <class State, class Span>
std::vector<Span> collect_blocks(State& s) {
    std::vector<Span> out;
    for (auto& z : s.latent.z) out.emplace_back(z.data());
    auto& p = s.params;
    out.emplace_back(p.theta0.data());
    for (auto& th : p.thetas) out.emplace_back(th.data());
    out.emplace_back(p.decoder_weight.data());
    out.emplace_back(p.decoder_bias);
    if (p.gammas)
        for (auto& g : *p.gammas) out.emplace_back(g.data());
    if (p.gate) {
        for (auto& w : p.gate->weights) out.emplace_back(w);
        out.emplace_back(p.gate->biases);
    }
    return out;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::vector<std::span<double>> blocks(ModelState& s) {
    return collect_blocks<ModelState, std::span<double>>(s);
}

std::vector<std::span<const double>> blocks(const ModelState& s) {
    return collect_blocks<const ModelState, std::span<const double>>(s);
}

ModelState zeros_like(const ModelState& s) {
    ModelState out = s;
    for (auto b : blocks(out))
        for (auto& v : b) v = 0.0;
    return out;
}

bool all_finite(const ModelState& s) {
    for (auto b : blocks(s))
        for (double v : b)
            if (!std::isfinite(v)) return false;
    return true;
}

double squared_norm(const ModelState& s) {
    double acc = 0.0;
    for (auto b : blocks(s))
        for (double v : b) acc += v * v;
    return acc;
}

ModelState init_model(std::size_t n, std::size_t m, std::size_t N, const RelationSet& relations,
                      Variant variant, std::size_t T, const Rng& rng) {
    if (N < 1) throw ArgumentError("init_model: latent dimension must be at least 1");
    if (T < 2) throw ArgumentError("init_model: need at least 2 time steps");
    if (n < 1 || m < 1) throw ArgumentError("init_model: n and m must be positive");
    if (relations.series() != n && !relations.empty()) {
        throw ShapeError("init_model: relations are " + std::to_string(relations.series()) +
                         "x" + std::to_string(relations.series()) + " but n = " + std::to_string(n));
    }
    Rng gen = rng;
    const std::size_t R = relations.size();
    ModelState s;
    s.latent.z.assign(T, Matrix(n, N));
    for (auto& zt : s.latent.z)
        for (auto& v : zt.data()) v = gen.normal(0.0, 0.1);

    auto& p = s.params;
    p.theta0 = Matrix::identity(N);
    for (auto& v : p.theta0.data()) v += gen.normal(0.0, 0.01);
    p.thetas.assign(R, Matrix(N, N));
    for (auto& th : p.thetas)
        for (auto& v : th.data()) v = gen.normal(0.0, 0.01);
    p.decoder_weight = Matrix(N, m);
    for (auto& v : p.decoder_weight.data()) v = gen.normal(0.0, 0.1);
    p.decoder_bias.assign(m, 0.0);

    if (variant == Variant::stnn_r) {
        p.gammas = std::vector<Matrix>(R, Matrix::ones(n, n));
    } else if (variant == Variant::stnn_d) {
        p.gammas = std::vector<Matrix>(R, Matrix(n, n));
        for (auto& g : *p.gammas)
            for (auto& v : g.data()) v = std::abs(gen.normal(0.0, 0.01));
    } else if (variant == Variant::stnn_gate) {
        p.gate = DynamicGateParams{std::vector<std::vector<double>>(R, std::vector<double>(N, 0.0)),
                                   std::vector<double>(R, 0.0)};
    }
    return s;
}

std::vector<Matrix> dynamic_gate(const Matrix& zt, const StnnParameters& params,
                                 const RelationSet& relations) {
    if (!params.gate) throw StateError("dynamic_gate: model has no gate parameters");
    const auto& gate = *params.gate;
    if (gate.weights.size() != relations.size() || gate.biases.size() != relations.size()) {
        throw ShapeError("dynamic_gate: one gate per relation required");
    }
    std::vector<Matrix> out;
    out.reserve(relations.size());
    for (std::size_t r = 0; r < relations.size(); ++r) {
        if (gate.weights[r].size() != zt.cols()) throw ShapeError("dynamic_gate: gate weight length");
        Matrix m = relations[r].weights;
        for (std::size_t i = 0; i < zt.rows(); ++i) {
            double a = gate.biases[r];
            auto zi = zt.row(i);
            for (std::size_t k = 0; k < zt.cols(); ++k) a += gate.weights[r][k] * zi[k];
            const double s = sigmoid(a);
            for (auto& v : m.row(i)) v *= s;
        }
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<Matrix> mixing_matrices(const Matrix& zt, const StnnParameters& params,
                                    const RelationSet& relations, Variant variant) {
    std::vector<Matrix> out;
    switch (variant) {
        case Variant::stnn:
            for (const auto& r : relations) out.push_back(r.weights);
            break;
        case Variant::stnn_r:
            if (!params.gammas) throw StateError("stnn-r model has no relation weights");
            for (std::size_t r = 0; r < relations.size(); ++r)
                out.push_back(hadamard(relations[r].weights, (*params.gammas)[r]));
            break;
        case Variant::stnn_d:
            if (!params.gammas) throw StateError("stnn-d model has no relation weights");
            out = *params.gammas;
            break;
        case Variant::stnn_gate:
            out = dynamic_gate(zt, params, relations);
            break;
    }
    return out;
}

Matrix dynamics_step(const Matrix& zt, const StnnParameters& params, const RelationSet& relations,
                     Variant variant) {
    if (zt.cols() != params.theta0.rows()) {
        throw ShapeError("dynamics_step: latent " + zt.shape_string() + " vs theta0 " +
                         params.theta0.shape_string());
    }
    if (params.thetas.size() != relations.size()) {
        throw ShapeError("dynamics_step: " + std::to_string(params.thetas.size()) +
                         " transition matrices for " + std::to_string(relations.size()) + " relations");
    }
    Matrix a = matmul(zt, params.theta0);
    const auto mix = mixing_matrices(zt, params, relations, variant);
    for (std::size_t r = 0; r < mix.size(); ++r) a += matmul(mix[r], matmul(zt, params.thetas[r]));
    return map_tanh(a);
}

Matrix decode(const Matrix& zt, const StnnParameters& params) {
    Matrix out = matmul(zt, params.decoder_weight);
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto row = out.row(i);
        for (std::size_t j = 0; j < row.size(); ++j) row[j] += params.decoder_bias[j];
    }
    return out;
}

void validate_shapes(const LatentState& z, const StnnParameters& p, const RelationSet& relations,
                     Variant variant) {
    const std::size_t N = p.theta0.rows();
    if (p.theta0.cols() != N) throw ShapeError("theta0 must be square");
    if (z.z.empty()) throw ShapeError("latent state is empty");
    const std::size_t n = z.series();
    for (const auto& zt : z.z)
        if (zt.rows() != n || zt.cols() != N)
            throw ShapeError("latent slice " + zt.shape_string() + " inconsistent with n=" +
                             std::to_string(n) + ", N=" + std::to_string(N));
    if (p.thetas.size() != relations.size()) throw ShapeError("one transition matrix per relation required");
    for (const auto& th : p.thetas)
        if (th.rows() != N || th.cols() != N) throw ShapeError("transition matrix must be NxN");
    if (!relations.empty() && relations.series() != n) throw ShapeError("relation size does not match n");
    if (p.decoder_weight.rows() != N || p.decoder_weight.cols() != p.decoder_bias.size())
        throw ShapeError("decoder shape inconsistent");
    if (uses_gamma(variant)) {
        if (!p.gammas || p.gammas->size() != relations.size())
            throw StateError(to_string(variant) + " requires one relation weight matrix per relation");
        for (const auto& g : *p.gammas)
            if (g.rows() != n || g.cols() != n) throw ShapeError("relation weights must be nxn");
    }
    if (variant == Variant::stnn_gate && !p.gate) throw StateError("stnn-gate requires gate parameters");
}

std::vector<std::size_t> dominant_relation(const std::vector<Matrix>& matrices) {
    if (matrices.empty()) return {};
    const std::size_t n = matrices.front().rows();
    std::vector<std::size_t> out(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        double best = -1.0;
        for (std::size_t r = 0; r < matrices.size(); ++r) {
            double s = 0.0;
            for (double v : matrices[r].row(i)) s += std::abs(v);
            if (s > best) {
                best = s;
                out[i] = r;
            }
        }
    }
    return out;
}

Correlations extract_correlations(const StnnParameters& params, const RelationSet& relations,
                                  Variant variant) {
    if (!uses_gamma(variant)) {
        throw StateError("relation weights exist only for stnn-r and stnn-d models, not " +
                         to_string(variant));
    }
    if (!params.gammas) throw StateError("model has no relation weights");
    Correlations c;
    c.labels = relations.labels();
    for (std::size_t r = 0; r < relations.size(); ++r) {
        c.matrices.push_back(variant == Variant::stnn_d ? (*params.gammas)[r]
                                                        : hadamard(relations[r].weights, (*params.gammas)[r]));
    }
    c.dominant = dominant_relation(c.matrices);
    return c;
}

}  // namespace stnn
