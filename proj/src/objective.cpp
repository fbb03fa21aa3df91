// Loss and analytic gradients of the latent objective
//   rec(Z, D, b) + lambda * dyn(Z, Theta, Gamma, gate) + gamma * sum |Gamma|.

#include <algorithm>
#include <cmath>

#include "stnn/error.hpp"
#include "stnn/kernels.hpp"
#include "stnn/model.hpp"

namespace stnn {

namespace {

// One transition t -> t+1 with the weights its terms carry in the objective.
struct Unit {
    std::size_t t = 0;
    double rec_t = 0.0;   // weight of mse(t)
    double rec_t1 = 0.0;  // weight of mse(t+1)
    double dyn = 0.0;     // weight of ||Z_{t+1} - g(Z_t)||^2 (before lambda)
    bool has_dyn = true;
};

std::vector<Unit> make_units(std::size_t T, std::optional<std::span<const std::size_t>> pairs) {
    std::vector<Unit> units;
    if (!pairs) {
        if (T == 1) return {Unit{0, 1.0, 0.0, 0.0, false}};
        const double rw = 1.0 / static_cast<double>(T);
        const double dw = 1.0 / static_cast<double>(T - 1);
        for (std::size_t t = 0; t + 1 < T; ++t) units.push_back({t, rw, t + 2 == T ? rw : 0.0, dw, true});
        return units;
    }
    if (pairs->empty()) throw ArgumentError("loss: empty pair set");
    const double P = static_cast<double>(pairs->size());
    for (std::size_t t : *pairs) {
        if (t + 1 >= T) {
            throw ArgumentError("loss: pair index " + std::to_string(t) + " out of range for T = " +
                                std::to_string(T));
        }
        units.push_back({t, 0.5 / P, 0.5 / P, 1.0 / P, true});
    }
    std::stable_sort(units.begin(), units.end(), [](const Unit& a, const Unit& b) { return a.t < b.t; });
    return units;
}

void check_inputs(const SeriesTensor& x, const LatentState& z, const StnnParameters& p,
                  const RelationSet& relations, Variant variant, ObjectiveWeights w) {
    validate_shapes(z, p, relations, variant);
    if (x.steps() != z.steps() || x.series() != z.series() || x.dims() != p.output_dim()) {
        throw ShapeError("observations are " + std::to_string(x.steps()) + "x" + std::to_string(x.series()) +
                         "x" + std::to_string(x.dims()) + " but the model expects " +
                         std::to_string(z.steps()) + "x" + std::to_string(z.series()) + "x" +
                         std::to_string(p.output_dim()));
    }
    if (!(w.lambda >= 0.0) || !(w.gamma >= 0.0)) throw ArgumentError("lambda and gamma must be non-negative");
}

Matrix mm(const Matrix& a, const Matrix& b) {
    Matrix out;
    kernels::serial::matmul(a, b, out);
    return out;
}
Matrix mm_tn(const Matrix& a, const Matrix& b) {
    Matrix out;
    kernels::serial::matmul_tn(a, b, out);
    return out;
}
Matrix mm_nt(const Matrix& a, const Matrix& b) {
    Matrix out;
    kernels::serial::matmul_nt(a, b, out);
    return out;
}

// Decoding residual d(Z_t) - X_t.
Matrix residual(const Matrix& zt, const StnnParameters& p, const SeriesTensor& x, std::size_t t) {
    Matrix e = mm(zt, p.decoder_weight);
    for (std::size_t i = 0; i < e.rows(); ++i)
        for (std::size_t j = 0; j < e.cols(); ++j) e(i, j) += p.decoder_bias[j] - x.at(t, i, j);
    return e;
}

struct Forward {
    std::vector<Matrix> mix;  // M^(r)
    std::vector<Matrix> y;    // Z_t Theta_r
    Matrix g;                 // tanh(A)
    Matrix d;                 // Z_{t+1} - g
};

Forward forward(const Matrix& zt, const Matrix& zt1, const StnnParameters& p, const RelationSet& rel,
                Variant variant) {
    Forward f;
    f.mix = mixing_matrices(zt, p, rel, variant);
    Matrix a = mm(zt, p.theta0);
    f.y.reserve(p.thetas.size());
    for (std::size_t r = 0; r < p.thetas.size(); ++r) {
        f.y.push_back(mm(zt, p.thetas[r]));
        a += mm(f.mix[r], f.y[r]);
    }
    kernels::serial::map_tanh(a, f.g);
    f.d = zt1 - f.g;
    return f;
}

// Gradient contribution of a single unit; merged into the total afterwards.
struct UnitGrad {
    Matrix dz_t, dz_t1;
    Matrix dtheta0;
    std::vector<Matrix> dthetas;
    Matrix ddecoder;
    std::vector<double> dbias;
    std::vector<Matrix> dgammas;
    std::vector<std::vector<double>> dgate_w;
    std::vector<double> dgate_b;
    bool dyn = false;
};

void add_reconstruction(UnitGrad& g, Matrix& dz, const Matrix& zt, const StnnParameters& p,
                        const SeriesTensor& x, std::size_t t, double weight) {
    if (weight == 0.0) return;
    Matrix dx = residual(zt, p, x, t);
    dx *= 2.0 * weight / static_cast<double>(dx.size());
    dz += mm_nt(dx, p.decoder_weight);
    g.ddecoder += mm_tn(zt, dx);
    for (std::size_t i = 0; i < dx.rows(); ++i)
        for (std::size_t j = 0; j < dx.cols(); ++j) g.dbias[j] += dx(i, j);
}

UnitGrad unit_gradient(const Unit& u, const SeriesTensor& x, const LatentState& z, const StnnParameters& p,
                       const RelationSet& rel, Variant variant, ObjectiveWeights w) {
    const Matrix& zt = z.z[u.t];
    const std::size_t n = zt.rows(), N = zt.cols(), R = p.thetas.size();
    UnitGrad g;
    g.dz_t = Matrix(n, N);
    g.ddecoder = Matrix(p.decoder_weight.rows(), p.decoder_weight.cols());
    g.dbias.assign(p.decoder_bias.size(), 0.0);
    const bool with_t1 = u.t + 1 < z.steps();
    if (with_t1) g.dz_t1 = Matrix(n, N);

    add_reconstruction(g, g.dz_t, zt, p, x, u.t, u.rec_t);
    if (with_t1) add_reconstruction(g, g.dz_t1, z.z[u.t + 1], p, x, u.t + 1, u.rec_t1);

    if (!u.has_dyn || w.lambda == 0.0) return g;
    g.dyn = true;
    const Forward f = forward(zt, z.z[u.t + 1], p, rel, variant);

    // d/dD of lambda * dyn * ||D||^2
    Matrix dd = f.d * (2.0 * w.lambda * u.dyn);
    g.dz_t1 += dd;
    // dA = -dD (.) (1 - g^2)
    Matrix da(n, N);
    for (std::size_t k = 0; k < da.size(); ++k) {
        const double gk = f.g.data()[k];
        da.data()[k] = -dd.data()[k] * (1.0 - gk * gk);
    }

    g.dtheta0 = mm_tn(zt, da);
    g.dz_t += mm_nt(da, p.theta0);
    g.dthetas.reserve(R);
    if (uses_gamma(variant)) g.dgammas.reserve(R);
    if (variant == Variant::stnn_gate) {
        g.dgate_w.assign(R, std::vector<double>(N, 0.0));
        g.dgate_b.assign(R, 0.0);
    }
    for (std::size_t r = 0; r < R; ++r) {
        const Matrix& m = f.mix[r];
        g.dthetas.push_back(mm_tn(mm(m, zt), da));
        g.dz_t += mm_tn(m, mm_nt(da, p.thetas[r]));
        if (variant == Variant::stnn) continue;
        const Matrix dm = mm_nt(da, f.y[r]);  // dL/dM^(r)
        if (variant == Variant::stnn_r) {
            g.dgammas.push_back(hadamard(dm, rel[r].weights));
        } else if (variant == Variant::stnn_d) {
            g.dgammas.push_back(dm);
        } else {
            // M = diag(s) W, s_i = sigmoid(w . Z_t[i] + b)
            const auto& wr = p.gate->weights[r];
            const Matrix& prior = rel[r].weights;
            for (std::size_t i = 0; i < n; ++i) {
                double pre = p.gate->biases[r];
                for (std::size_t k = 0; k < N; ++k) pre += wr[k] * zt(i, k);
                const double s = 1.0 / (1.0 + std::exp(-pre));
                double ds = 0.0;
                for (std::size_t j = 0; j < n; ++j) ds += dm(i, j) * prior(i, j);
                const double dpre = ds * s * (1.0 - s);
                for (std::size_t k = 0; k < N; ++k) {
                    g.dgate_w[r][k] += dpre * zt(i, k);
                    g.dz_t(i, k) += dpre * wr[k];
                }
                g.dgate_b[r] += dpre;
            }
        }
    }
    return g;
}

void add_to(std::span<double> dst, std::span<const double> src) {
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
}

void merge(ModelState& total, const UnitGrad& g, std::size_t t) {
    add_to(total.latent.z[t].data(), g.dz_t.data());
    if (!g.dz_t1.empty()) add_to(total.latent.z[t + 1].data(), g.dz_t1.data());
    auto& p = total.params;
    add_to(p.decoder_weight.data(), g.ddecoder.data());
    add_to(p.decoder_bias, g.dbias);
    if (!g.dyn) return;
    add_to(p.theta0.data(), g.dtheta0.data());
    for (std::size_t r = 0; r < g.dthetas.size(); ++r) add_to(p.thetas[r].data(), g.dthetas[r].data());
    for (std::size_t r = 0; r < g.dgammas.size(); ++r) add_to((*p.gammas)[r].data(), g.dgammas[r].data());
    for (std::size_t r = 0; r < g.dgate_w.size(); ++r) {
        add_to(p.gate->weights[r], g.dgate_w[r]);
        p.gate->biases[r] += g.dgate_b[r];
    }
}

// Units are evaluated in fixed-size chunks so peak memory does not grow with the
// number of pairs; the chunk size is independent of the thread count.
constexpr std::size_t kChunk = 16;

}  // namespace

LossBreakdown loss(const SeriesTensor& x, const LatentState& z, const StnnParameters& params,
                   const RelationSet& relations, Variant variant, ObjectiveWeights w,
                   std::optional<std::span<const std::size_t>> pairs) {
    check_inputs(x, z, params, relations, variant, w);
    const auto units = make_units(z.steps(), pairs);
    const double entries = static_cast<double>(z.series() * params.output_dim());
    LossBreakdown out;
    for (const auto& u : units) {
        if (u.rec_t != 0.0) out.reconstruction += u.rec_t * frobenius_sq(residual(z.z[u.t], params, x, u.t)) / entries;
        if (u.rec_t1 != 0.0)
            out.reconstruction += u.rec_t1 * frobenius_sq(residual(z.z[u.t + 1], params, x, u.t + 1)) / entries;
        if (u.has_dyn) {
            const Forward f = forward(z.z[u.t], z.z[u.t + 1], params, relations, variant);
            out.dynamics += u.dyn * frobenius_sq(f.d);
        }
    }
    if (params.gammas && uses_gamma(variant))
        for (const auto& g : *params.gammas) out.l1_gamma += l1_norm(g);
    out.total = out.reconstruction + w.lambda * out.dynamics + w.gamma * out.l1_gamma;
    return out;
}

ModelState gradients(const SeriesTensor& x, const LatentState& z, const StnnParameters& params,
                     const RelationSet& relations, Variant variant, ObjectiveWeights w,
                     std::optional<std::span<const std::size_t>> pairs, Execution exec) {
    check_inputs(x, z, params, relations, variant, w);
    const auto units = make_units(z.steps(), pairs);
    ModelState total = zeros_like(ModelState{z, params});

    std::vector<UnitGrad> chunk(kChunk);
    for (std::size_t start = 0; start < units.size(); start += kChunk) {
        const std::size_t count = std::min(kChunk, units.size() - start);
        if (exec == Execution::parallel) {
            const auto c = static_cast<long>(count);
#pragma omp parallel for schedule(dynamic, 1) if (count > 1)
            for (long k = 0; k < c; ++k)
                chunk[static_cast<std::size_t>(k)] =
                    unit_gradient(units[start + static_cast<std::size_t>(k)], x, z, params, relations, variant, w);
        } else {
            for (std::size_t k = 0; k < count; ++k)
                chunk[k] = unit_gradient(units[start + k], x, z, params, relations, variant, w);
        }
        for (std::size_t k = 0; k < count; ++k) merge(total, chunk[k], units[start + k].t);
    }

    if (w.gamma != 0.0 && params.gammas && uses_gamma(variant)) {
        for (std::size_t r = 0; r < params.gammas->size(); ++r) {
            auto src = (*params.gammas)[r].data();
            auto dst = (*total.params.gammas)[r].data();
            for (std::size_t k = 0; k < src.size(); ++k) {
                const double sgn = src[k] > 0.0 ? 1.0 : (src[k] < 0.0 ? -1.0 : 0.0);
                dst[k] += w.gamma * sgn;
            }
        }
    }
    return total;
}

}  // namespace stnn
