#include "stnn/synthetic.hpp"

#include <cmath>

#include "stnn/error.hpp"

namespace stnn {

std::string to_string(SyntheticKind k) {
    return k == SyntheticKind::teacher_stnn ? "teacher_stnn" : "grid_diffusion";
}

SyntheticKind parse_synthetic_kind(const std::string& s) {
    if (s == "teacher_stnn" || s == "teacher-stnn") return SyntheticKind::teacher_stnn;
    if (s == "grid_diffusion" || s == "grid-diffusion") return SyntheticKind::grid_diffusion;
    throw ConfigError("unknown synthetic kind '" + s + "'");
}

std::size_t SyntheticSpec::series_count() const {
    if (grid_rows > 0 || grid_cols > 0) return grid_rows * grid_cols;
    return n;
}

Matrix GroundTruth::adjacency_matrix() const {
    Matrix w(n, n);
    for (const auto& e : adjacency) w(e.i, e.j) += e.weight;
    return w;
}

namespace {

Matrix build_adjacency(const SyntheticSpec& spec) {
    const std::size_t n = spec.series_count();
    if (spec.grid_rows > 0 || spec.grid_cols > 0) {
        if (spec.grid_rows == 0 || spec.grid_cols == 0) throw ValidationError("grid needs both dimensions");
        if (spec.n != 0 && spec.n != n) throw ValidationError("grid dimensions inconsistent with n");
        if (!spec.edges.empty()) throw ValidationError("give either grid dimensions or an edge list, not both");
        return grid_adjacency(spec.grid_rows, spec.grid_cols);
    }
    Matrix w(n, n);
    for (const auto& e : spec.edges) {
        if (e.i >= n || e.j >= n) throw ValidationError("edge index out of range");
        if (e.weight < 0.0) throw ValidationError("negative edge weight");
        w(e.i, e.j) += e.weight;
    }
    return w;
}

// Gram-Schmidt on a Gaussian matrix.
Matrix random_orthogonal(std::size_t N, Rng& rng) {
    Matrix q(N, N);
    for (auto& v : q.data()) v = rng.normal();
    for (std::size_t c = 0; c < N; ++c) {
        for (std::size_t p = 0; p < c; ++p) {
            double dot = 0.0;
            for (std::size_t r = 0; r < N; ++r) dot += q(r, c) * q(r, p);
            for (std::size_t r = 0; r < N; ++r) q(r, c) -= dot * q(r, p);
        }
        double norm = 0.0;
        for (std::size_t r = 0; r < N; ++r) norm += q(r, c) * q(r, c);
        norm = std::sqrt(norm);
        for (std::size_t r = 0; r < N; ++r) q(r, c) /= norm;
    }
    return q;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    const std::size_t n = spec.series_count();
    if (n == 0 || spec.m == 0 || spec.T == 0) throw ValidationError("synthetic spec needs positive n, m and T");
    if (spec.noise_std < 0.0) throw ValidationError("noise std must be non-negative");
    const Matrix adj = build_adjacency(spec);
    const Matrix mix = row_normalize(adj);

    Rng rng = Rng(spec.seed).split(streams::kSynthetic);
    SyntheticData out;
    out.relations = RelationSet(n);
    out.relations.add({"adjacency", adj, Provenance::raw});
    out.truth.kind = spec.kind;
    out.truth.seed = spec.seed;
    out.truth.n = n;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (adj(i, j) != 0.0) out.truth.adjacency.push_back({i, j, adj(i, j)});

    SeriesTensor x(spec.T, n, spec.m);
    if (spec.kind == SyntheticKind::grid_diffusion) {
        if (!(spec.alpha >= 0.0 && spec.alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
        Matrix state(n, spec.m);
        if (spec.initial_state) {
            if (spec.initial_state->size() != n * spec.m) throw ValidationError("initial state needs n*m values");
            state = Matrix(n, spec.m, *spec.initial_state);
        } else {
            for (auto& v : state.data()) v = rng.uniform();
        }
        x.set_frame(0, state);
        for (std::size_t t = 1; t < spec.T; ++t) {
            Matrix next = state * (1.0 - spec.alpha) + matmul(mix, state) * spec.alpha;
            if (spec.noise_std > 0.0)
                for (auto& v : next.data()) v += spec.noise_std * rng.normal();
            state = std::move(next);
            x.set_frame(t, state);
        }
    } else {
        const std::size_t N = spec.N;
        if (N == 0) throw ValidationError("teacher latent dimension must be positive");
        RelationSet rel(n);
        rel.add({"adjacency", mix, Provenance::normalized_raw});
        StnnParameters p;
        p.theta0 = random_orthogonal(N, rng) * spec.teacher_gain;
        p.thetas.push_back(Matrix(N, N));
        for (auto& v : p.thetas[0].data()) v = rng.normal(0.0, spec.teacher_coupling / std::sqrt(double(N)));
        p.decoder_weight = Matrix(N, spec.m);
        for (auto& v : p.decoder_weight.data()) v = rng.normal(0.0, 1.0 / std::sqrt(double(N)));
        p.decoder_bias.assign(spec.m, 0.0);

        LatentState z;
        Matrix zt(n, N);
        for (auto& v : zt.data()) v = rng.normal(0.0, 0.5);
        z.z.push_back(zt);
        for (std::size_t t = 1; t < spec.T; ++t) z.z.push_back(dynamics_step(z.z.back(), p, rel, Variant::stnn));
        for (std::size_t t = 0; t < spec.T; ++t) {
            Matrix obs = decode(z.z[t], p);
            if (spec.noise_std > 0.0)
                for (auto& v : obs.data()) v += spec.noise_std * rng.normal();
            x.set_frame(t, obs);
        }
        out.truth.teacher = std::move(p);
        out.truth.latent = std::move(z);
    }
    out.series = std::move(x);
    return out;
}

}  // namespace stnn
