#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "stnn/error.hpp"
#include "stnn/synthetic.hpp"
#include "stnn/training.hpp"

using namespace stnn;

namespace {

bool bitwise_equal(const ModelState& a, const ModelState& b) {
    const auto x = blocks(a), y = blocks(b);
    if (x.size() != y.size()) return false;
    for (std::size_t k = 0; k < x.size(); ++k)
        if (!std::equal(x[k].begin(), x[k].end(), y[k].begin(), y[k].end())) return false;
    return true;
}

SyntheticData teacher_instance() {
    SyntheticSpec s;
    s.kind = SyntheticKind::teacher_stnn;
    s.grid_rows = 4;
    s.grid_cols = 5;
    s.N = 3;
    s.T = 200;
    s.noise_std = 0.01;
    s.seed = 1;
    return generate_synthetic(s);
}

}  // namespace

TEST_CASE("sample_pairs") {
    Rng a(3);
    for (auto t : sample_pairs(2, 50, a)) CHECK(t == 0u);
    Rng b(8), c(8);
    CHECK(sample_pairs(40, 100, b) == sample_pairs(40, 100, c));
    CHECK_THROWS_AS((void)sample_pairs(1, 4, b), ArgumentError);

    // T = 11 gives 10 equally likely pairs; each count must sit within 3 sigma
    Rng r(2024);
    const std::size_t draws = 100000;
    std::vector<std::size_t> counts(10, 0);
    for (auto t : sample_pairs(11, draws, r)) ++counts.at(t);
    const double mean = draws / 10.0, sd = std::sqrt(draws * 0.1 * 0.9);
    for (auto k : counts) CHECK(std::abs(double(k) - mean) <= 3 * sd);
}

TEST_CASE("nag_step reductions") {
    std::vector<double> x{1.0, -2.0}, g{0.5, 0.25}, v{0.0, 0.0};
    nag_step(x, g, v, 0.1, 0.0);
    CHECK(x[0] == 1.0 - 0.1 * 0.5);
    CHECK(x[1] == -2.0 - 0.1 * 0.25);

    std::vector<double> y{0.0}, zero{0.0}, vel{1.0};
    nag_step(y, zero, vel, 0.1, 0.5);
    CHECK(vel[0] == 0.5);
    CHECK(y[0] == 0.5);
    nag_step(y, zero, vel, 0.1, 0.5);
    CHECK(vel[0] == 0.25);
    CHECK(y[0] == 0.75);
}

TEST_CASE("NAG on x^2 follows the scalar recursion") {
    // hand-rolled: gradient taken at the look-ahead point x + mu v
    double xo = 1.0, vo = 0.0;
    const double lr = 0.1, mu = 0.9;
    std::vector<double> x{1.0}, v{0.0};
    for (int k = 0; k < 20; ++k) {
        const double ahead = xo + mu * vo;
        vo = mu * vo - lr * 2.0 * ahead;
        xo += vo;

        const std::vector<double> g{2.0 * (x[0] + mu * v[0])};
        nag_step(x, g, v, lr, mu);
        CHECK(std::abs(x[0] - xo) <= 1e-12);
    }
}

TEST_CASE("zero epochs returns the initialization") {
    Rng rng(1);
    const auto rel = oracle::random_relations(4, 1, rng);
    const auto x = oracle::random_series(10, 4, 1, rng);
    TrainingConfig cfg;
    cfg.epochs = 0;
    cfg.latent_dim = 3;
    cfg.seed = 5;
    const auto res = train(x, rel, cfg);
    CHECK(res.trace.epochs.empty());
    const auto init = init_model(4, 1, 3, rel, Variant::stnn, 10, Rng(5).split(streams::kInit));
    CHECK(bitwise_equal(res.state, init));
}

TEST_CASE("training is deterministic and execution independent") {
    Rng rng(2);
    const auto rel = oracle::random_relations(6, 2, rng);
    const auto x = oracle::random_series(40, 6, 1, rng);
    for (auto v : {Variant::stnn_r, Variant::stnn_gate}) {
        TrainingConfig cfg;
        cfg.variant = v;
        cfg.latent_dim = 3;
        cfg.epochs = 15;
        cfg.batch_pairs = 20;
        cfg.seed = 9;
        cfg.gamma = 0.001;
        const auto a = train(x, rel, cfg);
        const auto b = train(x, rel, cfg);
        CHECK(bitwise_equal(a.state, b.state));
        cfg.execution = Execution::serial;
        const auto c = train(x, rel, cfg);
        CHECK(bitwise_equal(a.state, c.state));
        REQUIRE(a.trace.epochs.size() == 15);
        CHECK(a.trace.epochs.back().loss.total == c.trace.epochs.back().loss.total);
    }
}

TEST_CASE("training reduces the loss on teacher data") {
    const auto d = teacher_instance();
    const auto nx = normalize(d.series, 0, d.series.steps());
    RelationSet rel(20);
    rel.add({"adjacency", row_normalize(d.relations[0].weights), Provenance::normalized_raw});
    TrainingConfig cfg;
    cfg.latent_dim = 3;
    cfg.seed = 1;
    const auto init = init_model(20, 1, 3, rel, Variant::stnn, 200, Rng(1).split(streams::kInit));
    const double initial = loss(nx.series, init.latent, init.params, rel, Variant::stnn, {1.0, 0.0}).total;
    const auto res = train(nx.series, rel, cfg);
    const auto& ep = res.trace.epochs;
    REQUIRE(ep.size() == cfg.epochs);
    CHECK(ep.back().loss.total < 0.25 * initial);
    // epoch-end loss never rises across a 10-epoch span once past epoch 5
    for (std::size_t e = 5; e + 10 < ep.size(); ++e) {
        INFO("epoch " << ep[e].epoch);
        CHECK(ep[e + 10].loss.total <= ep[e].loss.total);
    }
}

TEST_CASE("divergence is reported with its epoch") {
    Rng rng(4);
    const auto rel = oracle::random_relations(5, 1, rng);
    SeriesTensor x(30, 5, 1);
    for (auto& v : x.values()) v = rng.normal(0.0, 1e3);
    TrainingConfig cfg;
    cfg.latent_dim = 2;
    cfg.learning_rate = 1e6;
    cfg.epochs = 50;
    try {
        (void)train(x, rel, cfg);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.epoch() >= 1u);
        CHECK(e.epoch() <= 50u);
    }
}

TEST_CASE("L1 pulls relation weights toward zero") {
    // At a perfect fit the smooth gradient vanishes and only gamma * sign remains.
    Rng rng(6);
    const auto rel = oracle::random_relations(3, 1, rng);
    auto s = oracle::random_state(3, 1, 2, 4, rel, Variant::stnn_d, rng);
    for (std::size_t t = 0; t + 1 < 4; ++t)
        s.latent.z[t + 1] = dynamics_step(s.latent.z[t], s.params, rel, Variant::stnn_d);
    SeriesTensor x(4, 3, 1);
    for (std::size_t t = 0; t < 4; ++t) x.set_frame(t, decode(s.latent.z[t], s.params));
    const double gamma = 0.2, lr = 0.05;
    const auto g = gradients(x, s.latent, s.params, rel, Variant::stnn_d, {1.0, gamma});
    auto next = s;
    auto vel = zeros_like(s);
    nag_step(next, g, vel, lr, 0.9);
    const auto& before = (*s.params.gammas)[0];
    const auto& after = (*next.params.gammas)[0];
    for (std::size_t k = 0; k < before.size(); ++k) {
        const double sgn = before.data()[k] > 0 ? 1.0 : -1.0;
        CHECK(after.data()[k] - before.data()[k] == doctest::Approx(-sgn * gamma * lr).epsilon(1e-9));
    }
}

TEST_CASE("orthant-wise L1 produces exact zeros") {
    Rng rng(7);
    const auto x = oracle::random_series(30, 5, 1, rng);
    const auto rel = RelationSet::unconstrained(5, 1);
    TrainingConfig cfg;
    cfg.variant = Variant::stnn_d;
    cfg.latent_dim = 2;
    cfg.epochs = 60;
    cfg.gamma = 0.5;
    cfg.learning_rate = 0.05;
    const auto a = train(x, rel, cfg);
    for (double v : (*a.state.params.gammas)[0].data()) CHECK(v == 0.0);
    cfg.orthant_l1 = false;
    const auto b = train(x, rel, cfg);
    std::size_t zeros = 0;
    for (double v : (*b.state.params.gammas)[0].data()) zeros += v == 0.0;
    CHECK(zeros < 25u);
}

TEST_CASE("trace csv") {
    const auto dir = oracle::scratch("trace");
    TrainingTrace tr;
    tr.epochs.push_back({1, {0.5, 0.25, 0.0, 0.75}, 1.5, 0.123});
    tr.epochs.push_back({2, {0.25, 0.125, 0.0, 0.375}, 1.0, 0.2});
    write_trace_csv(dir / "a.csv", tr, false);
    CHECK(oracle::slurp(dir / "a.csv") ==
          "epoch,reconstruction,dynamics,l1,total,grad_norm,seconds\n1,0.5,0.25,0,0.75,1.5,0\n2,0.25,0.125,0,0.375,1,0\n");
    write_trace_csv(dir / "b.csv", tr, true);
    CHECK(oracle::slurp(dir / "b.csv").find("0.123") != std::string::npos);
}
