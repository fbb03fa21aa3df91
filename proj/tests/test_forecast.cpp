#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "stnn/error.hpp"
#include "stnn/forecast.hpp"
#include "stnn/synthetic.hpp"

using namespace stnn;

TEST_CASE("one-step forecast is decode of one dynamics step") {
    Rng rng(1);
    for (auto v : {Variant::stnn, Variant::stnn_r, Variant::stnn_d, Variant::stnn_gate}) {
        const auto rel = oracle::random_relations(4, 2, rng);
        const auto s = oracle::random_state(4, 2, 3, 6, rel, v, rng);
        const auto f = forecast(s, rel, v, 1);
        REQUIRE(f.steps() == 1);
        const Matrix expect = decode(dynamics_step(s.latent.z.back(), s.params, rel, v), s.params);
        CHECK(max_abs_diff(f.frame(0), expect) == 0.0);
    }
}

TEST_CASE("zero model forecasts its bias") {
    Rng rng(2);
    const auto rel = oracle::random_relations(3, 1, rng);
    auto s = oracle::random_state(3, 2, 2, 4, rel, Variant::stnn, rng);
    s.params.theta0 = Matrix(2, 2);
    s.params.thetas[0] = Matrix(2, 2);
    s.params.decoder_bias = {0.3, -0.7};
    const auto f = forecast(s, rel, Variant::stnn, 5);
    for (std::size_t t = 0; t < 5; ++t)
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(f.at(t, i, 0) == doctest::Approx(0.3).epsilon(1e-15));
            CHECK(f.at(t, i, 1) == doctest::Approx(-0.7).epsilon(1e-15));
        }
    CHECK_THROWS_AS((void)forecast(s, rel, Variant::stnn, 0), ArgumentError);
}

TEST_CASE("exact teacher reproduces the generator's continuation") {
    SyntheticSpec spec;
    spec.kind = SyntheticKind::teacher_stnn;
    spec.grid_rows = 3;
    spec.grid_cols = 4;
    spec.N = 3;
    spec.m = 2;
    spec.noise_std = 0.0;
    spec.seed = 9;
    spec.T = 65;
    const auto full = generate_synthetic(spec);
    spec.T = 60;
    const auto head = generate_synthetic(spec);
    RelationSet rel(12);
    rel.add({"adjacency", row_normalize(head.relations[0].weights), Provenance::normalized_raw});
    ModelState student{*head.truth.latent, *head.truth.teacher};
    const auto f = forecast(student, rel, Variant::stnn, 5);
    for (std::size_t h = 0; h < 5; ++h)
        for (std::size_t c = 0; c < f.columns(); ++c) CHECK(std::abs(f.col(h, c) - full.series.col(60 + h, c)) <= 1e-10);
}

TEST_CASE("rollout is a semigroup") {
    Rng rng(3);
    const auto rel = oracle::random_relations(5, 2, rng);
    const auto s = oracle::random_state(5, 1, 3, 4, rel, Variant::stnn_r, rng);
    const auto long_run = rollout(s.latent.z.back(), s.params, rel, Variant::stnn_r, 7);
    const auto first = rollout(s.latent.z.back(), s.params, rel, Variant::stnn_r, 3);
    const auto rest = rollout(first.back(), s.params, rel, Variant::stnn_r, 4);
    for (std::size_t k = 0; k < 4; ++k) CHECK(long_run[3 + k] == rest[k]);
}

TEST_CASE("rmse definition") {
    SeriesTensor truth(2, 2, 1, std::vector<double>{0, 0, 0, 0});
    SeriesTensor pred(2, 2, 1, std::vector<double>{3, 4, 1, 1});
    const auto r = rmse(pred, truth);
    CHECK(r.per_horizon[0] == doctest::Approx(std::sqrt(12.5)));
    CHECK(r.per_horizon[1] == doctest::Approx(1.0));
    CHECK(r.overall == doctest::Approx((std::sqrt(12.5) + 1.0) / 2));
    CHECK_THROWS_AS((void)rmse(pred, SeriesTensor(3, 2, 1)), ShapeError);
}

TEST_CASE("rmse is invariant to series permutation and local to the perturbed horizon") {
    Rng rng(4);
    const auto a = oracle::random_series(5, 6, 2, rng), b = oracle::random_series(5, 6, 2, rng);
    const std::vector<std::size_t> perm{5, 3, 1, 0, 2, 4};
    SeriesTensor pa(5, 6, 2), pb(5, 6, 2);
    for (std::size_t t = 0; t < 5; ++t) {
        pa.set_frame(t, permute_rows(a.frame(t), perm));
        pb.set_frame(t, permute_rows(b.frame(t), perm));
    }
    const auto r0 = rmse(a, b), r1 = rmse(pa, pb);
    for (std::size_t h = 0; h < 5; ++h) CHECK(r1.per_horizon[h] == doctest::Approx(r0.per_horizon[h]).epsilon(1e-14));

    auto shifted = a;
    shifted.at(2, 4, 1) += 0.3;
    const auto r2 = rmse(shifted, b);
    for (std::size_t h = 0; h < 5; ++h) {
        if (h == 2) {
            double se = 0.0;
            for (std::size_t c = 0; c < 12; ++c) {
                const double e = shifted.col(2, c) - b.col(2, c);
                se += e * e;
            }
            CHECK(r2.per_horizon[h] == doctest::Approx(std::sqrt(se / 12)));
        } else {
            CHECK(r2.per_horizon[h] == r0.per_horizon[h]);
        }
    }
}

TEST_CASE("mean baseline") {
    SeriesTensor train(3, 2, 1, std::vector<double>{1, 10, 2, 20, 6, 30});
    const auto f = mean_baseline(train, 4);
    REQUIRE(f.steps() == 4);
    for (std::size_t t = 0; t < 4; ++t) {
        CHECK(f.col(t, 0) == doctest::Approx(3.0));
        CHECK(f.col(t, 1) == doctest::Approx(20.0));
    }
}

TEST_CASE("AR(2) recovers its coefficients") {
    Rng rng(5);
    std::vector<double> x{0.1, 0.2};
    for (int t = 2; t < 20000; ++t)
        x.push_back(0.5 + 0.6 * x[t - 1] - 0.3 * x[t - 2] + rng.normal(0.0, 0.1));
    const auto fit = ar_fit(x, {2, true});
    REQUIRE(fit.coefficients.size() == 2);
    CHECK(fit.coefficients[0] == doctest::Approx(0.6).epsilon(0.03));
    CHECK(fit.coefficients[1] == doctest::Approx(-0.3).epsilon(0.05));
    CHECK(fit.intercept == doctest::Approx(0.5).epsilon(0.05));
    CHECK_THROWS_AS((void)ar_fit(std::vector<double>{1, 2, 3}, {2, true}), ArgumentError);
}

TEST_CASE("AR forecasts are recursive per column") {
    Rng rng(6);
    const auto train = oracle::random_series(40, 3, 2, rng);
    const ArConfig cfg{3, true};
    const auto pred = ar_fit_predict(train, cfg, 4);
    for (std::size_t c = 0; c < train.columns(); ++c) {
        std::vector<double> hist;
        for (std::size_t t = 0; t < 40; ++t) hist.push_back(train.col(t, c));
        const auto fit = ar_fit(hist, cfg);
        for (std::size_t h = 0; h < 4; ++h) {
            double y = fit.intercept;
            for (std::size_t k = 0; k < 3; ++k) y += fit.coefficients[k] * hist[hist.size() - 1 - k];
            hist.push_back(y);
            CHECK(pred.col(h, c) == doctest::Approx(y).epsilon(1e-12));
        }
    }
}
