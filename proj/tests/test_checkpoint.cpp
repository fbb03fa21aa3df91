#include <doctest.h>

#include "oracles.hpp"
#include "stnn/checkpoint.hpp"
#include "stnn/error.hpp"
#include "stnn/synthetic.hpp"

using namespace stnn;

namespace {

bool bitwise_equal(const ModelState& a, const ModelState& b) {
    const auto x = blocks(a), y = blocks(b);
    if (x.size() != y.size()) return false;
    for (std::size_t k = 0; k < x.size(); ++k)
        if (!std::equal(x[k].begin(), x[k].end(), y[k].begin(), y[k].end())) return false;
    return true;
}

}  // namespace

TEST_CASE("checkpoint round trip is exact") {
    const auto dir = oracle::scratch("ckpt");
    Rng rng(1);
    for (auto v : {Variant::stnn, Variant::stnn_r, Variant::stnn_d, Variant::stnn_gate}) {
        const auto rel = oracle::random_relations(4, 2, rng);
        Checkpoint ck;
        ck.variant = v;
        ck.state = oracle::random_state(4, 2, 3, 5, rel, v, rng);
        ck.relations = rel;
        ck.norm = NormalizationRecord{{0.1, -2, 3, 4, 5, 6, 7, 8}, {1, 2, 3, 9, 10, 11, 12, 13}};
        ck.lambda = 0.3;
        ck.gamma = 0.01;
        ck.seed = 123456789012345ULL;
        save_checkpoint(dir / "c.json", ck);
        const auto back = load_checkpoint(dir / "c.json");
        CHECK(back.variant == v);
        CHECK(bitwise_equal(back.state, ck.state));
        REQUIRE(back.relations.size() == 2);
        CHECK(back.relations[1].weights == rel[1].weights);
        CHECK(back.relations[1].label == rel[1].label);
        REQUIRE(back.norm.has_value());
        CHECK(back.norm->min == ck.norm->min);
        CHECK(back.seed == ck.seed);
        CHECK(back.lambda == 0.3);
        // saving again gives the same bytes
        save_checkpoint(dir / "d.json", back);
        CHECK(oracle::slurp(dir / "c.json") == oracle::slurp(dir / "d.json"));
    }
}

TEST_CASE("malformed checkpoints are rejected") {
    const auto dir = oracle::scratch("ckpt_bad");
    oracle::write_text(dir / "a.json", "{not json");
    CHECK_THROWS_AS((void)load_checkpoint(dir / "a.json"), ValidationError);
    oracle::write_text(dir / "b.json", "{\"format\": \"other\"}");
    CHECK_THROWS_AS((void)load_checkpoint(dir / "b.json"), ValidationError);
    CHECK_THROWS_AS((void)load_checkpoint(dir / "missing.json"), IoError);
}

TEST_CASE("ground truth round trip") {
    const auto dir = oracle::scratch("truth");
    SyntheticSpec s;
    s.kind = SyntheticKind::teacher_stnn;
    s.grid_rows = 2;
    s.grid_cols = 2;
    s.T = 8;
    const auto d = generate_synthetic(s);
    save_ground_truth(dir / "g.json", d.truth);
    const auto back = load_ground_truth(dir / "g.json");
    CHECK(back.adjacency_matrix() == d.truth.adjacency_matrix());
    REQUIRE(back.teacher.has_value());
    CHECK(back.teacher->theta0 == d.truth.teacher->theta0);
    REQUIRE(back.latent.has_value());
    CHECK(back.latent->z[7] == d.truth.latent->z[7]);
    const auto j = read_json_file(dir / "g.json");
    CHECK(j.contains("adjacency"));
    CHECK(j.contains("kind"));
    CHECK(j.contains("seed"));
}

TEST_CASE("latent csv uses the series layout") {
    const auto dir = oracle::scratch("latent");
    LatentState z{{Matrix{{1, 2}, {3, 4}}, Matrix{{5, 6}, {7, 8}}, Matrix{{9, 10}, {11, 12}}}};
    save_latent_csv(dir / "z.csv", z);
    const auto text = oracle::slurp(dir / "z.csv");
    CHECK(text == "1,2,3,4\n5,6,7,8\n9,10,11,12\n");
}
