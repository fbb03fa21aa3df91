// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Instances and hyperparameters are fixed here and documented in the
// README.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "stnn/checkpoint.hpp"
#include "stnn/cli.hpp"
#include "stnn/evaluation.hpp"
#include "stnn/forecast.hpp"
#include "stnn/kernels.hpp"
#include "stnn/synthetic.hpp"
#include "stnn/training.hpp"

using namespace stnn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(const std::string& name, double budget_seconds, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (budget_seconds > 0 && secs > budget_seconds) {
        o.pass = false;
        o.detail += "; over time budget";
    }
    char timing[64];
    std::snprintf(timing, sizeof timing, "%.1fs", secs);
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << " | " << o.detail << " | " << timing << std::endl;
    if (!o.pass) ++failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// ---- shared benchmark instances -------------------------------------------

SyntheticData teacher_data() {
    SyntheticSpec s;
    s.kind = SyntheticKind::teacher_stnn;
    s.grid_rows = 4;
    s.grid_cols = 5;
    s.N = 3;
    s.m = 1;
    s.T = 200;
    s.noise_std = 0.01;
    s.seed = 1;
    return generate_synthetic(s);
}

TrainingConfig teacher_training() {
    TrainingConfig t;
    t.variant = Variant::stnn;
    t.latent_dim = 3;
    t.lambda = 1.0;
    t.learning_rate = 0.5;
    t.momentum = 0.9;
    t.batch_pairs = 32;
    t.epochs = 500;
    t.clip_norm = 10.0;
    t.seed = 1;
    return t;
}

FoldPlan teacher_plan() { return plan_folds(200, 175, 5, 5); }

SyntheticData diffusion_data() {
    SyntheticSpec s;
    s.kind = SyntheticKind::grid_diffusion;
    s.grid_rows = 5;
    s.grid_cols = 5;
    s.T = 300;
    s.noise_std = 0.01;
    s.alpha = 0.8;
    s.seed = 1;
    return generate_synthetic(s);
}

TrainingConfig discovery_training(double gamma) {
    TrainingConfig t;
    t.variant = Variant::stnn_d;
    t.latent_dim = 1;
    t.lambda = 3.0;
    t.gamma = gamma;
    t.learning_rate = 0.5;
    t.epochs = 2000;
    t.seed = 1;
    return t;
}

ModelState train_discovery(const SyntheticData& d, double gamma) {
    const auto x = normalize(d.series, 0, d.series.steps()).series;
    return train(x, RelationSet::unconstrained(d.series.series(), 1), discovery_training(gamma)).state;
}

// ---- criteria ---------------------------------------------------------------

Outcome gradient_correctness() {
    const auto dir = oracle::scratch("acceptance_gradcheck");
    std::ostringstream out, err;
    const int code = cli::run({"gradcheck", "--out", dir.string()}, out, err);
    std::string detail;
    std::istringstream lines(out.str());
    for (std::string line; std::getline(lines, line);) {
        const auto cut = line.find(" worst=");
        detail += (detail.empty() ? "" : ", ") + line.substr(0, cut);
    }
    return {code == 0, detail + " (exit " + std::to_string(code) + ")"};
}

Outcome reductions() {
    Rng rng(2);
    double worst[4] = {0, 0, 0, 0};
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 3 + rng.index(6), N = 1 + rng.index(4);
        const auto rel = oracle::random_relations(n, 2, rng);
        const auto s = oracle::random_state(n, 1, N, 2, rel, Variant::stnn, rng);
        const Matrix& z = s.latent.z[0];
        const Matrix ref = dynamics_step(z, s.params, rel, Variant::stnn);

        auto pr = s.params;
        pr.gammas = std::vector<Matrix>(2, Matrix::ones(n, n));
        worst[0] = std::max(worst[0], max_abs_diff(dynamics_step(z, pr, rel, Variant::stnn_r), ref));

        auto pd = s.params;
        pd.gammas = std::vector<Matrix>{rel[0].weights, rel[1].weights};
        worst[1] = std::max(worst[1], max_abs_diff(dynamics_step(z, pd, rel, Variant::stnn_d), ref));

        // no relations: Z_{t+1} = tanh(Z_t Theta0)
        auto p0 = s.params;
        p0.thetas.clear();
        const Matrix plain = map_tanh(oracle::naive_matmul(z, p0.theta0));
        worst[2] = std::max(worst[2], max_abs_diff(dynamics_step(z, p0, RelationSet(n), Variant::stnn), plain));

        // one relation: tanh(Z Theta0 + W Z Theta1) written directly
        RelationSet one(n);
        one.add(rel[0]);
        auto p1 = s.params;
        p1.thetas.resize(1);
        Matrix pre = oracle::naive_matmul(z, p1.theta0);
        pre += oracle::naive_matmul(oracle::naive_matmul(rel[0].weights, z), p1.thetas[0]);
        worst[3] = std::max(worst[3], max_abs_diff(dynamics_step(z, p1, one, Variant::stnn), map_tanh(pre)));
    }
    const bool ok = worst[0] <= 1e-12 && worst[1] <= 1e-12 && worst[2] <= 1e-12 && worst[3] <= 1e-12;
    return {ok, "max |diff| stnn-r(G=1) " + fmt(worst[0]) + ", stnn-d(G=W) " + fmt(worst[1]) + ", no-relation " +
                    fmt(worst[2]) + ", single-relation " + fmt(worst[3])};
}

Outcome permutation_equivariance() {
    Rng rng(3);
    const std::size_t n = 8;
    const std::vector<std::size_t> perm{5, 2, 7, 0, 3, 6, 1, 4};
    double step_err = 0.0, forecast_err = 0.0;
    for (auto v : {Variant::stnn, Variant::stnn_r, Variant::stnn_d, Variant::stnn_gate}) {
        const auto rel = oracle::random_relations(n, 2, rng);
        RelationSet prel(n);
        for (const auto& r : rel) prel.add({r.label, permute_both(r.weights, perm), r.provenance});
        auto x = oracle::random_series(40, n, 2, rng);
        SeriesTensor px(40, n, 2);
        for (std::size_t t = 0; t < 40; ++t) px.set_frame(t, permute_rows(x.frame(t), perm));

        TrainingConfig cfg;
        cfg.variant = v;
        cfg.latent_dim = 3;
        cfg.epochs = 40;
        cfg.batch_pairs = 16;
        cfg.learning_rate = 0.1;
        cfg.gamma = uses_gamma(v) ? 0.001 : 0.0;
        const ModelState init = init_model(n, 2, 3, rel, v, 40, Rng(4));
        ModelState pinit = init;
        for (auto& zt : pinit.latent.z) zt = permute_rows(zt, perm);
        if (pinit.params.gammas)
            for (auto& g : *pinit.params.gammas) g = permute_both(g, perm);

        for (const auto& zt : init.latent.z) {
            const Matrix a = dynamics_step(permute_rows(zt, perm), pinit.params, prel, v);
            const Matrix b = permute_rows(dynamics_step(zt, init.params, rel, v), perm);
            step_err = std::max(step_err, max_abs_diff(a, b));
        }
        const auto fa = forecast(train(x, rel, cfg, init).state, rel, v, 5);
        const auto fb = forecast(train(px, prel, cfg, pinit).state, prel, v, 5);
        for (std::size_t h = 0; h < 5; ++h)
            forecast_err = std::max(forecast_err, max_abs_diff(permute_rows(fa.frame(h), perm), fb.frame(h)));
    }
    return {step_err <= 1e-10 && forecast_err <= 1e-10,
            "dynamics_step " + fmt(step_err) + ", trained forecasts " + fmt(forecast_err)};
}

Outcome teacher_student() {
    kernels::set_threads(1);
    const auto d = teacher_data();
    const auto base = teacher_training();
    std::vector<ModelSpec> models{parse_model_spec("mean", base, 2), parse_model_spec("ar", base, 2),
                                  parse_model_spec("stnn", base, 2)};
    const auto rel = relations_for_powers(d.relations, 20, 1, Variant::stnn);
    const auto rep = evaluate(d.series, rel, teacher_plan(), models, {1, false});
    const double mean = rep.models[0].mean_rmse, ar = rep.models[1].mean_rmse, st = rep.models[2].mean_rmse;
    const bool ok = st < ar && ar < mean && st <= 0.6 * mean;
    return {ok, "RMSE stnn " + fmt(st) + ", ar " + fmt(ar) + ", mean " + fmt(mean) + " (stnn/mean " +
                    fmt(st / mean) + ")"};
}

Outcome lambda_sensitivity() {
    const auto d = teacher_data();
    ModelSpec family{"stnn", ModelKind::stnn, {}, teacher_training()};
    GridAxes axes{{3}, {0.0001, 0.001, 0.01, 0.1, 1, 10, 100}, {0.0}, {1}};
    const auto g = grid_search(d.series, d.relations, teacher_plan(), family, axes);
    std::string curve;
    std::size_t arg = 0;
    for (std::size_t k = 0; k < g.rows.size(); ++k) {
        curve += (k ? ", " : "") + fmt(g.rows[k].point.lambda) + ":" + fmt(g.rows[k].mean_rmse);
        if (g.rows[k].mean_rmse < g.rows[arg].mean_rmse) arg = k;
    }
    const bool interior = arg > 0 && arg + 1 < g.rows.size() && std::isfinite(g.rows[arg].mean_rmse);
    return {interior, "best lambda " + fmt(g.rows[arg].point.lambda) + "; " + curve};
}

Outcome structure_discovery() {
    const auto d = diffusion_data();
    const auto state = train_discovery(d, 0.0);
    const Matrix truth = d.truth.adjacency_matrix();
    const std::size_t n = truth.rows();
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double score = 0.0;
            for (const auto& g : *state.params.gammas) score += std::abs(g(i, j));
            (truth(i, j) > 0 ? pos : neg).push_back(score);
        }
    const double auc = oracle::auc(pos, neg);
    return {auc > 0.8, "AUC " + fmt(auc) + " over " + std::to_string(n * n) + " pairs"};
}

double sparse_fraction(const ModelState& s) {
    std::size_t small = 0, total = 0;
    for (const auto& g : *s.params.gammas)
        for (double v : g.data()) {
            small += std::abs(v) < 1e-3;
            ++total;
        }
    return static_cast<double>(small) / static_cast<double>(total);
}

Outcome sparsity(const std::vector<double>& gammas) {
    const auto d = diffusion_data();
    std::vector<double> frac;
    std::string detail;
    for (double g : gammas) {
        frac.push_back(sparse_fraction(train_discovery(d, g)));
        detail += (detail.empty() ? "" : ", ") + fmt(g) + ":" + fmt(frac.back());
    }
    bool ok = true;
    for (std::size_t k = 1; k < frac.size(); ++k) ok = ok && frac[k] >= frac[k - 1];
    return {ok, "fraction |G|<1e-3 by gamma " + detail};
}

Outcome fold_arithmetic() {
    const auto p = plan_folds(520, 104, 5, 50);
    bool ok = p.stride == 8 && p.folds.size() == 50;
    for (const auto& f : p.folds)
        ok = ok && f.train_end - f.train_begin == 104 && f.test_end - f.train_end == 5 && f.test_end <= 520;
    return {ok, "stride " + std::to_string(p.stride) + ", " + std::to_string(p.folds.size()) + " folds, last test end " +
                    std::to_string(p.folds.back().test_end)};
}

// Runs a command, snapshots its output directory, replays the manifest in
// place and compares every file byte for byte.
bool replay_identical(const std::vector<std::string>& args, const fs::path& out, std::string& why) {
    std::ostringstream o, e;
    auto full = args;
    full.push_back("--out");
    full.push_back(out.string());
    if (cli::run(full, o, e) != 0) {
        why = "command failed: " + e.str();
        return false;
    }
    std::vector<std::pair<fs::path, std::string>> before;
    for (const auto& entry : fs::directory_iterator(out)) before.emplace_back(entry.path(), oracle::slurp(entry.path()));
    if (cli::run({"replay", (out / "manifest.json").string()}, o, e) != 0) {
        why = "replay failed: " + e.str();
        return false;
    }
    for (const auto& [path, bytes] : before)
        if (oracle::slurp(path) != bytes) {
            why = path.filename().string() + " differs";
            return false;
        }
    return true;
}

Outcome reproducibility() {
    const auto dir = oracle::scratch("acceptance_replay");
    const auto data = dir / "generate";
    std::string why;
    std::vector<std::string> checked;
    auto check = [&](const std::string& name, const std::vector<std::string>& args) {
        if (!why.empty()) return;
        if (replay_identical(args, dir / name, why)) checked.push_back(name);
        else why = name + ": " + why;
    };
    const std::string series = (data / "series.csv").string(), rel = (data / "relations.csv").string();
    check("generate", {"generate", "--kind", "teacher_stnn", "--grid-rows", "3", "--grid-cols", "3", "--length", "60",
                       "--latent-dim", "3", "--seed", "5"});
    check("train", {"train", "--series", series, "--relations", rel, "--variant", "stnn-r", "--latent-dim", "3",
                    "--epochs", "20", "--gamma", "0.001", "--lr", "0.2", "--seed", "2"});
    const std::string ckpt = (dir / "train" / "checkpoint.json").string();
    check("forecast", {"forecast", "--checkpoint", ckpt, "--horizon", "5"});
    check("discover", {"discover", "--checkpoint", ckpt});
    check("evaluate", {"evaluate", "--series", series, "--relations", rel, "--models", "mean,ar,stnn,stnn-d",
                       "--train-window", "40", "--folds", "3", "--latent-dim", "3", "--epochs", "10",
                       "--repetitions", "2"});
    check("grid", {"grid", "--series", series, "--relations", rel, "--train-window", "40", "--folds", "2",
                   "--epochs", "10", "--grid-latent", "2,3", "--grid-lambda", "0.1,1", "--grid-powers", "1,2"});
    check("gradcheck", {"gradcheck"});
    std::string detail = "byte-identical after replay:";
    for (const auto& c : checked) detail += " " + c;
    if (!why.empty()) detail += "; " + why;
    return {why.empty(), detail};
}

}  // namespace

int main() {
    std::cout << "acceptance suite (" << kernels::max_threads() << " threads available)\n";
    criterion("1 gradient correctness (all variants < 1e-5, < 60 s)", 60, gradient_correctness);
    criterion("2 reduction equivalences (100 instances, <= 1e-12, < 30 s)", 30, reductions);
    criterion("3 permutation equivariance (<= 1e-10)", 0, permutation_equivariance);
    criterion("4 teacher-student forecasting (stnn < ar < mean, stnn <= 0.6 mean, < 10 min)", 600, teacher_student);
    kernels::set_threads(0);
    criterion("5 lambda sensitivity (interior minimum)", 0, lambda_sensitivity);
    criterion("6 structure discovery (AUC > 0.8, < 5 min)", 300, structure_discovery);
    criterion("7 sparsity monotone in gamma {0.001, 0.01, 0.1, 1}", 0,
              [] { return sparsity({0.001, 0.01, 0.1, 1.0}); });
    criterion("7b sparsity monotone in gamma {1e-6, 1e-5, 1e-4, 1e-3} (supplementary)", 0,
              [] { return sparsity({1e-6, 1e-5, 1e-4, 1e-3}); });
    criterion("8 fold arithmetic plan_folds(520, 104, 5, 50)", 0, fold_arithmetic);
    criterion("9 reproducibility from manifests", 0, reproducibility);
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << '\n';
    return failures == 0 ? 0 : 1;
}
