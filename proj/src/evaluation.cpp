#include "stnn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>

#include <json.hpp>

#include "stnn/csv.hpp"
#include "stnn/error.hpp"

namespace stnn {

FoldPlan plan_folds(std::size_t length, std::size_t train_window, std::size_t horizon, std::size_t folds) {
    if (train_window < 2 || horizon < 1) throw PlanningError("fold plan needs T' >= 2 and H >= 1");
    if (folds < 1) throw PlanningError("fold plan needs at least one fold");
    if (length < train_window + horizon) {
        throw PlanningError("series of length " + std::to_string(length) + " cannot hold T' + H = " +
                            std::to_string(train_window + horizon) + "; maximum feasible folds: 0");
    }
    const std::size_t slack = length - train_window - horizon;
    FoldPlan plan{length, train_window, horizon, 0, {}};
    if (folds > 1) {
        plan.stride = slack / (folds - 1);
        if (plan.stride == 0) {
            throw PlanningError("cannot place " + std::to_string(folds) + " distinct folds; maximum feasible folds: " +
                                std::to_string(slack + 1));
        }
    }
    for (std::size_t k = 0; k < folds; ++k) {
        const std::size_t start = k * plan.stride;
        plan.folds.push_back({start, start + train_window, start + train_window + horizon});
    }
    return plan;
}

ModelSpec parse_model_spec(const std::string& token, const TrainingConfig& base, std::size_t default_lags) {
    ModelSpec spec;
    spec.name = token;
    spec.training = base;
    spec.ar.lags = default_lags;
    if (token == "mean") {
        spec.kind = ModelKind::mean;
    } else if (token == "ar" || token.rfind("ar:", 0) == 0) {
        spec.kind = ModelKind::ar;
        if (token.size() > 3) {
            try {
                spec.ar.lags = std::stoul(token.substr(3));
            } catch (const std::exception&) {
                throw ConfigError("invalid AR lag count in '" + token + "'");
            }
        }
    } else {
        spec.kind = ModelKind::stnn;
        spec.training.variant = parse_variant(token);
    }
    return spec;
}

FoldData prepare_fold(const SeriesTensor& x, const Fold& fold) {
    const SeriesTensor train_raw = x.slice(fold.train_begin, fold.train_end);
    auto normalized = normalize(train_raw, 0, train_raw.steps());
    FoldData d;
    d.test = apply_normalization(x.slice(fold.train_end, fold.test_end), normalized.record);
    d.train = std::move(normalized.series);
    return d;
}

std::uint64_t fold_seed(std::uint64_t base, std::size_t fold, std::size_t repetition) {
    Rng r = Rng(base).split(0x1000 + fold).split(repetition);
    return r.next_u64();
}

TrainResult train_fold(const FoldData& data, const RelationSet& relations, const ModelSpec& spec,
                       std::uint64_t seed) {
    TrainingConfig cfg = spec.training;
    cfg.seed = seed;
    if (cfg.variant == Variant::stnn_d && relations.empty())
        return train(data.train, RelationSet::unconstrained(data.train.series(), 1), cfg);
    return train(data.train, relations, cfg);
}

namespace {

std::optional<std::vector<double>> run_cell(const FoldData& data, const RelationSet& relations,
                                            const ModelSpec& spec, std::size_t H, std::uint64_t seed) {
    SeriesTensor pred;
    switch (spec.kind) {
        case ModelKind::mean: pred = mean_baseline(data.train, H); break;
        case ModelKind::ar: pred = ar_fit_predict(data.train, spec.ar, H); break;
        case ModelKind::stnn: {
            try {
                const auto fit = train_fold(data, relations, spec, seed);
                const RelationSet& rel = (spec.training.variant == Variant::stnn_d && relations.empty())
                                             ? RelationSet::unconstrained(data.train.series(), 1)
                                             : relations;
                pred = forecast(fit.state, rel, spec.training.variant, H);
            } catch (const DivergenceError&) {
                return std::nullopt;
            }
            break;
        }
    }
    auto r = rmse(pred, data.test);
    for (double v : r.per_horizon)
        if (!std::isfinite(v)) return std::nullopt;
    return r.per_horizon;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(v.size());
}

}  // namespace

ScoreReport evaluate(const SeriesTensor& x, const RelationSet& relations, const FoldPlan& plan,
                     const std::vector<ModelSpec>& models, const EvaluateOptions& opts) {
    if (plan.folds.empty()) throw PlanningError("fold plan is empty");
    if (plan.folds.back().test_end > x.steps()) throw PlanningError("fold plan exceeds series length");
    const std::size_t F = plan.folds.size(), H = plan.horizon, M = models.size();
    const std::size_t reps = std::max<std::size_t>(1, opts.repetitions);

    std::vector<FoldData> data(F);
    for (std::size_t f = 0; f < F; ++f) data[f] = prepare_fold(x, plan.folds[f]);

    const std::size_t jobs = M * F * reps;
    std::vector<std::optional<std::vector<double>>> cells(jobs);
    const auto njobs = static_cast<long>(jobs);
#pragma omp parallel for schedule(dynamic, 1) if (opts.parallel_folds)
    for (long k = 0; k < njobs; ++k) {
        const auto job = static_cast<std::size_t>(k);
        const std::size_t m = job / (F * reps), f = (job / reps) % F, rep = job % reps;
        cells[job] = run_cell(data[f], relations, models[m], H,
                              fold_seed(models[m].training.seed, f, rep));
    }

    ScoreReport report;
    report.folds = F;
    report.horizon = H;
    report.repetitions = reps;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t m = 0; m < M; ++m) {
        ModelScores s;
        s.name = models[m].name;
        s.rmse.assign(F, std::vector<double>(H, nan));
        s.failed.assign(F, false);
        std::vector<std::vector<double>> per_rep_overall(reps);
        for (std::size_t f = 0; f < F; ++f) {
            std::vector<double> acc(H, 0.0);
            for (std::size_t rep = 0; rep < reps; ++rep) {
                const auto& cell = cells[(m * F + f) * reps + rep];
                if (!cell) {
                    s.failed[f] = true;
                    continue;
                }
                for (std::size_t h = 0; h < H; ++h) acc[h] += (*cell)[h];
                per_rep_overall[rep].push_back(mean_of(*cell));
            }
            if (!s.failed[f])
                for (std::size_t h = 0; h < H; ++h) s.rmse[f][h] = acc[h] / static_cast<double>(reps);
        }
        s.per_horizon.assign(H, 0.0);
        std::size_t ok = 0;
        for (std::size_t f = 0; f < F; ++f) {
            if (s.failed[f]) continue;
            ++ok;
            for (std::size_t h = 0; h < H; ++h) s.per_horizon[h] += s.rmse[f][h];
        }
        for (auto& v : s.per_horizon) v = ok ? v / static_cast<double>(ok) : nan;
        s.mean_rmse = mean_of(s.per_horizon);
        if (reps > 1) {
            std::vector<double> overall;
            for (const auto& r : per_rep_overall) overall.push_back(mean_of(r));
            const double mu = mean_of(overall);
            double var = 0.0;
            for (double v : overall) var += (v - mu) * (v - mu);
            s.std_across_seeds = std::sqrt(var / static_cast<double>(reps - 1));
        }
        report.models.push_back(std::move(s));
    }
    return report;
}

void write_report_csv(const std::filesystem::path& path, const ScoreReport& report) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "model,fold,horizon,rmse\n";
    for (const auto& m : report.models)
        for (std::size_t f = 0; f < report.folds; ++f)
            for (std::size_t h = 0; h < report.horizon; ++h)
                out << m.name << ',' << f << ',' << h + 1 << ',' << csv::format(m.rmse[f][h]) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

void write_report_json(const std::filesystem::path& path, const ScoreReport& report) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& m : report.models) {
        std::size_t failed = 0;
        for (bool b : m.failed) failed += b ? 1 : 0;
        j[m.name] = {{"mean_rmse", m.mean_rmse},
                     {"per_horizon", m.per_horizon},
                     {"std_across_seeds", m.std_across_seeds},
                     {"failed_folds", failed}};
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

RelationSet relations_for_powers(const RelationSet& base, std::size_t n, std::size_t K, Variant variant) {
    if (K < 1) throw ArgumentError("power count must be at least 1");
    if (base.empty()) {
        if (variant == Variant::stnn_d) return RelationSet::unconstrained(n, K);
        if (K != 1) throw ConfigError("powers requested but no relations were given");
        return RelationSet(n);
    }
    if (base.size() == 1) return build_powers(base[0].weights, K);
    if (K != 1) throw ConfigError("powers apply only to a single base relation");
    return row_normalize(base);
}

GridResult grid_search(const SeriesTensor& x, const RelationSet& base_relations, const FoldPlan& plan,
                       const ModelSpec& family, const GridAxes& axes, const EvaluateOptions& opts) {
    auto sorted = [](auto v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    };
    const auto Ns = sorted(axes.latent_dims.empty() ? std::vector<std::size_t>{family.training.latent_dim}
                                                    : axes.latent_dims);
    const auto lambdas = sorted(axes.lambdas.empty() ? std::vector<double>{family.training.lambda} : axes.lambdas);
    const auto gammas = sorted(axes.gammas.empty() ? std::vector<double>{family.training.gamma} : axes.gammas);
    const auto Ks = sorted(axes.powers.empty() ? std::vector<std::size_t>{1} : axes.powers);

    GridResult result;
    double best = std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t N : Ns) {
        for (double lambda : lambdas) {
            for (double gamma : gammas) {
                for (std::size_t K : Ks) {
                    ModelSpec spec = family;
                    spec.training.latent_dim = N;
                    spec.training.lambda = lambda;
                    spec.training.gamma = gamma;
                    const RelationSet rel = relations_for_powers(base_relations, x.series(), K, spec.training.variant);
                    auto report = evaluate(x, rel, plan, {spec}, opts);
                    const auto& scores = report.models.front();
                    // a configuration that fails on any fold cannot be selected
                    const bool any_failed = std::find(scores.failed.begin(), scores.failed.end(), true) !=
                                            scores.failed.end();
                    const double score =
                        any_failed ? std::numeric_limits<double>::infinity() : scores.mean_rmse;
                    const GridPoint point{N, lambda, gamma, K};
                    result.rows.push_back({point, score});
                    if (std::isfinite(score) && score < best) {
                        best = score;
                        found = true;
                        result.best = point;
                        result.best_report = std::move(report);
                    }
                }
            }
        }
    }
    if (!found) {
        result.best = result.rows.front().point;
    }
    return result;
}

void write_grid_csv(const std::filesystem::path& path, const GridResult& result) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "latent_dim,lambda,gamma,powers,mean_rmse\n";
    for (const auto& r : result.rows) {
        out << r.point.latent_dim << ',' << csv::format(r.point.lambda) << ',' << csv::format(r.point.gamma) << ','
            << r.point.powers << ',' << csv::format(r.mean_rmse) << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace stnn
