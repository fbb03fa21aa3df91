#include "stnn/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <CLI11.hpp>

#include "stnn/checkpoint.hpp"
#include "stnn/csv.hpp"
#include "stnn/error.hpp"
#include "stnn/evaluation.hpp"
#include "stnn/kernels.hpp"
#include "stnn/synthetic.hpp"
#include "stnn/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace stnn::cli {

#define STNN_CONFIG_FIELDS                                                                            \
    X(command) X(series) X(relations) X(checkpoint) X(out) X(variant) X(latent_dim) X(lambda) X(gamma) \
    X(powers) X(epochs) X(lr) X(momentum) X(batch) X(clip) X(seed) X(dim) X(relation_count)             \
    X(normalize) X(timing) X(horizon) X(folds) X(train_window) X(models) X(ar_lags) X(repetitions)      \
    X(grid_latent) X(grid_lambda) X(grid_gamma) X(grid_powers) X(kind) X(grid_rows) X(grid_cols)        \
    X(length) X(noise) X(alpha) X(teacher_gain) X(teacher_coupling) X(time_begin) X(time_end) X(threads)

void to_json(json& j, const RunConfig& c) {
    j = json::object();
#define X(f) j[#f] = c.f;
    STNN_CONFIG_FIELDS
#undef X
}

void from_json(const json& j, RunConfig& c) {
    static const std::set<std::string> known = {
#define X(f) #f,
        STNN_CONFIG_FIELDS
#undef X
    };
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw ConfigError("unknown configuration key '" + key + "'");
#define X(f) \
    if (j.contains(#f)) j.at(#f).get_to(c.f);
    STNN_CONFIG_FIELDS
#undef X
}

namespace {

TrainingConfig training_config(const RunConfig& c) {
    TrainingConfig t;
    t.variant = parse_variant(c.variant);
    t.latent_dim = c.latent_dim;
    t.lambda = c.lambda;
    t.gamma = c.gamma;
    t.learning_rate = c.lr;
    t.momentum = c.momentum;
    t.batch_pairs = c.batch;
    t.epochs = c.epochs;
    t.seed = c.seed;
    t.clip_norm = c.clip;
    return t;
}

void require(const std::string& value, const char* flag, const std::string& command) {
    if (value.empty()) throw ConfigError(command + " requires " + flag);
}

// Loads the prior for a variant, applying powers when requested.
RelationSet resolve_relations(const RunConfig& c, std::size_t n, Variant variant, std::ostream& err) {
    if (c.relations.empty()) {
        if (variant == Variant::stnn_d) return RelationSet::unconstrained(n, c.relation_count);
        throw ConfigError(to_string(variant) + " needs a relation prior (--relations)");
    }
    std::vector<std::string> warnings;
    RelationSet base = load_relations(c.relations, n, &warnings);
    for (const auto& w : warnings) err << "warning: " << w << '\n';
    return relations_for_powers(base, n, c.powers, variant);
}

int cmd_generate(const RunConfig& c, const fs::path& out, std::ostream& os) {
    SyntheticSpec s;
    s.kind = parse_synthetic_kind(c.kind);
    s.grid_rows = c.grid_rows;
    s.grid_cols = c.grid_cols;
    s.m = c.dim;
    s.N = c.latent_dim;
    s.T = c.length;
    s.noise_std = c.noise;
    s.seed = c.seed;
    s.alpha = c.alpha;
    s.teacher_gain = c.teacher_gain;
    s.teacher_coupling = c.teacher_coupling;
    const auto data = generate_synthetic(s);
    save_series(out / "series.csv", data.series);
    save_relations(out / "relations.csv", data.relations);
    save_ground_truth(out / "ground_truth.json", data.truth);
    os << "generated " << to_string(s.kind) << ": T=" << data.series.steps() << " n=" << data.series.series()
       << " m=" << data.series.dims() << " -> " << out.string() << '\n';
    return kOk;
}

int cmd_train(const RunConfig& c, const fs::path& out, std::ostream& os, std::ostream& err) {
    require(c.series, "--series", "train");
    SeriesTensor x = load_series_infer(c.series, c.dim);
    std::optional<NormalizationRecord> norm;
    if (c.normalize) {
        auto nx = normalize(x, 0, x.steps());
        x = std::move(nx.series);
        norm = std::move(nx.record);
    }
    const TrainingConfig tc = training_config(c);
    const RelationSet rel = resolve_relations(c, x.series(), tc.variant, err);
    const TrainResult res = train(x, rel, tc);

    Checkpoint ck{tc.variant, res.state, rel, norm, tc.lambda, tc.gamma, tc.seed};
    save_checkpoint(out / "checkpoint.json", ck);
    save_latent_csv(out / "latent.csv", res.state.latent);
    write_trace_csv(out / "trace.csv", res.trace, c.timing);
    if (!res.trace.epochs.empty()) {
        const auto& last = res.trace.epochs.back().loss;
        os << "trained " << to_string(tc.variant) << " for " << tc.epochs << " epochs: total=" << last.total
           << " reconstruction=" << last.reconstruction << " dynamics=" << last.dynamics << '\n';
    }
    return kOk;
}

int cmd_forecast(const RunConfig& c, const fs::path& out, std::ostream& os) {
    require(c.checkpoint, "--checkpoint", "forecast");
    if (c.horizon < 1) throw ConfigError("--horizon must be at least 1");
    const Checkpoint ck = load_checkpoint(c.checkpoint);
    SeriesTensor pred = forecast(ck.state, ck.relations, ck.variant, c.horizon);
    if (ck.norm) pred = denormalize(pred, *ck.norm);
    save_series(out / "forecast.csv", pred);
    os << "forecast " << c.horizon << " steps -> " << (out / "forecast.csv").string() << '\n';
    return kOk;
}

struct EvalInputs {
    SeriesTensor x;
    RelationSet relations;
    FoldPlan plan;
};

EvalInputs eval_inputs(const RunConfig& c, const std::vector<Variant>& variants, bool apply_powers,
                       std::ostream& err) {
    require(c.series, "--series", c.command);
    if (c.train_window == 0) throw ConfigError(c.command + " requires --train-window");
    EvalInputs in;
    in.x = load_series_infer(c.series, c.dim);
    in.plan = plan_folds(in.x.steps(), c.train_window, c.horizon, c.folds);
    const std::size_t n = in.x.series();
    if (!c.relations.empty()) {
        std::vector<std::string> warnings;
        in.relations = load_relations(c.relations, n, &warnings);
        for (const auto& w : warnings) err << "warning: " << w << '\n';
        if (apply_powers) in.relations = relations_for_powers(in.relations, n, c.powers, Variant::stnn);
    } else {
        for (Variant v : variants)
            if (v != Variant::stnn_d) throw ConfigError(to_string(v) + " needs a relation prior (--relations)");
        in.relations = RelationSet(n);
    }
    return in;
}

void print_report(const ScoreReport& r, std::ostream& os) {
    for (const auto& m : r.models) os << m.name << " mean_rmse=" << m.mean_rmse << '\n';
}

int cmd_evaluate(const RunConfig& c, const fs::path& out, std::ostream& os, std::ostream& err) {
    const TrainingConfig base = training_config(c);
    std::vector<ModelSpec> models;
    std::vector<Variant> variants;
    for (const auto& tok : c.models) {
        models.push_back(parse_model_spec(tok, base, c.ar_lags));
        if (models.back().kind == ModelKind::stnn) variants.push_back(models.back().training.variant);
    }
    if (models.empty()) throw ConfigError("evaluate needs at least one model (--models)");
    const auto in = eval_inputs(c, variants, true, err);
    const auto report = evaluate(in.x, in.relations, in.plan, models, {c.repetitions, true});
    write_report_csv(out / "report.csv", report);
    write_report_json(out / "report.json", report);
    print_report(report, os);
    return kOk;
}

int cmd_grid(const RunConfig& c, const fs::path& out, std::ostream& os, std::ostream& err) {
    const ModelSpec family = parse_model_spec(c.variant, training_config(c), c.ar_lags);
    if (family.kind != ModelKind::stnn) throw ConfigError("grid search applies to STNN variants only");
    const auto in = eval_inputs(c, {family.training.variant}, false, err);
    GridAxes axes{c.grid_latent, c.grid_lambda, c.grid_gamma, c.grid_powers};
    if (axes.powers.empty()) axes.powers = {c.powers};
    const auto result = grid_search(in.x, in.relations, in.plan, family, axes, {c.repetitions, true});
    write_grid_csv(out / "grid.csv", result);
    if (!result.best_report.models.empty()) {
        write_report_csv(out / "report.csv", result.best_report);
        write_report_json(out / "report.json", result.best_report);
    }
    const auto& b = result.best;
    json best = {{"latent_dim", b.latent_dim}, {"lambda", b.lambda}, {"gamma", b.gamma}, {"powers", b.powers}};
    write_json_file(out / "best.json", best);
    os << "best: latent_dim=" << b.latent_dim << " lambda=" << b.lambda << " gamma=" << b.gamma
       << " powers=" << b.powers << '\n';
    return kOk;
}

int cmd_discover(const RunConfig& c, const fs::path& out, std::ostream& os) {
    require(c.checkpoint, "--checkpoint", "discover");
    const Checkpoint ck = load_checkpoint(c.checkpoint);
    const auto& rel = ck.relations;
    if (ck.variant == Variant::stnn_gate) {
        const auto& z = ck.state.latent.z;
        const std::size_t end = c.time_end == 0 ? z.size() : std::min(c.time_end, z.size());
        if (c.time_begin >= end) throw ConfigError("empty discovery time range");
        std::ofstream f(out / "dynamic_dominant.csv");
        if (!f) throw IoError("cannot write " + (out / "dynamic_dominant.csv").string());
        f << "t,i,r,weight\n";
        for (std::size_t t = c.time_begin; t < end; ++t) {
            const auto gated = dynamic_gate(z[t], ck.state.params, rel);
            const auto dom = dominant_relation(gated);
            for (std::size_t i = 0; i < dom.size(); ++i) {
                double w = 0.0;
                for (double v : gated[dom[i]].row(i)) w += std::abs(v);
                f << t << ',' << i << ',' << dom[i] << ',' << csv::format(w) << '\n';
            }
        }
        os << "dynamic relations for steps [" << c.time_begin << ", " << end << ")\n";
        return kOk;
    }
    const auto corr = extract_correlations(ck.state.params, rel, ck.variant);
    {
        std::ofstream f(out / "correlations.csv");
        if (!f) throw IoError("cannot write " + (out / "correlations.csv").string());
        f << "r,i,j,weight\n";
        for (std::size_t r = 0; r < corr.matrices.size(); ++r)
            for (std::size_t i = 0; i < corr.matrices[r].rows(); ++i)
                for (std::size_t j = 0; j < corr.matrices[r].cols(); ++j)
                    f << r << ',' << i << ',' << j << ',' << csv::format(corr.matrices[r](i, j)) << '\n';
    }
    {
        std::ofstream f(out / "dominant.csv");
        if (!f) throw IoError("cannot write " + (out / "dominant.csv").string());
        f << "i,relation,label\n";
        for (std::size_t i = 0; i < corr.dominant.size(); ++i)
            f << i << ',' << corr.dominant[i] << ',' << corr.labels[corr.dominant[i]] << '\n';
    }
    os << "wrote " << corr.matrices.size() << " relation matrices\n";
    return kOk;
}

int cmd_gradcheck(const RunConfig& c, const fs::path& out, std::ostream& os) {
    constexpr double kTolerance = 1e-5;
    bool ok = true;
    std::ofstream f(out / "gradcheck.csv");
    if (!f) throw IoError("cannot write " + (out / "gradcheck.csv").string());
    f << "variant,max_rel_error,entries,status\n";
    for (Variant v : {Variant::stnn, Variant::stnn_r, Variant::stnn_d, Variant::stnn_gate}) {
        GradCheckConfig g;
        g.variant = v;
        g.lambda = c.lambda;
        g.gamma = c.gamma;
        g.seed = c.seed;
        const auto rep = grad_check(g);
        const bool pass = rep.max_rel_error < kTolerance;
        ok = ok && pass;
        os << to_string(v) << " max_rel_error=" << rep.max_rel_error << " worst=" << rep.worst_block
           << (pass ? " PASS" : " FAIL") << '\n';
        f << to_string(v) << ',' << csv::format(rep.max_rel_error) << ',' << rep.entries_checked << ','
          << (pass ? "pass" : "fail") << '\n';
    }
    return ok ? kOk : kGradCheckFailure;
}

}  // namespace

int execute(const RunConfig& cfg, std::ostream& os, std::ostream& err) {
    try {
        if (cfg.threads > 0) kernels::set_threads(cfg.threads);
        const fs::path out = cfg.out;
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
        json manifest = cfg;
        std::ofstream mf(out / "manifest.json");
        if (!mf) throw IoError("cannot write " + (out / "manifest.json").string());
        mf << manifest.dump(2) << '\n';
        mf.close();

        const auto& cmd = cfg.command;
        if (cmd == "generate") return cmd_generate(cfg, out, os);
        if (cmd == "train") return cmd_train(cfg, out, os, err);
        if (cmd == "forecast") return cmd_forecast(cfg, out, os);
        if (cmd == "evaluate") return cmd_evaluate(cfg, out, os, err);
        if (cmd == "grid") return cmd_grid(cfg, out, os, err);
        if (cmd == "discover") return cmd_discover(cfg, out, os);
        if (cmd == "gradcheck") return cmd_gradcheck(cfg, out, os);
        throw ConfigError("unknown command '" + cmd + "'");
    } catch (const DivergenceError& e) {
        err << "error: training diverged: " << e.what() << '\n';
        return kDivergence;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kIoError;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kIoError;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const json::exception& e) {
        err << "error: invalid configuration: " << e.what() << '\n';
        return kConfigError;
    }
}

int run(const std::vector<std::string>& args, std::ostream& os, std::ostream& err) {
    CLI::App app{"Spatio-temporal latent forecasting toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    RunConfig flags;
    std::string config_path;
    std::string manifest_path;
    std::vector<std::pair<CLI::Option*, std::string>> tracked;
    auto opt = [&](const std::string& name, const std::string& key, auto& var, const std::string& help) {
        auto* o = app.add_option(name, var, help);
        tracked.emplace_back(o, key);
        return o;
    };

    opt("--series", "series", flags.series, "Series CSV (rows = time steps, n*m columns)");
    opt("--relations", "relations", flags.relations, "Relation edge list CSV (label,i,j,weight)");
    opt("--checkpoint", "checkpoint", flags.checkpoint, "Model checkpoint JSON");
    opt("--out", "out", flags.out, "Output directory");
    opt("--variant", "variant", flags.variant, "stnn, stnn-r, stnn-d or stnn-gate");
    opt("--latent-dim", "latent_dim", flags.latent_dim, "Latent dimension N");
    opt("--lambda", "lambda", flags.lambda, "Weight of the latent dynamics term");
    opt("--gamma", "gamma", flags.gamma, "L1 weight on relation weights");
    opt("--powers", "powers", flags.powers, "Number of adjacency powers K");
    opt("--epochs", "epochs", flags.epochs, "Training epochs");
    opt("--lr", "lr", flags.lr, "Learning rate");
    opt("--momentum", "momentum", flags.momentum, "Nesterov momentum");
    opt("--batch", "batch", flags.batch, "Pairs per iteration");
    opt("--clip", "clip", flags.clip, "Clip global gradient norm (0 = off)");
    opt("--horizon", "horizon", flags.horizon, "Forecast horizon");
    opt("--folds", "folds", flags.folds, "Rolling-origin fold count");
    opt("--train-window", "train_window", flags.train_window, "Training window length T'");
    opt("--seed", "seed", flags.seed, "Random seed");
    opt("--dim", "dim", flags.dim, "Values per series m");
    opt("--relation-count", "relation_count", flags.relation_count, "Relations for prior-free stnn-d");
    opt("--models", "models", flags.models, "Models to evaluate: mean, ar[:R], stnn variants")->delimiter(',');
    opt("--ar-lags", "ar_lags", flags.ar_lags, "AR lag count R");
    opt("--repetitions", "repetitions", flags.repetitions, "Seeds per (model, fold)");
    opt("--grid-latent", "grid_latent", flags.grid_latent, "Grid over N")->delimiter(',');
    opt("--grid-lambda", "grid_lambda", flags.grid_lambda, "Grid over lambda")->delimiter(',');
    opt("--grid-gamma", "grid_gamma", flags.grid_gamma, "Grid over gamma")->delimiter(',');
    opt("--grid-powers", "grid_powers", flags.grid_powers, "Grid over K")->delimiter(',');
    opt("--kind", "kind", flags.kind, "Synthetic generator: teacher_stnn or grid_diffusion");
    opt("--grid-rows", "grid_rows", flags.grid_rows, "Synthetic lattice rows");
    opt("--grid-cols", "grid_cols", flags.grid_cols, "Synthetic lattice columns");
    opt("--length", "length", flags.length, "Synthetic series length");
    opt("--noise", "noise", flags.noise, "Synthetic noise std");
    opt("--alpha", "alpha", flags.alpha, "Diffusion rate");
    opt("--teacher-gain", "teacher_gain", flags.teacher_gain, "Teacher intra-series gain");
    opt("--teacher-coupling", "teacher_coupling", flags.teacher_coupling, "Teacher relational coupling");
    opt("--time-begin", "time_begin", flags.time_begin, "First step for dynamic relation output");
    opt("--time-end", "time_end", flags.time_end, "End step (exclusive) for dynamic relation output");
    opt("--threads", "threads", flags.threads, "OpenMP threads (0 = runtime default)");
    bool no_normalize = false, timing = false;
    auto* no_norm_opt = app.add_flag("--no-normalize", no_normalize, "Train on raw values");
    auto* timing_opt = app.add_flag("--timing", timing, "Record wall-clock seconds in the trace");
    app.add_option("--config", config_path, "JSON configuration file (flags take precedence)");

    for (const char* name : {"generate", "train", "forecast", "evaluate", "grid", "discover", "gradcheck"})
        app.add_subcommand(name, std::string("Run ") + name);
    auto* replay = app.add_subcommand("replay", "Re-run a command from its manifest");
    replay->add_option("manifest", manifest_path, "manifest.json of a previous run")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        os << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }

    std::string command = app.get_subcommands().front()->get_name();
    try {
        json merged = RunConfig{};
        auto merge_file = [&](const std::string& path) {
            json file = read_json_file(path);
            if (!file.is_object()) throw ConfigError(path + " is not a JSON object");
            RunConfig probe;
            from_json(file, probe);  // rejects unknown keys
            merged.update(file);
        };
        if (command == "replay") {
            merge_file(manifest_path);
            command = merged.at("command").get<std::string>();
        }
        if (!config_path.empty()) merge_file(config_path);
        const json given = flags;
        for (const auto& [o, key] : tracked)
            if (o->count() > 0) merged[key] = given.at(key);
        if (no_norm_opt->count() > 0) merged["normalize"] = !no_normalize;
        if (timing_opt->count() > 0) merged["timing"] = timing;
        merged["command"] = command;
        return execute(merged.get<RunConfig>(), os, err);
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kIoError;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const json::exception& e) {
        err << "error: invalid configuration: " << e.what() << '\n';
        return kConfigError;
    }
}

}  // namespace stnn::cli
