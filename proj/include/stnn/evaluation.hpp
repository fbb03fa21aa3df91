#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stnn/dataset.hpp"
#include "stnn/forecast.hpp"
#include "stnn/training.hpp"

namespace stnn {

struct Fold {
    std::size_t train_begin = 0;
    std::size_t train_end = 0;  // exclusive; test block is [train_end, test_end)
    std::size_t test_end = 0;
};

struct FoldPlan {
    std::size_t length = 0;
    std::size_t train_window = 0;
    std::size_t horizon = 0;
    std::size_t stride = 0;
    std::vector<Fold> folds;
};

// Rolling-origin folds: stride floor((L - T' - H) / (F - 1)), starts 0, s, 2s, ...
// Throws PlanningError naming the largest feasible fold count.
FoldPlan plan_folds(std::size_t length, std::size_t train_window, std::size_t horizon, std::size_t folds);

enum class ModelKind { mean, ar, stnn };

struct ModelSpec {
    std::string name;
    ModelKind kind = ModelKind::stnn;
    ArConfig ar;
    TrainingConfig training;
};

// Parses "mean", "ar", "ar:<lags>", or a variant name ("stnn", "stnn-r", ...).
ModelSpec parse_model_spec(const std::string& token, const TrainingConfig& base, std::size_t default_lags);

struct FoldData {
    SeriesTensor train;  // normalized on its own window
    SeriesTensor test;   // normalized with the training statistics
};

FoldData prepare_fold(const SeriesTensor& x, const Fold& fold);

// Seed for (base seed, fold index, repetition); distinct folds get independent streams.
std::uint64_t fold_seed(std::uint64_t base, std::size_t fold, std::size_t repetition);

// Trains one STNN model on the fold's normalized training window.
TrainResult train_fold(const FoldData& data, const RelationSet& relations, const ModelSpec& spec,
                       std::uint64_t seed);

struct ModelScores {
    std::string name;
    // rmse[fold][h], averaged over repetitions; NaN where the cell failed.
    std::vector<std::vector<double>> rmse;
    std::vector<bool> failed;          // per fold
    double mean_rmse = 0.0;            // over successful folds and all horizons
    std::vector<double> per_horizon;   // mean over successful folds
    double std_across_seeds = 0.0;
};

struct ScoreReport {
    std::size_t folds = 0;
    std::size_t horizon = 0;
    std::size_t repetitions = 1;
    std::vector<ModelScores> models;
};

struct EvaluateOptions {
    std::size_t repetitions = 1;  // independent seeds per (model, fold)
    bool parallel_folds = true;
};

ScoreReport evaluate(const SeriesTensor& x, const RelationSet& relations, const FoldPlan& plan,
                     const std::vector<ModelSpec>& models, const EvaluateOptions& opts = {});

void write_report_csv(const std::filesystem::path& path, const ScoreReport& report);
void write_report_json(const std::filesystem::path& path, const ScoreReport& report);

struct GridAxes {
    std::vector<std::size_t> latent_dims;
    std::vector<double> lambdas;
    std::vector<double> gammas;
    std::vector<std::size_t> powers;
};

struct GridPoint {
    std::size_t latent_dim = 0;
    double lambda = 0.0;
    double gamma = 0.0;
    std::size_t powers = 1;
};

struct GridRow {
    GridPoint point;
    double mean_rmse = 0.0;
};

struct GridResult {
    GridPoint best;
    ScoreReport best_report;
    std::vector<GridRow> rows;
};

// Relations for power count K: the powers of a single base relation, or the
// row-normalized input when it already carries several relations (K must be 1).
// Prior-free variants with no input relations get K unconstrained relations.
RelationSet relations_for_powers(const RelationSet& base, std::size_t n, std::size_t K, Variant variant);

// Exhaustive search; ties prefer smaller N, then lambda, gamma, K.
GridResult grid_search(const SeriesTensor& x, const RelationSet& base_relations, const FoldPlan& plan,
                       const ModelSpec& family, const GridAxes& axes, const EvaluateOptions& opts = {});

void write_grid_csv(const std::filesystem::path& path, const GridResult& result);

}  // namespace stnn
