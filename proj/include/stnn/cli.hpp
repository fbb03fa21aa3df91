#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace stnn::cli {

enum ExitCode : int {
    kOk = 0,
    kConfigError = 2,
    kIoError = 3,
    kDivergence = 4,
    kGradCheckFailure = 5,
};

// Fully resolved settings of one run. Written verbatim as the run manifest.
struct RunConfig {
    std::string command;
    std::string series;
    std::string relations;
    std::string checkpoint;
    std::string out = "stnn_out";

    std::string variant = "stnn";
    std::size_t latent_dim = 10;
    double lambda = 1.0;
    double gamma = 0.0;
    std::size_t powers = 1;
    std::size_t epochs = 500;
    double lr = 0.01;
    double momentum = 0.9;
    std::size_t batch = 32;
    double clip = 0.0;
    std::uint64_t seed = 0;
    std::size_t dim = 1;
    std::size_t relation_count = 1;
    bool normalize = true;
    bool timing = false;

    std::size_t horizon = 5;
    std::size_t folds = 5;
    std::size_t train_window = 0;
    std::vector<std::string> models{"mean", "ar", "stnn"};
    std::size_t ar_lags = 2;
    std::size_t repetitions = 1;

    std::vector<std::size_t> grid_latent;
    std::vector<double> grid_lambda;
    std::vector<double> grid_gamma;
    std::vector<std::size_t> grid_powers;

    std::string kind = "grid_diffusion";
    std::size_t grid_rows = 4;
    std::size_t grid_cols = 5;
    std::size_t length = 200;
    double noise = 0.01;
    double alpha = 0.5;
    double teacher_gain = 1.3;
    double teacher_coupling = 1.0;

    std::size_t time_begin = 0;
    std::size_t time_end = 0;  // 0 means the end of the latent trajectory
    int threads = 0;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

// Runs one command. args excludes the program name. Returns an ExitCode.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Executes an already resolved configuration and writes its manifest.
int execute(const RunConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace stnn::cli
