#include "stnn/checkpoint.hpp"

#include <fstream>

#include "stnn/csv.hpp"
#include "stnn/error.hpp"

namespace stnn {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json to_json(const Matrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.values()}};
}

Matrix matrix_from_json(const json& j) {
    return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                  j.at("data").get<std::vector<double>>());
}

ordered_json to_json(const StnnParameters& p) {
    ordered_json j;
    j["theta0"] = to_json(p.theta0);
    j["thetas"] = ordered_json::array();
    for (const auto& th : p.thetas) j["thetas"].push_back(to_json(th));
    j["decoder_weight"] = to_json(p.decoder_weight);
    j["decoder_bias"] = p.decoder_bias;
    if (p.gammas) {
        j["gammas"] = ordered_json::array();
        for (const auto& g : *p.gammas) j["gammas"].push_back(to_json(g));
    } else {
        j["gammas"] = nullptr;
    }
    if (p.gate) {
        j["gate"] = {{"weights", p.gate->weights}, {"biases", p.gate->biases}};
    } else {
        j["gate"] = nullptr;
    }
    return j;
}

StnnParameters params_from_json(const json& j) {
    StnnParameters p;
    p.theta0 = matrix_from_json(j.at("theta0"));
    for (const auto& th : j.at("thetas")) p.thetas.push_back(matrix_from_json(th));
    p.decoder_weight = matrix_from_json(j.at("decoder_weight"));
    p.decoder_bias = j.at("decoder_bias").get<std::vector<double>>();
    if (j.contains("gammas") && !j["gammas"].is_null()) {
        std::vector<Matrix> g;
        for (const auto& m : j["gammas"]) g.push_back(matrix_from_json(m));
        p.gammas = std::move(g);
    }
    if (j.contains("gate") && !j["gate"].is_null()) {
        p.gate = DynamicGateParams{j["gate"].at("weights").get<std::vector<std::vector<double>>>(),
                                   j["gate"].at("biases").get<std::vector<double>>()};
    }
    return p;
}

ordered_json to_json(const LatentState& z) {
    std::vector<double> flat;
    flat.reserve(z.steps() * z.series() * z.dims());
    for (const auto& zt : z.z) flat.insert(flat.end(), zt.values().begin(), zt.values().end());
    return {{"steps", z.steps()}, {"series", z.series()}, {"dims", z.dims()}, {"data", flat}};
}

LatentState latent_from_json(const json& j) {
    const auto T = j.at("steps").get<std::size_t>();
    const auto n = j.at("series").get<std::size_t>();
    const auto N = j.at("dims").get<std::size_t>();
    const auto flat = j.at("data").get<std::vector<double>>();
    if (flat.size() != T * n * N) throw ValidationError("latent state data length mismatch");
    LatentState z;
    for (std::size_t t = 0; t < T; ++t) {
        const auto first = flat.begin() + static_cast<std::ptrdiff_t>(t * n * N);
        z.z.emplace_back(n, N, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(n * N)));
    }
    return z;
}

void write_json_file(const std::filesystem::path& path, const ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
    ordered_json j;
    j["format"] = "stnn-checkpoint";
    j["version"] = 1;
    j["variant"] = to_string(c.variant);
    j["n"] = c.state.latent.series();
    j["m"] = c.state.params.output_dim();
    j["latent_dim"] = c.state.params.latent_dim();
    j["steps"] = c.state.latent.steps();
    j["lambda"] = c.lambda;
    j["gamma"] = c.gamma;
    j["seed"] = c.seed;
    j["relation_labels"] = c.relations.labels();
    j["relations"] = ordered_json::array();
    for (const auto& r : c.relations) {
        j["relations"].push_back(
            {{"label", r.label}, {"provenance", to_string(r.provenance)}, {"weights", to_json(r.weights)}});
    }
    j["params"] = to_json(c.state.params);
    j["latent"] = to_json(c.state.latent);
    if (c.norm) {
        j["normalization"] = {{"min", c.norm->min}, {"max", c.norm->max}};
    } else {
        j["normalization"] = nullptr;
    }
    write_json_file(path, j);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const json j = read_json_file(path);
    try {
        if (j.value("format", "") != "stnn-checkpoint") throw ValidationError("not an stnn checkpoint");
        Checkpoint c;
        c.variant = parse_variant(j.at("variant").get<std::string>());
        c.lambda = j.at("lambda").get<double>();
        c.gamma = j.at("gamma").get<double>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.relations = RelationSet(j.at("n").get<std::size_t>());
        for (const auto& r : j.at("relations")) {
            c.relations.add({r.at("label").get<std::string>(), matrix_from_json(r.at("weights")),
                             parse_provenance(r.at("provenance").get<std::string>())});
        }
        c.state.params = params_from_json(j.at("params"));
        c.state.latent = latent_from_json(j.at("latent"));
        if (!j.at("normalization").is_null()) {
            c.norm = NormalizationRecord{j["normalization"].at("min").get<std::vector<double>>(),
                                         j["normalization"].at("max").get<std::vector<double>>()};
        }
        validate_shapes(c.state.latent, c.state.params, c.relations, c.variant);
        return c;
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": malformed checkpoint: " + e.what());
    }
}

void save_ground_truth(const std::filesystem::path& path, const GroundTruth& t) {
    ordered_json j;
    j["kind"] = to_string(t.kind);
    j["seed"] = t.seed;
    j["n"] = t.n;
    j["adjacency"] = ordered_json::array();
    for (const auto& e : t.adjacency) j["adjacency"].push_back({e.i, e.j, e.weight});
    if (t.teacher) j["teacher"] = to_json(*t.teacher);
    if (t.latent) j["latent"] = to_json(*t.latent);
    write_json_file(path, j);
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
    const json j = read_json_file(path);
    try {
        GroundTruth t;
        t.kind = parse_synthetic_kind(j.at("kind").get<std::string>());
        t.seed = j.at("seed").get<std::uint64_t>();
        t.n = j.at("n").get<std::size_t>();
        for (const auto& e : j.at("adjacency"))
            t.adjacency.push_back({e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>(), e.at(2).get<double>()});
        if (j.contains("teacher")) t.teacher = params_from_json(j["teacher"]);
        if (j.contains("latent")) t.latent = latent_from_json(j["latent"]);
        return t;
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": malformed ground truth: " + e.what());
    }
}

void save_latent_csv(const std::filesystem::path& path, const LatentState& z) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& zt : z.z) {
        bool first = true;
        for (double v : zt.data()) {
            if (!first) out << ',';
            out << csv::format(v);
            first = false;
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace stnn
