#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stnn/matrix.hpp"

namespace stnn {

// Per-column min/max fitted on a training window. Column c = i * m + j.
struct NormalizationRecord {
    std::vector<double> min;
    std::vector<double> max;

    bool is_constant(std::size_t column) const { return max[column] == min[column]; }
};

// Observations X indexed (t, i, j): T time steps, n series, m values per series.
class SeriesTensor {
public:
    SeriesTensor() = default;
    SeriesTensor(std::size_t T, std::size_t n, std::size_t m, double fill = 0.0);
    SeriesTensor(std::size_t T, std::size_t n, std::size_t m, std::vector<double> values);

    std::size_t steps() const noexcept { return T_; }
    std::size_t series() const noexcept { return n_; }
    std::size_t dims() const noexcept { return m_; }
    std::size_t columns() const noexcept { return n_ * m_; }

    double& at(std::size_t t, std::size_t i, std::size_t j) { return values_[(t * n_ + i) * m_ + j]; }
    double at(std::size_t t, std::size_t i, std::size_t j) const {
        return values_[(t * n_ + i) * m_ + j];
    }
    // Flat column view: column c = i * m + j.
    double& col(std::size_t t, std::size_t c) { return values_[t * n_ * m_ + c]; }
    double col(std::size_t t, std::size_t c) const { return values_[t * n_ * m_ + c]; }

    // n x m slice at time t.
    Matrix frame(std::size_t t) const;
    void set_frame(std::size_t t, const Matrix& f);

    // Time steps [begin, end).
    SeriesTensor slice(std::size_t begin, std::size_t end) const;

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    std::string time_step_label;
    std::optional<NormalizationRecord> norm;

private:
    std::size_t T_ = 0, n_ = 0, m_ = 0;
    std::vector<double> values_;
};

// Reads the headerless series CSV: one row per time step, n*m numeric columns.
// Throws ParseError carrying the offending line number.
SeriesTensor load_series(const std::filesystem::path& path, std::size_t n, std::size_t m);
// As above, inferring n from the column count.
SeriesTensor load_series_infer(const std::filesystem::path& path, std::size_t m);
void save_series(const std::filesystem::path& path, const SeriesTensor& x);

struct NormalizedSeries {
    SeriesTensor series;
    NormalizationRecord record;
};

// Min-max rescaling with statistics from time steps [fit_begin, fit_end) only.
// Constant columns map to 0.5; values outside the fitted range are not clipped.
NormalizedSeries normalize(const SeriesTensor& x, std::size_t fit_begin, std::size_t fit_end);
SeriesTensor apply_normalization(const SeriesTensor& x, const NormalizationRecord& rec);
SeriesTensor denormalize(const SeriesTensor& x, const NormalizationRecord& rec);

enum class Provenance { raw, power_k, normalized_raw, normalized_power_k };
std::string to_string(Provenance p);
Provenance parse_provenance(const std::string& s);

struct Relation {
    std::string label;
    Matrix weights;  // n x n, row i aggregates over sources j
    Provenance provenance = Provenance::raw;
};

class RelationSet {
public:
    RelationSet() = default;
    explicit RelationSet(std::size_t n) : n_(n) {}

    std::size_t series() const noexcept { return n_; }
    std::size_t size() const noexcept { return relations_.size(); }
    bool empty() const noexcept { return relations_.empty(); }

    // Validates shape and non-negativity.
    void add(Relation r);

    const Relation& operator[](std::size_t r) const { return relations_[r]; }
    auto begin() const { return relations_.begin(); }
    auto end() const { return relations_.end(); }

    std::vector<std::string> labels() const;

    // Placeholder for prior-free models: `count` all-zero relations.
    static RelationSet unconstrained(std::size_t n, std::size_t count);

private:
    std::size_t n_ = 0;
    std::vector<Relation> relations_;
};

// Edge-list CSV `label,i,j,weight`; one relation per distinct label, in order
// of first appearance. Duplicate edges are summed and reported in `warnings`.
RelationSet load_relations(const std::filesystem::path& path, std::size_t n,
                           std::vector<std::string>* warnings = nullptr);
void save_relations(const std::filesystem::path& path, const RelationSet& rel);

// Each row divided by its sum; all-zero rows stay zero.
Matrix row_normalize(const Matrix& w);
RelationSet row_normalize(const RelationSet& rel);

// W^(1)..W^(K), W^(k) = W^(k-1) W. Powers k >= 2 have their diagonal zeroed;
// every output is row-normalized.
RelationSet build_powers(const Matrix& base, std::size_t K);

// 4-neighbour lattice adjacency, node index = r * cols + c, symmetric, binary.
Matrix grid_adjacency(std::size_t rows, std::size_t cols);

}  // namespace stnn
