#include "stnn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "stnn/csv.hpp"
#include "stnn/error.hpp"

namespace stnn {

SeriesTensor::SeriesTensor(std::size_t T, std::size_t n, std::size_t m, double fill)
    : T_(T), n_(n), m_(m), values_(T * n * m, fill) {}

SeriesTensor::SeriesTensor(std::size_t T, std::size_t n, std::size_t m, std::vector<double> values)
    : T_(T), n_(n), m_(m), values_(std::move(values)) {
    if (values_.size() != T * n * m) {
        throw ShapeError("series tensor needs " + std::to_string(T * n * m) + " values, got " +
                         std::to_string(values_.size()));
    }
}

Matrix SeriesTensor::frame(std::size_t t) const {
    const auto first = values_.begin() + static_cast<std::ptrdiff_t>(t * n_ * m_);
    return Matrix(n_, m_, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(n_ * m_)));
}

void SeriesTensor::set_frame(std::size_t t, const Matrix& f) {
    if (f.rows() != n_ || f.cols() != m_) {
        throw ShapeError("set_frame: expected " + std::to_string(n_) + "x" + std::to_string(m_) +
                         ", got " + f.shape_string());
    }
    std::copy(f.data().begin(), f.data().end(),
              values_.begin() + static_cast<std::ptrdiff_t>(t * n_ * m_));
}

SeriesTensor SeriesTensor::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > T_) throw ArgumentError("slice: invalid time range");
    const auto stride = static_cast<std::ptrdiff_t>(n_ * m_);
    SeriesTensor out(end - begin, n_, m_,
                     std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(begin) * stride,
                                         values_.begin() + static_cast<std::ptrdiff_t>(end) * stride));
    out.time_step_label = time_step_label;
    out.norm = norm;
    return out;
}

namespace {

std::vector<std::vector<double>> read_numeric_rows(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (csv::trim(line).empty()) continue;
        std::vector<double> row;
        for (auto cell : csv::split(line)) row.push_back(csv::parse_double(cell, lineno));
        if (width == 0) width = row.size();
        if (row.size() != width) {
            throw ParseError("malformed row: expected " + std::to_string(width) + " columns, got " +
                                 std::to_string(row.size()),
                             lineno);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

SeriesTensor load_series(const std::filesystem::path& path, std::size_t n, std::size_t m) {
    if (n == 0 || m == 0) throw ArgumentError("load_series: n and m must be positive");
    auto rows = read_numeric_rows(path);
    std::vector<double> values;
    values.reserve(rows.size() * n * m);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != n * m) {
            throw ParseError("column-count mismatch: expected n*m = " + std::to_string(n * m) +
                                 ", got " + std::to_string(rows[r].size()),
                             r + 1);
        }
        values.insert(values.end(), rows[r].begin(), rows[r].end());
    }
    return SeriesTensor(rows.size(), n, m, std::move(values));
}

SeriesTensor load_series_infer(const std::filesystem::path& path, std::size_t m) {
    auto rows = read_numeric_rows(path);
    if (rows.empty()) throw ParseError("series file is empty", 1);
    if (m == 0 || rows.front().size() % m != 0) {
        throw ParseError("column count " + std::to_string(rows.front().size()) +
                             " is not a multiple of m = " + std::to_string(m),
                         1);
    }
    return load_series(path, rows.front().size() / m, m);
}

void save_series(const std::filesystem::path& path, const SeriesTensor& x) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (std::size_t t = 0; t < x.steps(); ++t) {
        for (std::size_t c = 0; c < x.columns(); ++c) {
            if (c) out << ',';
            out << csv::format(x.col(t, c));
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

NormalizedSeries normalize(const SeriesTensor& x, std::size_t fit_begin, std::size_t fit_end) {
    if (fit_begin >= fit_end) throw ArgumentError("normalize: empty fit range");
    if (fit_end > x.steps()) throw ArgumentError("normalize: fit range exceeds series length");
    NormalizationRecord rec;
    rec.min.assign(x.columns(), 0.0);
    rec.max.assign(x.columns(), 0.0);
    for (std::size_t c = 0; c < x.columns(); ++c) {
        double lo = x.col(fit_begin, c), hi = lo;
        for (std::size_t t = fit_begin + 1; t < fit_end; ++t) {
            lo = std::min(lo, x.col(t, c));
            hi = std::max(hi, x.col(t, c));
        }
        rec.min[c] = lo;
        rec.max[c] = hi;
    }
    auto scaled = apply_normalization(x, rec);
    return {std::move(scaled), std::move(rec)};
}

SeriesTensor apply_normalization(const SeriesTensor& x, const NormalizationRecord& rec) {
    if (rec.min.size() != x.columns()) throw ShapeError("normalization record width mismatch");
    SeriesTensor out = x;
    for (std::size_t t = 0; t < x.steps(); ++t) {
        for (std::size_t c = 0; c < x.columns(); ++c) {
            out.col(t, c) = rec.is_constant(c) ? 0.5
                                               : (x.col(t, c) - rec.min[c]) / (rec.max[c] - rec.min[c]);
        }
    }
    out.norm = rec;
    return out;
}

SeriesTensor denormalize(const SeriesTensor& x, const NormalizationRecord& rec) {
    if (rec.min.size() != x.columns()) throw ShapeError("normalization record width mismatch");
    SeriesTensor out = x;
    for (std::size_t t = 0; t < x.steps(); ++t) {
        for (std::size_t c = 0; c < x.columns(); ++c) {
            out.col(t, c) = rec.is_constant(c) ? rec.min[c]
                                               : x.col(t, c) * (rec.max[c] - rec.min[c]) + rec.min[c];
        }
    }
    out.norm.reset();
    return out;
}

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::raw: return "raw";
        case Provenance::power_k: return "power_k";
        case Provenance::normalized_raw: return "normalized_raw";
        case Provenance::normalized_power_k: return "normalized_power_k";
    }
    return "raw";
}

Provenance parse_provenance(const std::string& s) {
    if (s == "raw") return Provenance::raw;
    if (s == "power_k") return Provenance::power_k;
    if (s == "normalized_raw") return Provenance::normalized_raw;
    if (s == "normalized_power_k") return Provenance::normalized_power_k;
    throw ValidationError("unknown relation provenance '" + s + "'");
}

void RelationSet::add(Relation r) {
    if (r.weights.rows() != n_ || r.weights.cols() != n_) {
        throw ShapeError("relation '" + r.label + "' must be " + std::to_string(n_) + "x" +
                         std::to_string(n_) + ", got " + r.weights.shape_string());
    }
    for (double v : r.weights.data()) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ValidationError("relation '" + r.label + "' has a negative or non-finite weight");
        }
    }
    relations_.push_back(std::move(r));
}

std::vector<std::string> RelationSet::labels() const {
    std::vector<std::string> out;
    for (const auto& r : relations_) out.push_back(r.label);
    return out;
}

RelationSet RelationSet::unconstrained(std::size_t n, std::size_t count) {
    RelationSet set(n);
    for (std::size_t r = 0; r < count; ++r) set.add({"free" + std::to_string(r), Matrix(n, n), Provenance::raw});
    return set;
}

RelationSet load_relations(const std::filesystem::path& path, std::size_t n,
                           std::vector<std::string>* warnings) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> order;
    std::map<std::string, Matrix> mats;
    std::map<std::string, std::vector<char>> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (csv::trim(line).empty()) continue;
        auto cells = csv::split(line);
        if (cells.size() != 4) throw ParseError("relation rows need 4 fields: label,i,j,weight", lineno);
        std::string label(csv::trim(cells[0]));
        if (label.empty()) throw ParseError("empty relation label", lineno);
        const long long i = csv::parse_int(cells[1], lineno);
        const long long j = csv::parse_int(cells[2], lineno);
        const double w = csv::parse_double(cells[3], lineno);
        if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n || static_cast<std::size_t>(j) >= n) {
            throw ValidationError("line " + std::to_string(lineno) + ": index out of [0, " +
                                  std::to_string(n) + ")");
        }
        if (w < 0.0) throw ValidationError("line " + std::to_string(lineno) + ": negative weight");
        auto it = mats.find(label);
        if (it == mats.end()) {
            order.push_back(label);
            it = mats.emplace(label, Matrix(n, n)).first;
            seen.emplace(label, std::vector<char>(n * n, 0));
        }
        auto& flag = seen[label][static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)];
        if (flag && warnings) {
            warnings->push_back("line " + std::to_string(lineno) + ": duplicate edge " + label + " (" +
                                std::to_string(i) + "," + std::to_string(j) + "), weights summed");
        }
        flag = 1;
        it->second(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) += w;
    }
    RelationSet set(n);
    for (const auto& label : order) set.add({label, std::move(mats[label]), Provenance::raw});
    return set;
}

void save_relations(const std::filesystem::path& path, const RelationSet& rel) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& r : rel) {
        for (std::size_t i = 0; i < rel.series(); ++i)
            for (std::size_t j = 0; j < rel.series(); ++j)
                if (r.weights(i, j) != 0.0)
                    out << r.label << ',' << i << ',' << j << ',' << csv::format(r.weights(i, j)) << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

Matrix row_normalize(const Matrix& w) {
    Matrix out = w;
    for (std::size_t i = 0; i < w.rows(); ++i) {
        double s = 0.0;
        for (double v : w.row(i)) s += v;
        if (s > 0.0)
            for (auto& v : out.row(i)) v /= s;
    }
    return out;
}

RelationSet row_normalize(const RelationSet& rel) {
    RelationSet out(rel.series());
    for (const auto& r : rel) {
        const auto p = (r.provenance == Provenance::power_k || r.provenance == Provenance::normalized_power_k)
                           ? Provenance::normalized_power_k
                           : Provenance::normalized_raw;
        out.add({r.label, row_normalize(r.weights), p});
    }
    return out;
}

RelationSet build_powers(const Matrix& base, std::size_t K) {
    if (K < 1) throw ArgumentError("build_powers: K must be at least 1");
    if (base.rows() != base.cols()) throw ShapeError("build_powers: base must be square");
    RelationSet out(base.rows());
    Matrix power = base;
    for (std::size_t k = 1; k <= K; ++k) {
        if (k > 1) power = matmul(power, base);
        Matrix w = power;
        if (k > 1)
            for (std::size_t i = 0; i < w.rows(); ++i) w(i, i) = 0.0;
        out.add({"power" + std::to_string(k), row_normalize(w),
                 k == 1 ? Provenance::normalized_raw : Provenance::normalized_power_k});
    }
    return out;
}

Matrix grid_adjacency(std::size_t rows, std::size_t cols) {
    const std::size_t n = rows * cols;
    Matrix w(n, n);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t i = r * cols + c;
            if (r + 1 < rows) w(i, i + cols) = w(i + cols, i) = 1.0;
            if (c + 1 < cols) w(i, i + 1) = w(i + 1, i) = 1.0;
        }
    }
    return w;
}

}  // namespace stnn
