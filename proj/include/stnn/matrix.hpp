#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace stnn {

// Dense row-major matrix of doubles. Value type; every operation below returns
// a fresh matrix and leaves its inputs untouched.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols}; }
    static Matrix ones(std::size_t rows, std::size_t cols) { return {rows, cols, 1.0}; }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    const std::vector<double>& values() const noexcept { return data_; }

    bool all_finite() const noexcept;
    std::string shape_string() const;

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double s);

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);

// a * b. Throws ShapeError naming both shapes when a.cols != b.rows.
Matrix matmul(const Matrix& a, const Matrix& b);
// transpose(a) * b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a * transpose(b) without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix map_tanh(const Matrix& a);
Matrix transpose(const Matrix& a);

double frobenius_sq(const Matrix& a);
double l1_norm(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);

// Permutation helpers: row p[k] of the result is row k of the input, so a
// series that lived at index k moves to index p[k].
Matrix permute_rows(const Matrix& a, std::span<const std::size_t> perm);
Matrix permute_both(const Matrix& a, std::span<const std::size_t> perm);

// Solves (A + ridge * I) x = b for symmetric positive semi-definite A by
// Cholesky factorization. Throws ValidationError if the shifted matrix is not
// positive definite.
std::vector<double> solve_spd(const Matrix& a, std::span<const double> b, double ridge = 0.0);

}  // namespace stnn
