#include "stnn/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stnn::kernels {

namespace {

// Below this many multiply-adds the thread fork costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 14;

inline void reset(Matrix& out, std::size_t rows, std::size_t cols) {
    if (out.rows() != rows || out.cols() != cols) {
        out = Matrix(rows, cols);
    } else {
        for (auto& v : out.data()) v = 0.0;
    }
}

// out(i,:) = sum_k a(i,k) * b(k,:)
inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
    auto o = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
        const double aik = a(i, k);
        auto bk = b.row(k);
        for (std::size_t j = 0; j < b.cols(); ++j) o[j] += aik * bk[j];
    }
}

// out(i,:) = sum_k a(k,i) * b(k,:)
inline void matmul_tn_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
    auto o = out.row(i);
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double aki = a(k, i);
        auto bk = b.row(k);
        for (std::size_t j = 0; j < b.cols(); ++j) o[j] += aki * bk[j];
    }
}

// out(i,j) = dot(a(i,:), b(j,:))
inline void matmul_nt_row(const Matrix& a, const Matrix& b, Matrix& out, std::size_t i) {
    auto ai = a.row(i);
    auto o = out.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
        auto bj = b.row(j);
        double s = 0.0;
        for (std::size_t k = 0; k < a.cols(); ++k) s += ai[k] * bj[k];
        o[j] = s;
    }
}

}  // namespace

namespace serial {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
    reset(out, a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) matmul_row(a, b, out, i);
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
    reset(out, a.cols(), b.cols());
    for (std::size_t i = 0; i < a.cols(); ++i) matmul_tn_row(a, b, out, i);
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
    reset(out, a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) matmul_nt_row(a, b, out, i);
}

void map_tanh(const Matrix& a, Matrix& out) {
    reset(out, a.rows(), a.cols());
    auto x = a.data();
    auto o = out.data();
    for (std::size_t k = 0; k < x.size(); ++k) o[k] = std::tanh(x[k]);
}

}  // namespace serial

namespace omp {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
    reset(out, a.rows(), b.cols());
    const auto rows = static_cast<long>(a.rows());
    const bool par = a.rows() * a.cols() * b.cols() >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
    for (long i = 0; i < rows; ++i) matmul_row(a, b, out, static_cast<std::size_t>(i));
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
    reset(out, a.cols(), b.cols());
    const auto rows = static_cast<long>(a.cols());
    const bool par = a.rows() * a.cols() * b.cols() >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
    for (long i = 0; i < rows; ++i) matmul_tn_row(a, b, out, static_cast<std::size_t>(i));
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
    reset(out, a.rows(), b.rows());
    const auto rows = static_cast<long>(a.rows());
    const bool par = a.rows() * a.cols() * b.rows() >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
    for (long i = 0; i < rows; ++i) matmul_nt_row(a, b, out, static_cast<std::size_t>(i));
}

void map_tanh(const Matrix& a, Matrix& out) {
    reset(out, a.rows(), a.cols());
    auto x = a.data();
    auto o = out.data();
    const auto len = static_cast<long>(x.size());
#pragma omp parallel for schedule(static) if (len >= static_cast<long>(kParallelWork))
    for (long k = 0; k < len; ++k) o[k] = std::tanh(x[k]);
}

}  // namespace omp

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
    omp_set_num_threads(n > 0 ? n : omp_get_num_procs());
#else
    (void)n;
#endif
}

}  // namespace stnn::kernels
