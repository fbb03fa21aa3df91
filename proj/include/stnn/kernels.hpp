#pragma once

// Matrix-product and elementwise kernels in two flavours. `serial` is the
// reference implementation; `omp` splits output rows across OpenMP threads.
// Both evaluate every output element with the same accumulation order, so
// their results are bitwise identical for any thread count.

#include "stnn/matrix.hpp"

namespace stnn::kernels {

namespace serial {
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);
void map_tanh(const Matrix& a, Matrix& out);
}  // namespace serial

namespace omp {
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);
void map_tanh(const Matrix& a, Matrix& out);
}  // namespace omp

// Number of threads the omp kernels will use (1 when built without OpenMP).
int max_threads();
void set_threads(int n);

}  // namespace stnn::kernels
