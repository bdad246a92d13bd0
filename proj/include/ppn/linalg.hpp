#pragma once

#include <span>

namespace ppn {

// Dense row-major kernels with accumulate (+=) semantics. All loops run in a
// fixed order so results are bit-reproducible; the same kernels serve both the
// batched tape path and single-row evaluation, which keeps the two bitwise
// consistent row for row.

// C[M x N] += A[M x K] * B[K x N]
void matmul_nn(double* c, const double* a, const double* b, int m, int n, int k);

// C[M x N] += A[M x K] * B[N x K]^T
void matmul_nt(double* c, const double* a, const double* b, int m, int n, int k);

// C[M x N] += A[K x M]^T * B[K x N]
void matmul_tn(double* c, const double* a, const double* b, int m, int n, int k);

// Pairwise (cascade) summation. More accurate than sequential summation and
// used wherever a sum must be invariant to how the caller batches the data.
double pairwise_sum(std::span<const double> xs);

double dot(std::span<const double> a, std::span<const double> b);

// Pairwise-sum mean; 0 for an empty span.
double mean_of(std::span<const double> xs);

// Population standard deviation (divide by N); 0 for fewer than two entries.
double pop_std(std::span<const double> xs);

// Each row v <- v / max(||v||_2, 1e-8). Shared by the taped op and the plain
// evaluation path so both produce bitwise-identical outputs.
void normalize_rows_inplace(double* v, int rows, int cols);

}  // namespace ppn
