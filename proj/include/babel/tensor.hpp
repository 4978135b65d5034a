// Row-major double matrices with BLAS-backed matmul.
#pragma once

#include <cblas.h>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "babel/common.hpp"

namespace babel {

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(std::size_t(r) * c, 0.0) {}

  double* row(int r) { return a.data() + std::size_t(r) * cols; }
  const double* row(int r) const { return a.data() + std::size_t(r) * cols; }
  double& at(int r, int c) { return a[std::size_t(r) * cols + c]; }
  double at(int r, int c) const { return a[std::size_t(r) * cols + c]; }
  std::size_t size() const { return a.size(); }

  void zero() { std::fill(a.begin(), a.end(), 0.0); }

  bool all_finite() const {
    for (double v : a)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

// C = beta*C + alpha * op(A) * op(B)
inline void matmul(const Mat& A, bool ta, const Mat& B, bool tb, Mat& C,
                   double alpha = 1.0, double beta = 0.0) {
  int m = ta ? A.cols : A.rows;
  int k = ta ? A.rows : A.cols;
  int kb = tb ? B.cols : B.rows;
  int n = tb ? B.rows : B.cols;
  if (k != kb || C.rows != m || C.cols != n)
    throw Error("matmul: shape mismatch");
  cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans,
              tb ? CblasTrans : CblasNoTrans, m, n, k, alpha, A.a.data(),
              A.cols, B.a.data(), B.cols, beta, C.a.data(), C.cols);
}

inline void axpy(double alpha, const Mat& x, Mat& y) {
  if (x.size() != y.size()) throw Error("axpy: size mismatch");
  cblas_daxpy((int)x.size(), alpha, x.a.data(), 1, y.a.data(), 1);
}

}  // namespace babel
