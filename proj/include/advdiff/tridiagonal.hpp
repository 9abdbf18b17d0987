#pragma once

// Tridiagonal matrices and a reusable LU factorization (LAPACK dgttrf /
// dgttrs, partial pivoting). One factorization serves both A x = b and
// A^T x = b, which the adjoint sweep relies on.

#include <span>
#include <string>
#include <vector>

#include "advdiff/core_types.hpp"

extern "C" {
void dgttrf_(const int* n, double* dl, double* d, double* du, double* du2, int* ipiv, int* info);
void dgttrs_(const char* trans, const int* n, const int* nrhs, const double* dl, const double* d,
             const double* du, const double* du2, const int* ipiv, double* b, const int* ldb,
             int* info);
}

namespace advdiff {

/// Row i holds lower[i-1], diag[i], upper[i].
struct Tridiagonal {
  std::vector<double> lower;
  std::vector<double> diag;
  std::vector<double> upper;

  Tridiagonal() = default;
  explicit Tridiagonal(int n) : lower(n - 1, 0.0), diag(n, 0.0), upper(n - 1, 0.0) {}

  int size() const { return static_cast<int>(diag.size()); }

  /// Entry (i, j); zero outside the band.
  double operator()(int i, int j) const {
    if (i == j) return diag[i];
    if (j == i + 1) return upper[i];
    if (j == i - 1) return lower[j];
    return 0.0;
  }

  void add(int i, int j, double v) {
    if (i == j)
      diag[i] += v;
    else if (j == i + 1)
      upper[i] += v;
    else if (j == i - 1)
      lower[j] += v;
    else
      throw DimensionError("entry outside tridiagonal band");
  }

  Tridiagonal transposed() const {
    Tridiagonal t = *this;
    std::swap(t.lower, t.upper);
    return t;
  }

  /// alpha * this + beta * other.
  Tridiagonal combine(double alpha, const Tridiagonal& other, double beta) const {
    Tridiagonal out(size());
    for (int i = 0; i < size(); ++i) out.diag[i] = alpha * diag[i] + beta * other.diag[i];
    for (int i = 0; i + 1 < size(); ++i) {
      out.lower[i] = alpha * lower[i] + beta * other.lower[i];
      out.upper[i] = alpha * upper[i] + beta * other.upper[i];
    }
    return out;
  }

  void multiply(std::span<const double> x, std::span<double> y) const {
    const int n = size();
    if (static_cast<int>(x.size()) != n || static_cast<int>(y.size()) != n)
      throw DimensionError("tridiagonal multiply: size mismatch");
    for (int i = 0; i < n; ++i) {
      double acc = diag[i] * x[i];
      if (i > 0) acc += lower[i - 1] * x[i - 1];
      if (i + 1 < n) acc += upper[i] * x[i + 1];
      y[i] = acc;
    }
  }

  void multiply_transpose(std::span<const double> x, std::span<double> y) const {
    const int n = size();
    if (static_cast<int>(x.size()) != n || static_cast<int>(y.size()) != n)
      throw DimensionError("tridiagonal multiply: size mismatch");
    for (int i = 0; i < n; ++i) {
      double acc = diag[i] * x[i];
      if (i > 0) acc += upper[i - 1] * x[i - 1];
      if (i + 1 < n) acc += lower[i] * x[i + 1];
      y[i] = acc;
    }
  }

  std::vector<double> operator*(std::span<const double> x) const {
    std::vector<double> y(x.size());
    multiply(x, y);
    return y;
  }

  /// x^T A y.
  double bilinear(std::span<const double> x, std::span<const double> y) const {
    std::vector<double> ay(y.size());
    multiply(y, ay);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * ay[i];
    return acc;
  }
};

class TridiagonalLU {
 public:
  TridiagonalLU() = default;

  explicit TridiagonalLU(const Tridiagonal& a)
      : n_(a.size()), dl_(a.lower), d_(a.diag), du_(a.upper), du2_(std::max(n_ - 2, 1)), ipiv_(n_) {
    int info = 0;
    dgttrf_(&n_, dl_.data(), d_.data(), du_.data(), du2_.data(), ipiv_.data(), &info);
    if (info != 0)
      throw SolverError("tridiagonal factorization failed (dgttrf info = " + std::to_string(info) +
                        ")");
  }

  int size() const { return n_; }

  /// Solves A x = b (or A^T x = b) in place.
  void solve_in_place(std::span<double> b, bool transpose = false) const {
    if (static_cast<int>(b.size()) != n_) throw DimensionError("tridiagonal solve: size mismatch");
    const char trans = transpose ? 'T' : 'N';
    const int nrhs = 1;
    int info = 0;
    dgttrs_(&trans, &n_, &nrhs, dl_.data(), d_.data(), du_.data(), du2_.data(), ipiv_.data(),
            b.data(), &n_, &info);
    if (info != 0) throw SolverError("tridiagonal solve failed");
  }

 private:
  int n_ = 0;
  std::vector<double> dl_, d_, du_, du2_;
  std::vector<int> ipiv_;
};

}  // namespace advdiff
