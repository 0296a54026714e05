#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace thermnet {

// Dense row-major matrix with LU solve; sized for networks of at most a few
// hundred nodes, where direct factorization is the simplest adequate choice.
template <typename T>
class Matrix {
  public:
    Matrix() = default;
    Matrix(int rows, int cols, T value = T{}) : rows_(rows), cols_(cols), a_(rows * cols, value) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    T& operator()(int r, int c) { return a_[r * cols_ + c]; }
    const T& operator()(int r, int c) const { return a_[r * cols_ + c]; }

  private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> a_;
};

class SingularMatrixError : public std::runtime_error {
  public:
    explicit SingularMatrixError(int column)
        : std::runtime_error("singular matrix at column " + std::to_string(column)),
          column_(column) {}
    int column() const { return column_; }

  private:
    int column_;
};

// In-place LU decomposition with partial pivoting. Throws SingularMatrixError
// carrying the structurally deficient column.
template <typename T>
class LuDecomposition {
  public:
    explicit LuDecomposition(Matrix<T> a) : lu_(std::move(a)), piv_(lu_.rows()) {
        const int n = lu_.rows();
        if (lu_.cols() != n) throw std::logic_error("LU needs a square matrix");
        for (int i = 0; i < n; ++i) piv_[i] = i;
        for (int k = 0; k < n; ++k) {
            int p = k;
            double best = std::abs(lu_(k, k));
            for (int i = k + 1; i < n; ++i) {
                const double v = std::abs(lu_(i, k));
                if (v > best) { best = v; p = i; }
            }
            if (!(best > 0.0) || !std::isfinite(best)) throw SingularMatrixError(k);
            if (p != k) {
                for (int j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
                std::swap(piv_[k], piv_[p]);
            }
            const T pivot = lu_(k, k);
            for (int i = k + 1; i < n; ++i) {
                const T m = lu_(i, k) / pivot;
                lu_(i, k) = m;
                for (int j = k + 1; j < n; ++j) lu_(i, j) -= m * lu_(k, j);
            }
        }
    }

    std::vector<T> solve(const std::vector<T>& b) const {
        const int n = lu_.rows();
        std::vector<T> x(n);
        for (int i = 0; i < n; ++i) x[i] = b[piv_[i]];
        for (int i = 1; i < n; ++i)
            for (int j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
        for (int i = n - 1; i >= 0; --i) {
            for (int j = i + 1; j < n; ++j) x[i] -= lu_(i, j) * x[j];
            x[i] /= lu_(i, i);
        }
        return x;
    }

  private:
    Matrix<T> lu_;
    std::vector<int> piv_;
};

template <typename T>
std::vector<T> lu_solve(Matrix<T> a, const std::vector<T>& b) {
    return LuDecomposition<T>(std::move(a)).solve(b);
}

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace thermnet
