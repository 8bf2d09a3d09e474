#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace selfheal {

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Square matrix in compressed-row layout. Column indices are sorted within
/// each row.
class CsrMatrix {
public:
    CsrMatrix() = default;
    CsrMatrix(std::size_t dim, std::vector<std::size_t> row_offsets, std::vector<std::size_t> col_indices,
              std::vector<double> values);

    /// Duplicate (row, col) entries are summed.
    static CsrMatrix from_triplets(std::size_t dim, std::span<const Triplet> triplets);
    static CsrMatrix identity(std::size_t dim);

    std::size_t dim() const { return dim_; }
    std::size_t nnz() const { return values_.size(); }

    const std::vector<std::size_t>& row_offsets() const { return row_offsets_; }
    const std::vector<std::size_t>& col_indices() const { return col_indices_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    /// Entry (i, j), zero when structurally absent.
    double at(std::size_t i, std::size_t j) const;
    /// Slot of (i, j) in values(), or nnz() when absent.
    std::size_t find(std::size_t i, std::size_t j) const;

    void multiply(std::span<const double> x, std::span<double> y) const;
    std::vector<double> operator*(std::span<const double> x) const;

    bool same_pattern(const CsrMatrix& other) const;
    /// this += scale * other; patterns must match.
    void add_scaled(const CsrMatrix& other, double scale);

    double sum() const;
    std::vector<double> diagonal() const;

private:
    std::size_t dim_ = 0;
    std::vector<std::size_t> row_offsets_{0};
    std::vector<std::size_t> col_indices_;
    std::vector<double> values_;
};

struct SolverOptions {
    double rel_tol = 1e-10;
    /// 0 selects 10 * dim.
    int max_iterations = 0;
};

struct SolveReport {
    int iterations = 0;
    double residual_norm = 0.0;
    double rhs_norm = 0.0;
};

/// Jacobi-preconditioned conjugate gradients. `x` holds the initial guess on
/// entry and the solution on exit, with ||Ax - b|| <= rel_tol * ||b||.
/// Throws SolverDivergence when the iteration cap is reached.
SolveReport solve_spd(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                      const SolverOptions& options = {});

std::vector<double> solve_spd(const CsrMatrix& a, std::span<const double> b, double rel_tol = 1e-10);

/// Cholesky factor of an SPD matrix stored in a symmetric band. Suited to
/// the structured meshes here, where row-major numbering keeps the half
/// bandwidth at n_div + 2.
class BandedCholesky {
public:
    /// Throws InvalidField when the matrix is not positive definite.
    explicit BandedCholesky(const CsrMatrix& a);

    std::size_t dim() const { return dim_; }
    std::size_t bandwidth() const { return band_; }

    void solve(std::span<const double> b, std::span<double> x) const;
    std::vector<double> solve(std::span<const double> b) const;

private:
    double& at(std::size_t i, std::size_t j) { return l_[i * (band_ + 1) + (band_ + j - i)]; }
    double at(std::size_t i, std::size_t j) const { return l_[i * (band_ + 1) + (band_ + j - i)]; }

    std::size_t dim_ = 0;
    std::size_t band_ = 0;
    std::vector<double> l_;  // row i holds L(i, i-band .. i)
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace selfheal
