#include "selfheal/sparse.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "selfheal/error.hpp"

namespace selfheal {

CsrMatrix::CsrMatrix(std::size_t dim, std::vector<std::size_t> row_offsets, std::vector<std::size_t> col_indices,
                     std::vector<double> values)
    : dim_(dim),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
    if (row_offsets_.size() != dim_ + 1 || col_indices_.size() != values_.size() ||
        row_offsets_.back() != values_.size())
        throw std::invalid_argument("CsrMatrix: inconsistent compressed-row arrays");
}

CsrMatrix CsrMatrix::from_triplets(std::size_t dim, std::span<const Triplet> triplets) {
    std::vector<Triplet> sorted(triplets.begin(), triplets.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    std::vector<std::size_t> offsets(dim + 1, 0);
    std::vector<std::size_t> cols;
    std::vector<double> vals;
    cols.reserve(sorted.size());
    vals.reserve(sorted.size());
    for (std::size_t k = 0; k < sorted.size();) {
        const auto& t = sorted[k];
        if (t.row >= dim || t.col >= dim) throw std::out_of_range("CsrMatrix: triplet index out of range");
        double v = 0.0;
        std::size_t m = k;
        for (; m < sorted.size() && sorted[m].row == t.row && sorted[m].col == t.col; ++m) v += sorted[m].value;
        cols.push_back(t.col);
        vals.push_back(v);
        ++offsets[t.row + 1];
        k = m;
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    return CsrMatrix(dim, std::move(offsets), std::move(cols), std::move(vals));
}

CsrMatrix CsrMatrix::identity(std::size_t dim) {
    std::vector<std::size_t> offsets(dim + 1);
    std::vector<std::size_t> cols(dim);
    std::iota(offsets.begin(), offsets.end(), std::size_t{0});
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    return CsrMatrix(dim, std::move(offsets), std::move(cols), std::vector<double>(dim, 1.0));
}

std::size_t CsrMatrix::find(std::size_t i, std::size_t j) const {
    const auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
    const auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return nnz();
    return static_cast<std::size_t>(it - col_indices_.begin());
}

double CsrMatrix::at(std::size_t i, std::size_t j) const {
    const std::size_t slot = find(i, j);
    return slot == nnz() ? 0.0 : values_[slot];
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    assert(x.size() == dim_ && y.size() == dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
        double acc = 0.0;
        for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) acc += values_[k] * x[col_indices_[k]];
        y[i] = acc;
    }
}

std::vector<double> CsrMatrix::operator*(std::span<const double> x) const {
    std::vector<double> y(dim_);
    multiply(x, y);
    return y;
}

bool CsrMatrix::same_pattern(const CsrMatrix& other) const {
    return dim_ == other.dim_ && row_offsets_ == other.row_offsets_ && col_indices_ == other.col_indices_;
}

void CsrMatrix::add_scaled(const CsrMatrix& other, double scale) {
    if (!same_pattern(other)) throw std::invalid_argument("CsrMatrix::add_scaled: sparsity patterns differ");
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += scale * other.values_[k];
}

double CsrMatrix::sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

std::vector<double> CsrMatrix::diagonal() const {
    std::vector<double> d(dim_, 0.0);
    for (std::size_t i = 0; i < dim_; ++i) d[i] = at(i, i);
    return d;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

SolveReport solve_spd(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                      const SolverOptions& options) {
    const std::size_t n = a.dim();
    if (b.size() != n || x.size() != n) throw std::invalid_argument("solve_spd: size mismatch");
    if (!(options.rel_tol > 0.0 && options.rel_tol < 1.0))
        throw InvalidConfiguration("solve_spd: rel_tol must lie in (0, 1)");

    SolveReport report;
    report.rhs_norm = norm2(b);
    if (report.rhs_norm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return report;
    }
    const double target = options.rel_tol * report.rhs_norm;
    const int cap = options.max_iterations > 0 ? options.max_iterations : static_cast<int>(10 * n);

    std::vector<double> inv_diag = a.diagonal();
    for (double& v : inv_diag) {
        if (!(v > 0.0)) throw InvalidField("solve_spd: non-positive diagonal entry");
        v = 1.0 / v;
    }

    std::vector<double> r(n), z(n), p(n), q(n);
    auto true_residual = [&] {
        a.multiply(x, q);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
        return norm2(r);
    };

    double res = true_residual();
    int iter = 0;
    // The outer loop restarts from the true residual whenever the recursive
    // one has drifted below target but the true one has not.
    while (res > target && iter < cap) {
        const int iter_before = iter;
        for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        p = z;
        double rz = dot(r, z);
        while (iter < cap) {
            a.multiply(p, q);
            const double pq = dot(p, q);
            if (!(pq > 0.0)) break;
            const double step = rz / pq;
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += step * p[i];
                r[i] -= step * q[i];
            }
            ++iter;
            if (norm2(r) <= target) break;
            for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
            const double rz_next = dot(r, z);
            const double beta = rz_next / rz;
            rz = rz_next;
            for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        }
        res = true_residual();
        if (!std::isfinite(res) || iter == iter_before) break;
    }
    report.iterations = iter;
    report.residual_norm = res;
    if (!(res <= target)) {
        std::ostringstream msg;
        msg << "conjugate gradients stopped after " << iter << " iterations with residual " << res
            << " (target " << target << ")";
        throw SolverDivergence(msg.str(), res, iter);
    }
    return report;
}

BandedCholesky::BandedCholesky(const CsrMatrix& a) : dim_(a.dim()) {
    const auto& offsets = a.row_offsets();
    const auto& cols = a.col_indices();
    for (std::size_t i = 0; i < dim_; ++i)
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k)
            if (cols[k] < i) band_ = std::max(band_, i - cols[k]);

    l_.assign(dim_ * (band_ + 1), 0.0);
    const auto& values = a.values();
    for (std::size_t i = 0; i < dim_; ++i)
        for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k)
            if (cols[k] <= i) at(i, cols[k]) = values[k];

    for (std::size_t i = 0; i < dim_; ++i) {
        const std::size_t lo = i > band_ ? i - band_ : 0;
        for (std::size_t j = lo; j <= i; ++j) {
            const std::size_t start = std::max(lo, j > band_ ? j - band_ : 0);
            double acc = at(i, j);
            for (std::size_t k = start; k < j; ++k) acc -= at(i, k) * at(j, k);
            if (j == i) {
                if (!(acc > 0.0)) throw InvalidField("BandedCholesky: matrix is not positive definite");
                at(i, i) = std::sqrt(acc);
            } else {
                at(i, j) = acc / at(j, j);
            }
        }
    }
}

void BandedCholesky::solve(std::span<const double> b, std::span<double> x) const {
    if (b.size() != dim_ || x.size() != dim_) throw std::invalid_argument("BandedCholesky::solve: size mismatch");
    for (std::size_t i = 0; i < dim_; ++i) {
        const std::size_t lo = i > band_ ? i - band_ : 0;
        double acc = b[i];
        for (std::size_t k = lo; k < i; ++k) acc -= at(i, k) * x[k];
        x[i] = acc / at(i, i);
    }
    for (std::size_t ii = dim_; ii-- > 0;) {
        const std::size_t hi = std::min(dim_ - 1, ii + band_);
        double acc = x[ii];
        for (std::size_t k = ii + 1; k <= hi; ++k) acc -= at(k, ii) * x[k];
        x[ii] = acc / at(ii, ii);
    }
}

std::vector<double> BandedCholesky::solve(std::span<const double> b) const {
    std::vector<double> x(dim_);
    solve(b, x);
    return x;
}

std::vector<double> solve_spd(const CsrMatrix& a, std::span<const double> b, double rel_tol) {
    std::vector<double> x(a.dim(), 0.0);
    solve_spd(a, b, x, SolverOptions{rel_tol, 0});
    return x;
}

}  // namespace selfheal
