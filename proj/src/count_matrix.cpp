#include "recipemeta/count_matrix.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace recipemeta {

CountMatrix::CountMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

CountMatrix::CountMatrix(std::size_t rows, std::size_t cols, std::vector<std::uint64_t> row_ptr,
                         std::vector<LocalId> col_idx, std::vector<std::uint64_t> values)
    : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
    if (row_ptr_.size() != rows_ + 1 || col_idx_.size() != values_.size() || row_ptr_.back() != col_idx_.size()) {
        throw std::invalid_argument("CountMatrix: inconsistent CSR arrays");
    }
}

CountMatrix CountMatrix::from_dense(std::size_t rows, std::size_t cols, std::span<const std::uint64_t> dense) {
    if (dense.size() != rows * cols) throw std::invalid_argument("CountMatrix::from_dense: size mismatch");
    CountMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            if (auto v = dense[i * cols + j]; v != 0) {
                m.col_idx_.push_back(static_cast<LocalId>(j));
                m.values_.push_back(v);
            }
        }
        m.row_ptr_[i + 1] = m.col_idx_.size();
    }
    return m;
}

std::uint64_t CountMatrix::at(LocalId r, LocalId c) const {
    auto cols = row_cols(r);
    auto it = std::lower_bound(cols.begin(), cols.end(), c);
    if (it == cols.end() || *it != c) return 0;
    return row_values(r)[static_cast<std::size_t>(it - cols.begin())];
}

CountMatrix CountMatrix::transpose() const {
    CountMatrix t(cols_, rows_);
    t.col_idx_.resize(nnz());
    t.values_.resize(nnz());
    for (auto c : col_idx_) t.row_ptr_[c + 1]++;
    for (std::size_t i = 0; i < cols_; ++i) t.row_ptr_[i + 1] += t.row_ptr_[i];
    std::vector<std::uint64_t> cursor(t.row_ptr_.begin(), t.row_ptr_.end() - 1);
    // rows visited in order, so each transposed row receives ascending columns
    for (LocalId r = 0; r < rows_; ++r) {
        for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            auto pos = cursor[col_idx_[k]]++;
            t.col_idx_[pos] = r;
            t.values_[pos] = values_[k];
        }
    }
    return t;
}

std::vector<std::uint64_t> CountMatrix::diagonal() const {
    std::vector<std::uint64_t> d(std::min(rows_, cols_), 0);
    for (LocalId i = 0; i < d.size(); ++i) d[i] = at(i, i);
    return d;
}

std::vector<std::uint64_t> CountMatrix::to_dense() const {
    std::vector<std::uint64_t> d(rows_ * cols_, 0);
    for (LocalId r = 0; r < rows_; ++r) {
        for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) d[r * cols_ + col_idx_[k]] = values_[k];
    }
    return d;
}

CountMatrix multiply(const CountMatrix& a, const CountMatrix& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("multiply: inner dimensions differ (" + std::to_string(a.rows()) + "x" +
                                    std::to_string(a.cols()) + " * " + std::to_string(b.rows()) + "x" +
                                    std::to_string(b.cols()) + ")");
    }
    // Gustavson row-by-row product with a dense accumulator.
    std::vector<std::uint64_t> acc(b.cols(), 0);
    std::vector<char> seen(b.cols(), 0);
    std::vector<LocalId> touched;
    std::vector<std::uint64_t> row_ptr{0};
    std::vector<LocalId> col_idx;
    std::vector<std::uint64_t> values;
    row_ptr.reserve(a.rows() + 1);

    for (LocalId i = 0; i < a.rows(); ++i) {
        touched.clear();
        auto a_cols = a.row_cols(i);
        auto a_vals = a.row_values(i);
        for (std::size_t p = 0; p < a_cols.size(); ++p) {
            auto k = a_cols[p];
            auto b_cols = b.row_cols(k);
            auto b_vals = b.row_values(k);
            for (std::size_t q = 0; q < b_cols.size(); ++q) {
                std::uint64_t term;
                if (__builtin_mul_overflow(a_vals[p], b_vals[q], &term) ||
                    __builtin_add_overflow(acc[b_cols[q]], term, &acc[b_cols[q]])) {
                    throw std::overflow_error("path count overflow at row " + std::to_string(i));
                }
                if (!seen[b_cols[q]]) {
                    seen[b_cols[q]] = 1;
                    touched.push_back(b_cols[q]);
                }
            }
        }
        std::sort(touched.begin(), touched.end());
        for (auto c : touched) {
            if (acc[c] != 0) {
                col_idx.push_back(c);
                values.push_back(acc[c]);
            }
            acc[c] = 0;
            seen[c] = 0;
        }
        row_ptr.push_back(col_idx.size());
    }
    return CountMatrix(a.rows(), b.cols(), std::move(row_ptr), std::move(col_idx), std::move(values));
}

CountMatrix adjacency_matrix(const HeteIN& g, RelationId rel) {
    const auto& r = g.relation(rel);
    const auto& fwd = g.forward(rel);
    std::vector<std::uint64_t> row_ptr(fwd.row_ptr.begin(), fwd.row_ptr.end());
    std::vector<std::uint64_t> ones(fwd.nnz(), 1);
    return CountMatrix(g.num_nodes(r.src_type), g.num_nodes(r.dst_type), std::move(row_ptr), fwd.cols,
                       std::move(ones));
}

}  // namespace recipemeta
