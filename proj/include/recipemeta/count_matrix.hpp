#pragma once

#include "recipemeta/hetein.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace recipemeta {

/// Sparse non-negative integer matrix in CSR form. Column indices are sorted
/// within each row and only non-zero values are stored.
class CountMatrix {
public:
    CountMatrix() = default;
    CountMatrix(std::size_t rows, std::size_t cols);
    CountMatrix(std::size_t rows, std::size_t cols, std::vector<std::uint64_t> row_ptr,
                std::vector<LocalId> col_idx, std::vector<std::uint64_t> values);

    static CountMatrix from_dense(std::size_t rows, std::size_t cols, std::span<const std::uint64_t> dense);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return col_idx_.size(); }

    std::uint64_t at(LocalId r, LocalId c) const;
    std::span<const LocalId> row_cols(LocalId r) const {
        return {col_idx_.data() + row_ptr_[r], col_idx_.data() + row_ptr_[r + 1]};
    }
    std::span<const std::uint64_t> row_values(LocalId r) const {
        return {values_.data() + row_ptr_[r], values_.data() + row_ptr_[r + 1]};
    }

    CountMatrix transpose() const;
    std::vector<std::uint64_t> diagonal() const;
    std::vector<std::uint64_t> to_dense() const;

    friend bool operator==(const CountMatrix&, const CountMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint64_t> row_ptr_{0};
    std::vector<LocalId> col_idx_;
    std::vector<std::uint64_t> values_;
};

/// Exact sparse product. Throws std::overflow_error if any partial sum exceeds 2^64-1.
CountMatrix multiply(const CountMatrix& a, const CountMatrix& b);

/// Binary adjacency of one relation, |V_src| x |V_dst|.
CountMatrix adjacency_matrix(const HeteIN& g, RelationId rel);

}  // namespace recipemeta
